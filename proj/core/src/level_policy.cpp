#include "condconf/level_policy.hpp"

#include "condconf/conformal.hpp"
#include "condconf/errors.hpp"
#include "condconf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace condconf {

double alpha_star(const std::vector<double>& grid, const std::vector<int>& quality_by_level) {
  if (grid.empty()) throw ValidationError("alpha grid is empty");
  if (quality_by_level.size() != grid.size()) {
    throw ValidationError("quality vector and alpha grid differ in length");
  }
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ValidationError("alpha grid must be strictly ascending");
  }
  // scan from the top while Q stays 1
  std::size_t k = grid.size();
  while (k > 0 && quality_by_level[k - 1] != 0) --k;
  return k == grid.size() ? 1.0 : grid[k];
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid(99);
  for (int k = 0; k < 99; ++k) grid[k] = (k + 1) / 100.0;
  return grid;
}

std::vector<double> even_alpha_grid(int count) {
  if (count < 1) throw ValidationError("grid needs at least one level");
  std::vector<double> grid(count);
  for (int k = 0; k < count; ++k) grid[k] = (k + 1) / static_cast<double>(count + 1);
  return grid;
}

double LevelFunction::evaluate(const Vector& features) const {
  if (features.size() != coefficients.size()) {
    throw ValidationError("level function feature dimension mismatch");
  }
  return std::clamp(features.dot(coefficients), lo, hi);
}

Vector LevelFunction::evaluate(const FeatureMatrix& features) const {
  if (features.cols() != coefficients.size()) {
    throw ValidationError("level function feature dimension mismatch");
  }
  Vector raw = features.values() * coefficients;
  return raw.unaryExpr([&](double a) { return std::clamp(a, lo, hi); });
}

LevelEstimate estimate_level_function(const LevelEstimationData& data,
                                      const LevelEstimateOptions& options) {
  const Index n = data.features.rows();
  const Index d = data.features.cols();
  if (data.scores.size() != n) throw ValidationError("scores and features differ in row count");
  if (!data.measure) throw ValidationError("level estimation needs a quality measure");
  if (!(options.fit_quantile > 0.0 && options.fit_quantile < 1.0)) {
    throw ValidationError("fit_quantile must lie in (0, 1)");
  }
  if (!(options.lo > 0.0 && options.lo <= options.hi && options.hi < 1.0)) {
    throw ValidationError("truncation must satisfy 0 < lo <= hi < 1");
  }
  for (double a : options.grid) {
    if (!(a > 0.0 && a < 1.0)) throw ValidationError("grid levels must lie in (0, 1)");
  }
  if (!data.ids.empty() && !data.reserved_ids.empty()) {
    std::unordered_set<std::string> reserved(data.reserved_ids.begin(), data.reserved_ids.end());
    for (const auto& id : data.ids) {
      if (reserved.count(id)) {
        throw ValidationError("record '" + id + "' is used for both level estimation and calibration");
      }
    }
  }

  LevelEstimate out;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = make_rng(derive_seed(options.seed, "level-folds"));
  std::shuffle(order.begin(), order.end(), rng);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  out.fold1.assign(order.begin(), order.begin() + half);
  out.fold2.assign(order.begin() + half, order.end());
  if (static_cast<Index>(out.fold1.size()) < 5 * d || static_cast<Index>(out.fold2.size()) < 5 * d) {
    throw InsufficientDataError("each level-estimation fold needs at least 5 d = " +
                                std::to_string(5 * d) + " points");
  }
  std::sort(out.fold1.begin(), out.fold1.end());
  std::sort(out.fold2.begin(), out.fold2.end());

  const FeatureMatrix x1 = data.features.select_rows(out.fold1);
  Vector s1(static_cast<Index>(out.fold1.size()));
  for (std::size_t i = 0; i < out.fold1.size(); ++i) s1[static_cast<Index>(i)] = data.scores[out.fold1[i]];

  const std::size_t m = out.fold2.size();
  std::vector<std::vector<int>> quality(m, std::vector<int>(options.grid.size(), 0));
  for (std::size_t g = 0; g < options.grid.size(); ++g) {
    ConditionalCalibrator cal(x1, s1, LevelVector::constant(x1.rows(), options.grid[g]));
    for (std::size_t j = 0; j < m; ++j) {
      const Index row = out.fold2[j];
      const Cutoff c = cal.nonrandomized(data.features.row(row).transpose(), options.grid[g]);
      quality[j][g] = options.criterion.met(data.measure(row, c.tau)) ? 1 : 0;
    }
  }

  out.alpha_star.resize(static_cast<Index>(m));
  for (std::size_t j = 0; j < m; ++j) out.alpha_star[static_cast<Index>(j)] = alpha_star(options.grid, quality[j]);

  // Pinball level a estimates the (1 - a)-quantile.
  const FeatureMatrix x2 = data.features.select_rows(out.fold2);
  const QRSolution fit = solve_pinball_qr(x2, out.alpha_star,
                                          LevelVector::constant(x2.rows(), 1.0 - options.fit_quantile));
  out.function.coefficients = fit.beta;
  out.function.fit_quantile = options.fit_quantile;
  out.function.lo = options.lo;
  out.function.hi = options.hi;
  return out;
}

int bin_of(const std::vector<double>& edges, double alpha) {
  if (edges.size() < 2) return -1;
  if (alpha < edges.front() || alpha > edges.back()) return -1;
  if (alpha == edges.back()) return static_cast<int>(edges.size()) - 2;
  const auto it = std::upper_bound(edges.begin(), edges.end(), alpha);
  return static_cast<int>(it - edges.begin()) - 1;
}

AlphaFeatureMap::AlphaFeatureMap(std::vector<double> bin_edges, bool linear_alpha,
                                 std::optional<double> square_center)
    : edges_(std::move(bin_edges)), linear_alpha_(linear_alpha), square_center_(square_center) {
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (!(edges_[k] > edges_[k - 1])) throw ValidationError("bin edges must be strictly ascending");
  }
  if (!edges_.empty() && (edges_.front() < 0.0 || edges_.back() > 1.0)) {
    throw ValidationError("bin edges must lie in [0, 1]");
  }
  if (edges_.size() == 1) throw ValidationError("a single bin edge defines no bin");
}

Vector AlphaFeatureMap::candidates(const Vector& base_row, double alpha,
                                   const Vector* group_row) const {
  const Index bins = edges_.empty() ? 0 : static_cast<Index>(edges_.size()) - 1;
  const Index extra = (linear_alpha_ ? 1 : 0) + (square_center_ ? 1 : 0);
  Vector out = Vector::Zero(base_cols_ + bins * (1 + group_count_) + extra);
  out.head(base_cols_) = base_row;
  const int b = bin_of(edges_, alpha);
  if (b >= 0) {
    out[base_cols_ + b] = 1.0;
    for (Index g = 0; g < group_count_; ++g) {
      out[base_cols_ + bins + b * group_count_ + g] = (*group_row)[g];
    }
  }
  Index pos = base_cols_ + bins * (1 + group_count_);
  if (linear_alpha_) out[pos++] = alpha;
  if (square_center_) out[pos] = (alpha - *square_center_) * (alpha - *square_center_);
  return out;
}

std::vector<std::string> AlphaFeatureMap::candidate_names(Index base_cols, Index group_count) const {
  std::vector<std::string> names;
  for (Index j = 0; j < base_cols; ++j) names.push_back("base" + std::to_string(j));
  const Index bins = edges_.empty() ? 0 : static_cast<Index>(edges_.size()) - 1;
  for (Index b = 0; b < bins; ++b) {
    names.push_back("alpha_bin[" + std::to_string(edges_[b]) + "," + std::to_string(edges_[b + 1]) + "]");
  }
  for (Index b = 0; b < bins; ++b) {
    for (Index g = 0; g < group_count; ++g) {
      names.push_back("alpha_bin" + std::to_string(b) + "*group" + std::to_string(g));
    }
  }
  if (linear_alpha_) names.push_back("alpha");
  if (square_center_) names.push_back("(alpha-" + std::to_string(*square_center_) + ")^2");
  return names;
}

FeatureMatrix AlphaFeatureMap::fit(const FeatureMatrix& base, const Vector& alpha_values,
                                   const Matrix* group_cols) {
  const Index n = base.rows();
  if (alpha_values.size() != n) throw ValidationError("alpha values and features differ in row count");
  if (group_cols && group_cols->rows() != n) throw ValidationError("group columns and features differ in row count");
  base_cols_ = base.cols();
  group_count_ = group_cols ? group_cols->cols() : 0;
  warnings_.clear();

  const std::vector<std::string> all_names = candidate_names(base_cols_, group_count_);
  const Index width = static_cast<Index>(all_names.size());
  Matrix cand(n, width);
  for (Index i = 0; i < n; ++i) {
    Vector g;
    if (group_cols) g = group_cols->row(i).transpose();
    cand.row(i) = candidates(base.row(i).transpose(), alpha_values[i], group_cols ? &g : nullptr).transpose();
  }

  // Greedy: keep a column when it is occupied and raises the rank.
  kept_.clear();
  names_.clear();
  Matrix acc(n, 0);
  Index rank = 0;
  for (Index j = 0; j < width; ++j) {
    if (j >= base_cols_ && cand.col(j).cwiseAbs().maxCoeff() == 0.0) {
      warnings_.push_back("dropped empty column " + all_names[j]);
      continue;
    }
    Matrix trial(n, acc.cols() + 1);
    trial << acc, cand.col(j);
    Eigen::ColPivHouseholderQR<Matrix> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() > rank) {
      acc = std::move(trial);
      rank = qr.rank();
      kept_.push_back(j);
      names_.push_back(all_names[j]);
    } else {
      warnings_.push_back("dropped collinear column " + all_names[j]);
    }
  }

  Matrix out(n, static_cast<Index>(kept_.size()));
  for (std::size_t k = 0; k < kept_.size(); ++k) out.col(static_cast<Index>(k)) = cand.col(kept_[k]);
  std::optional<Index> icpt = base.intercept_col();
  if (icpt && std::find(kept_.begin(), kept_.end(), *icpt) == kept_.end()) icpt.reset();
  if (icpt) icpt = static_cast<Index>(std::find(kept_.begin(), kept_.end(), *icpt) - kept_.begin());
  return FeatureMatrix(std::move(out), icpt);
}

Vector AlphaFeatureMap::row(const Vector& base_row, double alpha, const Vector* group_row) const {
  if (base_row.size() != base_cols_) throw ValidationError("base row width does not match the fitted map");
  if (group_count_ > 0 && (!group_row || group_row->size() != group_count_)) {
    throw ValidationError("group row width does not match the fitted map");
  }
  const Vector cand = candidates(base_row, alpha, group_row);
  Vector out(static_cast<Index>(kept_.size()));
  for (std::size_t k = 0; k < kept_.size(); ++k) out[static_cast<Index>(k)] = cand[kept_[k]];
  return out;
}

FeatureMatrix augment_features(const FeatureMatrix& base, const Vector& alpha_values,
                               const std::vector<double>& bin_edges, const Matrix* group_cols,
                               std::vector<std::string>* warnings) {
  AlphaFeatureMap map(bin_edges, false, std::nullopt);
  FeatureMatrix out = map.fit(base, alpha_values, group_cols);
  if (warnings) *warnings = map.warnings();
  return out;
}

}  // namespace condconf
