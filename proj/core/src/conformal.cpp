#include "condconf/conformal.hpp"

#include "condconf/errors.hpp"
#include "condconf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace condconf {

namespace {

constexpr int kMaxEscalations = 48;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha_test must lie in (0, 1)");
}

bool contains_row(const std::vector<Index>& sorted_basis, Index row) {
  return std::binary_search(sorted_basis.begin(), sorted_basis.end(), row);
}

}  // namespace

void ScoredClaimSet::validate() const {
  if (annotations.size() != claim_scores.size()) {
    throw ValidationError("claim scores and annotations differ in length");
  }
  if (!texts.empty() && texts.size() != claim_scores.size()) {
    throw ValidationError("claim texts and scores differ in length");
  }
  for (int a : annotations) {
    if (a != 0 && a != 1) throw ValidationError("annotations must be 0 or 1");
  }
  for (double p : claim_scores) {
    if (!std::isfinite(p)) throw ValidationError("claim scores must be finite");
  }
}

MonotoneLoss MonotoneLoss::count_false(double budget) {
  if (!(budget >= 0.0)) throw ValidationError("loss budget must be non-negative");
  MonotoneLoss loss;
  loss.kind = Kind::count_false;
  loss.budget = budget;
  return loss;
}

MonotoneLoss MonotoneLoss::from_function(SetLoss fn, double budget) {
  if (!(budget >= 0.0)) throw ValidationError("loss budget must be non-negative");
  if (!fn) throw ValidationError("custom loss needs a callable");
  MonotoneLoss loss;
  loss.kind = Kind::custom;
  loss.budget = budget;
  loss.custom = std::move(fn);
  return loss;
}

double MonotoneLoss::evaluate(std::span<const std::size_t> retained,
                              std::span<const int> annotations) const {
  if (kind == Kind::custom) return custom(retained, annotations);
  double count = 0.0;
  for (std::size_t j : retained) count += annotations[j] == 0 ? 1.0 : 0.0;
  return count;
}

std::vector<std::size_t> filter(const ScoredClaimSet& claims, double tau) {
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < claims.claim_scores.size(); ++j) {
    if (claims.claim_scores[j] > tau) kept.push_back(j);
  }
  return kept;
}

double score_from_loss(const ScoredClaimSet& claims, const MonotoneLoss& loss) {
  claims.validate();
  const std::span<const int> w(claims.annotations);
  const std::size_t k = claims.size();

  std::vector<std::size_t> retained;
  const double empty_loss = loss.evaluate(retained, w);
  if (empty_loss != 0.0) throw ContractError("loss of the empty output must be 0");

  // Candidate thresholds are the distinct scores, visited high to low; each step
  // grows the retained set, so losses along the walk must not decrease.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return claims.claim_scores[a] > claims.claim_scores[b];
  });

  // Walk distinct scores high to low. At candidate tau the retained set is
  // everything strictly above it, so the sets are nested and the loss may only grow.
  const bool custom = loss.kind == MonotoneLoss::Kind::custom;
  double previous = empty_loss;
  double answer = claims.claim_scores.empty() ? -kInf : claims.claim_scores[order[0]];
  std::size_t pos = 0;
  while (pos < k) {
    const double tau = claims.claim_scores[order[pos]];
    const double value = pos == 0 ? empty_loss : loss.evaluate(retained, w);
    if (custom && value < previous) throw ContractError("loss decreased as the retained set grew");
    previous = value;
    if (value > loss.budget) {
      if (!custom) return answer;
      // keep walking only to audit monotonicity
      while (pos < k) {
        const double t = claims.claim_scores[order[pos]];
        while (pos < k && claims.claim_scores[order[pos]] == t) retained.push_back(order[pos++]);
        const double v = loss.evaluate(retained, w);
        if (v < previous) throw ContractError("loss decreased as the retained set grew");
        previous = v;
      }
      return answer;
    }
    answer = tau;
    while (pos < k && claims.claim_scores[order[pos]] == tau) retained.push_back(order[pos++]);
  }
  const double full = k == 0 ? empty_loss : loss.evaluate(retained, w);
  if (custom && full < previous) throw ContractError("loss decreased as the retained set grew");
  return full <= loss.budget ? -kInf : answer;
}

Vector finite_conformity_scores(std::span<const double> scores, double floor) {
  if (!std::isfinite(floor)) throw ValidationError("conformity floor must be finite");
  Vector out(static_cast<Index>(scores.size()));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (std::isnan(s) || s == kInf) {
      throw ValidationError("conformity score " + std::to_string(i) + " is NaN or +inf");
    }
    out[static_cast<Index>(i)] = s == -kInf ? floor : s;
  }
  return out;
}

ConditionalCalibrator::ConditionalCalibrator(FeatureMatrix calib_features, Vector calib_scores,
                                             LevelVector calib_levels)
    : n_(calib_features.rows()), d_(calib_features.cols()) {
  if (calib_scores.size() != n_ || calib_levels.size() != n_) {
    throw ValidationError("calibration features, scores and levels must share the row count");
  }
  if (n_ < d_) throw InsufficientDataError("fewer calibration points than feature columns");
  if (!calib_scores.allFinite()) throw ValidationError("calibration scores must be finite");

  aug_x_.resize(n_ + 1, d_);
  aug_x_.topRows(n_) = calib_features.values();
  aug_x_.row(n_).setZero();
  aug_s_.resize(n_ + 1);
  aug_s_.head(n_) = calib_scores;
  aug_s_[n_] = 0.0;
  aug_alpha_.resize(n_ + 1);
  aug_alpha_.head(n_) = calib_levels.values();
  aug_alpha_[n_] = 0.5;

  sorted_scores_ = calib_scores;
  std::sort(sorted_scores_.begin(), sorted_scores_.end());
  const double range = n_ > 0 ? sorted_scores_[n_ - 1] - sorted_scores_[0] : 0.0;
  span_ = range > 0.0 ? range : std::max(1.0, n_ > 0 ? std::abs(sorted_scores_[n_ - 1]) : 1.0);

  calib_fit_ = solve_pinball_lp(aug_x_.topRows(n_), aug_s_.head(n_), aug_alpha_.head(n_), {});
  last_basis_ = calib_fit_.basis;
}

void ConditionalCalibrator::load_test_row(const Vector& x, double alpha_test) {
  check_alpha(alpha_test);
  if (x.size() != d_) throw ValidationError("test feature dimension does not match calibration");
  if (!x.allFinite()) throw ValidationError("test features must be finite");
  aug_x_.row(n_) = x.transpose();
  aug_alpha_[n_] = alpha_test;
  last_basis_ = calib_fit_.basis;
}

Cutoff ConditionalCalibrator::nonrandomized(const Vector& test_features, double alpha_test) {
  load_test_row(test_features, alpha_test);
  SolveOptions opts;
  opts.tie_break = test_features;
  opts.warm_basis = calib_fit_.basis;

  Cutoff out;
  out.alpha_test = alpha_test;
  const double top = sorted_scores_[n_ - 1];
  double imputed = top + span_;
  for (int attempt = 0; attempt <= kMaxEscalations; ++attempt) {
    aug_s_[n_] = imputed;
    QRSolution sol = solve_pinball_lp(aug_x_, aug_s_, aug_alpha_, opts);
    const double fitted = test_features.dot(sol.beta);
    if (!contains_row(sol.basis, n_) && imputed > fitted) {
      out.tau = fitted;
      out.eta_test = 1.0 - alpha_test;
      out.beta = std::move(sol.beta);
      out.basis = std::move(sol.basis);
      return out;
    }
    opts.warm_basis = sol.basis;
    imputed = top + span_ * std::ldexp(1.0, attempt + 1);
  }
  out.tau = kInf;
  out.bounded = false;
  out.eta_test = 1.0 - alpha_test;
  return out;
}

ConditionalCalibrator::DualEval ConditionalCalibrator::eval_dual(double imputed) {
  aug_s_[n_] = imputed;
  SolveOptions opts;
  opts.warm_basis = last_basis_;
  QRSolution sol = solve_pinball_lp(aug_x_, aug_s_, aug_alpha_, opts);
  last_basis_ = sol.basis;
  const double eta = sol.duals[n_];
  return {eta, std::move(sol)};
}

double ConditionalCalibrator::test_dual(const Vector& test_features, double alpha_test,
                                        double imputed) {
  load_test_row(test_features, alpha_test);
  return eval_dual(imputed).eta;
}

double ConditionalCalibrator::next_breakpoint(const QRSolution& sol, double imputed) const {
  const Vector x = aug_x_.row(n_).transpose();
  if (!contains_row(sol.basis, n_)) {
    // Test row below the fit: its residual reaches zero when S meets the fit.
    return sol.duals[n_] <= -aug_alpha_[n_] + 1e-12 ? x.dot(sol.beta) : imputed;
  }
  // Test row interpolated: beta moves linearly with S until a nonbasic residual hits zero.
  const auto pos = std::lower_bound(sol.basis.begin(), sol.basis.end(), n_) - sol.basis.begin();
  Eigen::PartialPivLU<Matrix> lu(basis_matrix(aug_x_, sol.basis));
  const Vector z = lu.solve(Vector::Unit(d_, static_cast<Index>(pos)));
  const Vector slope = aug_x_.topRows(n_) * z;
  const Vector resid = aug_s_.head(n_) - aug_x_.topRows(n_) * sol.beta;
  const double tiny = 1e-12 * (1.0 + span_);
  double step = kInf;
  for (Index j = 0; j < n_; ++j) {
    if (contains_row(sol.basis, j)) continue;
    const double dr = -slope[j];
    if (std::abs(resid[j]) <= tiny || std::abs(dr) < 1e-14) continue;
    if (resid[j] * dr < 0.0) step = std::min(step, -resid[j] / dr);
  }
  return imputed + step;
}

Cutoff ConditionalCalibrator::randomized(const Vector& test_features, double alpha_test, double u) {
  check_alpha(alpha_test);
  if (!(u >= -alpha_test - 1e-12 && u <= 1.0 - alpha_test + 1e-12)) {
    throw ValidationError("randomization draw lies outside [-alpha, 1 - alpha]");
  }
  Cutoff nr = nonrandomized(test_features, alpha_test);
  nr.randomized = true;
  nr.u = u;
  if (u >= 1.0 - alpha_test) return nr;

  Cutoff out;
  out.randomized = true;
  out.u = u;
  out.alpha_test = alpha_test;
  last_basis_ = calib_fit_.basis;

  const double bottom = sorted_scores_[0];
  const double top = sorted_scores_[n_ - 1];
  double hi = nr.tau;
  if (!nr.bounded) {
    bool found = false;
    for (int attempt = 0; attempt <= kMaxEscalations && !found; ++attempt) {
      const double s = top + span_ * std::ldexp(1.0, attempt);
      if (eval_dual(s).eta > u) {
        hi = s;
        found = true;
      }
    }
    if (!found) {
      out.tau = kInf;
      out.bounded = false;
      out.eta_test = u;
      return out;
    }
  }

  double lo = std::min(bottom, hi) - span_;
  DualEval lo_eval = eval_dual(lo);
  for (int attempt = 1; lo_eval.eta > u; ++attempt) {
    if (attempt > kMaxEscalations) {
      out.tau = -kInf;
      out.eta_test = lo_eval.eta;
      return out;
    }
    lo = std::min(bottom, hi) - span_ * std::ldexp(1.0, attempt);
    lo_eval = eval_dual(lo);
  }

  // Coarse bracket on the sorted calibration scores.
  auto first = std::upper_bound(sorted_scores_.begin(), sorted_scores_.end(), lo);
  auto last = std::lower_bound(sorted_scores_.begin(), sorted_scores_.end(), hi);
  while (first < last) {
    auto mid = first + (last - first) / 2;
    DualEval e = eval_dual(*mid);
    if (e.eta <= u) {
      lo = *mid;
      lo_eval = std::move(e);
      first = mid + 1;
    } else {
      hi = *mid;
      last = mid;
    }
  }

  const double tol = 1e-8 * span_;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    DualEval e = eval_dual(mid);
    if (e.eta <= u) {
      lo = mid;
      lo_eval = std::move(e);
    } else {
      hi = mid;
    }
  }

  // The dual is constant until the next breakpoint of the lower solution, so
  // the threshold is that breakpoint whenever it falls inside the bracket.
  const double bp = next_breakpoint(lo_eval.solution, lo);
  out.tau = std::clamp(bp, lo, hi);
  out.eta_test = lo_eval.eta;
  return out;
}

double draw_randomization(double alpha_test, std::uint64_t seed) {
  check_alpha(alpha_test);
  Rng rng = make_rng(seed);
  return uniform(rng, -alpha_test, 1.0 - alpha_test);
}

Cutoff cutoff_nonrandomized(const FeatureMatrix& calib_features, const Vector& calib_scores,
                            const LevelVector& calib_levels, const Vector& test_features,
                            double alpha_test) {
  ConditionalCalibrator cal(calib_features, calib_scores, calib_levels);
  return cal.nonrandomized(test_features, alpha_test);
}

Cutoff cutoff_randomized(const FeatureMatrix& calib_features, const Vector& calib_scores,
                         const LevelVector& calib_levels, const Vector& test_features,
                         double alpha_test, std::uint64_t seed) {
  ConditionalCalibrator cal(calib_features, calib_scores, calib_levels);
  return cal.randomized(test_features, alpha_test, draw_randomization(alpha_test, seed));
}

double split_conformal_quantile(std::span<const double> scores, double alpha) {
  check_alpha(alpha);
  const std::size_t n = scores.size();
  const double rank = std::ceil((1.0 - alpha) * static_cast<double>(n + 1) - 1e-9);
  if (rank > static_cast<double>(n) || n == 0) return kInf;
  std::vector<double> copy(scores.begin(), scores.end());
  const auto k = static_cast<std::size_t>(std::max(rank, 1.0)) - 1;
  std::nth_element(copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(k), copy.end());
  return copy[k];
}

Interval predict_interval(ScoreFamily family, const Vector& x, const Vector& theta, double tau) {
  if (std::isnan(tau)) throw ValidationError("cutoff is NaN");
  double half = tau;
  if (family == ScoreFamily::scaled) {
    if (x.size() != theta.size()) throw ValidationError("x and theta differ in dimension");
    const double scale = std::abs(x.dot(theta));
    if (scale == 0.0) throw ValidationError("degenerate score: x' theta = 0");
    half = tau * scale;
  }
  Interval out;
  if (half < 0.0) return out;
  out.lo = -half;
  out.hi = half;
  out.empty = false;
  return out;
}

}  // namespace condconf
