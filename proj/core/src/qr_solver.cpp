#include "condconf/qr_solver.hpp"

#include "condconf/errors.hpp"
#include "condconf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace condconf {

namespace {

constexpr double kSingularRcond = 1e-13;
constexpr double kPivotTiny = 1e-12;

// Internal signals; converted to public errors (or a dithered retry) at the boundary.
struct StallSignal {};
struct SingularSignal {};

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// Greedy choice of d linearly independent rows, visited in order of closeness of
// their score rank to the target quantile so the starting vertex is near optimal.
std::vector<Index> crash_basis(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& S,
                               const Eigen::Ref<const Vector>& alphas) {
  const Index m = X.rows();
  const Index d = X.cols();
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return S[a] < S[b]; });
  const double target = (1.0 - alphas.mean()) * static_cast<double>(m - 1);
  std::vector<Index> by_closeness(order.size());
  std::iota(by_closeness.begin(), by_closeness.end(), Index{0});
  std::stable_sort(by_closeness.begin(), by_closeness.end(), [&](Index a, Index b) {
    return std::abs(static_cast<double>(a) - target) < std::abs(static_cast<double>(b) - target);
  });

  std::vector<Index> chosen;
  Matrix q(d, d);
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  for (double threshold : {1e-3, 1e-9}) {
    for (Index pos : by_closeness) {
      if (static_cast<Index>(chosen.size()) == d) break;
      const Index row = order[static_cast<std::size_t>(pos)];
      if (taken[static_cast<std::size_t>(row)]) continue;
      Vector v = X.row(row).transpose();
      const double norm = v.norm();
      if (norm == 0.0) continue;
      const Index k = static_cast<Index>(chosen.size());
      for (int pass = 0; pass < 2; ++pass) {
        for (Index c = 0; c < k; ++c) v -= q.col(c).dot(v) * q.col(c);
      }
      const double rest = v.norm();
      if (rest > threshold * norm) {
        q.col(k) = v / rest;
        chosen.push_back(row);
        taken[static_cast<std::size_t>(row)] = 1;
      }
    }
  }
  if (static_cast<Index>(chosen.size()) < d) {
    throw DegenerateDesignError("feature matrix has rank " + std::to_string(chosen.size()) +
                                " < " + std::to_string(d) + " columns");
  }
  return chosen;
}

bool usable_warm_basis(const std::vector<Index>& basis, Index m, Index d) {
  if (static_cast<Index>(basis.size()) != d) return false;
  std::vector<Index> sorted = basis;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  return sorted.front() >= 0 && sorted.back() < m;
}

struct Breakpoint {
  double t;
  Index row;
};

QRSolution run_simplex(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& S,
                       const Eigen::Ref<const Vector>& alphas, const SolveOptions& options,
                       bool use_warm) {
  const Index m = X.rows();
  const Index d = X.cols();

  std::vector<Index> basis;
  Eigen::PartialPivLU<Matrix> lu;
  Matrix xb(d, d);
  if (use_warm && usable_warm_basis(options.warm_basis, m, d)) {
    basis = options.warm_basis;
    for (Index k = 0; k < d; ++k) xb.row(k) = X.row(basis[static_cast<std::size_t>(k)]);
    lu.compute(xb);
    if (!(lu.rcond() > kSingularRcond)) basis.clear();
  }
  if (basis.empty()) basis = crash_basis(X, S, alphas);

  std::vector<char> in_basis(static_cast<std::size_t>(m), 0);
  for (Index b : basis) in_basis[static_cast<std::size_t>(b)] = 1;
  // Nonbasic rows sit at the upper (+1, eta = 1 - a) or lower (-1, eta = -a) bound.
  std::vector<signed char> side(static_cast<std::size_t>(m), -1);

  const double tol_r = 1e-11 * (1.0 + S.cwiseAbs().maxCoeff());
  const double tol_f = options.feasibility_tol;
  const int cap = options.max_iterations > 0 ? options.max_iterations
                                             : static_cast<int>(20 * (m + d) + 200);

  Vector sb(d), beta(d), eta_b(d), z(d), w(m), r(m), bound_eta(m), tie_y;
  std::vector<Breakpoint> breaks;
  breaks.reserve(static_cast<std::size_t>(m));

  int iter = 0;
  for (;; ++iter) {
    if (iter > cap) throw StallSignal{};
    for (Index k = 0; k < d; ++k) {
      const Index b = basis[static_cast<std::size_t>(k)];
      xb.row(k) = X.row(b);
      sb[k] = S[b];
    }
    lu.compute(xb);
    if (!(lu.rcond() > kSingularRcond)) throw SingularSignal{};
    beta = lu.solve(sb);
    r.noalias() = S - X * beta;

    for (Index j = 0; j < m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (in_basis[ju]) {
        r[j] = 0.0;
        bound_eta[j] = 0.0;
        continue;
      }
      if (r[j] > tol_r) side[ju] = 1;
      else if (r[j] < -tol_r) side[ju] = -1;
      bound_eta[j] = side[ju] > 0 ? 1.0 - alphas[j] : -alphas[j];
    }
    eta_b = lu.transpose().solve(-(X.transpose() * bound_eta));

    // Leaving row: the basic dual furthest outside its box.
    Index leave = -1;
    int dir = 0;
    double slope0 = 0.0;
    double worst = tol_f;
    for (Index k = 0; k < d; ++k) {
      const Index b = basis[static_cast<std::size_t>(k)];
      const double up = 1.0 - alphas[b];
      const double lo = -alphas[b];
      if (eta_b[k] - up > worst) {
        worst = eta_b[k] - up;
        leave = k;
        dir = 1;
        slope0 = up - eta_b[k];
      } else if (lo - eta_b[k] > worst) {
        worst = lo - eta_b[k];
        leave = k;
        dir = -1;
        slope0 = eta_b[k] - lo;
      }
    }

    // At an optimum, walk zero-cost edges that decrease tie_break' beta.
    if (leave < 0 && options.tie_break) {
      tie_y = lu.transpose().solve(*options.tie_break);
      const double tie_tol = 1e-10 * (1.0 + tie_y.cwiseAbs().maxCoeff());
      const double deg_tol = 1e-9;
      double best = tie_tol;
      for (Index k = 0; k < d; ++k) {
        const Index b = basis[static_cast<std::size_t>(k)];
        const double up = 1.0 - alphas[b];
        const double lo = -alphas[b];
        if (eta_b[k] >= up - deg_tol && tie_y[k] > best) {
          best = tie_y[k];
          leave = k;
          dir = 1;
        } else if (eta_b[k] <= lo + deg_tol && -tie_y[k] > best) {
          best = -tie_y[k];
          leave = k;
          dir = -1;
        }
      }
      slope0 = 0.0;
    }
    if (leave < 0) break;

    z = lu.solve(Vector::Unit(d, leave));
    w.noalias() = X * z;

    breaks.clear();
    for (Index j = 0; j < m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (in_basis[ju]) continue;
      const double wj = dir * w[j];
      if (side[ju] > 0 && wj < -kPivotTiny) {
        breaks.push_back({std::max(r[j], 0.0) / -wj, j});
      } else if (side[ju] < 0 && wj > kPivotTiny) {
        breaks.push_back({std::max(-r[j], 0.0) / wj, j});
      }
    }
    std::sort(breaks.begin(), breaks.end(), [](const Breakpoint& a, const Breakpoint& b) {
      return a.t < b.t || (a.t == b.t && a.row < b.row);
    });

    double slope = slope0;
    Index entering = -1;
    std::size_t passed = 0;
    for (; passed < breaks.size(); ++passed) {
      slope += std::abs(w[breaks[passed].row]);
      if (slope >= 0.0) {
        entering = breaks[passed].row;
        break;
      }
    }
    if (entering < 0) {
      // Objective decreases without bound along this edge: impossible for a
      // full-rank design, so the factorization has lost accuracy.
      throw SingularSignal{};
    }
    for (std::size_t f = 0; f < passed; ++f) {
      auto& s = side[static_cast<std::size_t>(breaks[f].row)];
      s = static_cast<signed char>(-s);
    }
    const Index leaving_row = basis[static_cast<std::size_t>(leave)];
    in_basis[static_cast<std::size_t>(leaving_row)] = 0;
    side[static_cast<std::size_t>(leaving_row)] = static_cast<signed char>(dir);
    basis[static_cast<std::size_t>(leave)] = entering;
    in_basis[static_cast<std::size_t>(entering)] = 1;
  }

  QRSolution out;
  out.beta = beta;
  out.duals = bound_eta;
  for (Index k = 0; k < d; ++k) {
    const Index b = basis[static_cast<std::size_t>(k)];
    out.duals[b] = std::clamp(eta_b[k], -alphas[b], 1.0 - alphas[b]);
  }
  out.objective = 0.0;
  for (Index j = 0; j < m; ++j) out.objective += pinball_loss(r[j], alphas[j]);
  std::sort(basis.begin(), basis.end());
  out.basis = std::move(basis);
  out.iterations = iter;
  return out;
}

}  // namespace

FeatureMatrix::FeatureMatrix(Matrix values, std::optional<Index> intercept_col)
    : values_(std::move(values)), intercept_col_(intercept_col) {
  if (values_.cols() < 1) throw ValidationError("feature matrix needs at least one column");
  if (!all_finite(values_)) throw ValidationError("feature matrix has non-finite entries");
  if (intercept_col_) {
    if (*intercept_col_ < 0 || *intercept_col_ >= values_.cols()) {
      throw ValidationError("intercept column index out of range");
    }
    if (!(values_.col(*intercept_col_).array() == 1.0).all()) {
      throw ValidationError("intercept column is not all ones");
    }
  }
}

FeatureMatrix FeatureMatrix::intercept_only(Index n) { return FeatureMatrix(Matrix::Ones(n, 1), 0); }

FeatureMatrix FeatureMatrix::select_rows(std::span<const Index> rows) const {
  Matrix out(static_cast<Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = values_.row(rows[i]);
  return FeatureMatrix(std::move(out), intercept_col_);
}

LevelVector::LevelVector(Vector alphas) : alphas_(std::move(alphas)) {
  for (Index i = 0; i < alphas_.size(); ++i) {
    if (!(alphas_[i] > 0.0 && alphas_[i] < 1.0)) {
      throw ValidationError("level " + std::to_string(i) + " = " + std::to_string(alphas_[i]) +
                            " is not inside (0, 1)");
    }
  }
}

LevelVector LevelVector::constant(Index n, double alpha) {
  return LevelVector(Vector::Constant(n, alpha));
}

LevelVector LevelVector::select(std::span<const Index> rows) const {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = alphas_[rows[i]];
  return LevelVector(std::move(out));
}

double pinball_loss(double residual, double alpha) {
  return residual > 0.0 ? (1.0 - alpha) * residual : -alpha * residual;
}

QRSolution solve_pinball_lp(const Eigen::Ref<const Matrix>& features,
                            const Eigen::Ref<const Vector>& scores,
                            const Eigen::Ref<const Vector>& alphas, const SolveOptions& options) {
  try {
    return run_simplex(features, scores, alphas, options, true);
  } catch (const StallSignal&) {
  } catch (const SingularSignal&) {
  }
  if (!options.allow_dither) {
    throw DegenerateDesignError("simplex stalled on a degenerate problem");
  }
  const Vector jittered = dither(scores, default_dither_magnitude(scores), options.dither_seed);
  try {
    QRSolution sol = run_simplex(features, jittered, alphas, options, false);
    sol.dithered = true;
    return sol;
  } catch (const StallSignal&) {
  } catch (const SingularSignal&) {
  }
  throw DegenerateDesignError("simplex failed on a degenerate problem even after dithering");
}

QRSolution solve_pinball_qr(const FeatureMatrix& features, const Vector& scores,
                            const LevelVector& levels, const SolveOptions& options) {
  const Index n = features.rows();
  if (scores.size() != n || levels.size() != n) {
    throw ValidationError("features, scores and levels must share the row count");
  }
  if (n < features.cols()) {
    throw ValidationError("need at least as many rows as feature columns");
  }
  if (!scores.allFinite()) throw ValidationError("scores must be finite");
  if (options.tie_break && options.tie_break->size() != features.cols()) {
    throw ValidationError("tie_break direction has the wrong dimension");
  }
  return solve_pinball_lp(features.values(), scores, levels.values(), options);
}

Vector dither(const Vector& scores, double magnitude, std::uint64_t seed) {
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    throw ValidationError("dither magnitude must be positive and finite");
  }
  Rng rng = make_rng(seed);
  Vector out = scores;
  for (Index i = 0; i < out.size(); ++i) out[i] += uniform(rng, -magnitude, magnitude);
  return out;
}

double default_dither_magnitude(const Vector& scores) {
  if (scores.size() == 0) return 1e-9;
  const double span = scores.maxCoeff() - scores.minCoeff();
  if (span > 0.0) return 1e-9 * span;
  return 1e-9 * std::max(1.0, std::abs(scores[0]));
}

Vector basis_interpolator(const Matrix& features_B, const Vector& scores_B) {
  if (features_B.rows() != features_B.cols() || features_B.rows() != scores_B.size()) {
    throw ValidationError("basis interpolation needs a square system");
  }
  Eigen::PartialPivLU<Matrix> lu(features_B);
  if (!(lu.rcond() > kSingularRcond)) throw SingularBasisError("basis feature matrix is singular");
  return lu.solve(scores_B);
}

Matrix basis_matrix(const Eigen::Ref<const Matrix>& features, std::span<const Index> basis) {
  Matrix out(static_cast<Index>(basis.size()), features.cols());
  for (std::size_t k = 0; k < basis.size(); ++k) out.row(static_cast<Index>(k)) = features.row(basis[k]);
  return out;
}

}  // namespace condconf
