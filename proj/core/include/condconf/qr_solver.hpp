#pragma once

// Pinball-loss quantile regression with per-observation levels, solved as a
// linear program by a bounded dual simplex that exposes the optimal basis and
// the dual vector.
//
// For rows x_i, scores S_i and levels a_i the primal is
//
//   minimize_beta  sum_i l_{a_i}(S_i - x_i' beta),   l_a(r) = (1-a)[r]_+ + a[r]_-
//
// and the dual is
//
//   maximize_eta  sum_i eta_i S_i   s.t.  sum_i eta_i x_i = 0,  -a_i <= eta_i <= 1-a_i.
//
// A basis is a set of d rows whose feature submatrix is invertible; beta
// interpolates the scores on those rows, every other row sits at the dual
// bound matching the sign of its residual.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace condconf {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// n x d design Phi(X). Entries are validated finite on construction.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(Matrix values, std::optional<Index> intercept_col = std::nullopt);

  static FeatureMatrix intercept_only(Index n);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix& values() const { return values_; }
  auto row(Index i) const { return values_.row(i); }
  std::optional<Index> intercept_col() const { return intercept_col_; }

  FeatureMatrix select_rows(std::span<const Index> rows) const;

 private:
  Matrix values_;
  std::optional<Index> intercept_col_;
};

/// Per-observation miscoverage levels, each strictly inside (0, 1).
class LevelVector {
 public:
  LevelVector() = default;
  explicit LevelVector(Vector alphas);

  static LevelVector constant(Index n, double alpha);

  Index size() const { return alphas_.size(); }
  double operator[](Index i) const { return alphas_[i]; }
  const Vector& values() const { return alphas_; }

  LevelVector select(std::span<const Index> rows) const;

 private:
  Vector alphas_;
};

struct QRSolution {
  Vector beta;
  Vector duals;              ///< eta, one per row, inside [-a_i, 1 - a_i]
  std::vector<Index> basis;  ///< d interpolated rows, ascending
  double objective = 0.0;    ///< sum of pinball losses at beta
  int iterations = 0;
  bool dithered = false;     ///< scores were perturbed to break a degeneracy
};

struct SolveOptions {
  /// Starting basis. Ignored (with a cold start) if it is not a valid basis.
  std::vector<Index> warm_basis;

  /// When set, among all optimal solutions return one minimizing tie_break' beta.
  std::optional<Vector> tie_break;

  double feasibility_tol = 1e-10;
  int max_iterations = 0;  ///< 0 picks a size-dependent cap

  /// Retry once on dithered scores when the simplex stalls or meets a singular basis.
  bool allow_dither = true;
  std::uint64_t dither_seed = 0x5eed;
};

/// l_a(r) = (1 - a) max(r, 0) + a max(-r, 0).
double pinball_loss(double residual, double alpha);

/// Validated entry point. Throws ValidationError on non-finite input or n < d,
/// DegenerateDesignError when no invertible basis exists even after dithering.
QRSolution solve_pinball_qr(const FeatureMatrix& features, const Vector& scores,
                            const LevelVector& levels, const SolveOptions& options = {});

/// Unchecked core used by callers that keep their own validated buffers
/// (the conformal engine re-solves augmented problems many times).
QRSolution solve_pinball_lp(const Eigen::Ref<const Matrix>& features,
                            const Eigen::Ref<const Vector>& scores,
                            const Eigen::Ref<const Vector>& alphas, const SolveOptions& options);

/// scores + iid Uniform[-magnitude, magnitude]; deterministic given seed.
Vector dither(const Vector& scores, double magnitude, std::uint64_t seed);

/// Default dithering magnitude: 1e-9 times the score span (or 1e-9 * max(1, |s|) for constant data).
double default_dither_magnitude(const Vector& scores);

/// Solves features_B * beta = scores_B. Throws SingularBasisError on a singular matrix.
Vector basis_interpolator(const Matrix& features_B, const Vector& scores_B);

/// Rows `basis` of `features` as a d x d matrix.
Matrix basis_matrix(const Eigen::Ref<const Matrix>& features, std::span<const Index> basis);

}  // namespace condconf
