#pragma once

#include "condconf/qr_solver.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condconf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One model output split into claims: confidence p_j and 0/1 annotation W_j (1 = true).
struct ScoredClaimSet {
  std::vector<double> claim_scores;
  std::vector<int> annotations;
  std::vector<std::string> texts;  ///< optional; empty or same length

  std::size_t size() const { return claim_scores.size(); }
  void validate() const;
};

/// Set function L(F, W) over retained claim indices. Must satisfy L(empty) = 0
/// and be non-decreasing as the retained set grows.
using SetLoss = std::function<double(std::span<const std::size_t> retained,
                                     std::span<const int> annotations)>;

struct MonotoneLoss {
  enum class Kind { count_false, custom };

  Kind kind = Kind::count_false;
  double budget = 0.0;  ///< lambda: the output is acceptable when L <= lambda
  SetLoss custom;

  static MonotoneLoss count_false(double budget);
  static MonotoneLoss from_function(SetLoss loss, double budget);

  double evaluate(std::span<const std::size_t> retained, std::span<const int> annotations) const;
};

/// Retained claims {j : p_j > tau}. tau = -inf keeps everything, +inf nothing.
std::vector<std::size_t> filter(const ScoredClaimSet& claims, double tau);

/// Smallest tau whose strict filter controls the loss; -inf when keeping every
/// claim is already acceptable. Throws ContractError if the loss is caught
/// violating L(empty) = 0 or monotonicity along the nested filter chain.
double score_from_loss(const ScoredClaimSet& claims, const MonotoneLoss& loss);

/// Replaces -inf conformity scores (always-controlled outputs) with a finite floor
/// so they can enter the quantile regression. Rejects NaN and +inf.
Vector finite_conformity_scores(std::span<const double> scores, double floor);

struct Cutoff {
  double tau = kInf;
  bool randomized = false;
  double eta_test = 0.0;       ///< test-point dual at the returned threshold
  std::optional<double> u;     ///< randomization draw, inside [-alpha, 1 - alpha]
  double alpha_test = 0.1;
  bool bounded = true;         ///< false when the threshold is +inf

  // Fit behind a non-randomized threshold (empty when unbounded): coefficients
  // and the calibration rows interpolated by them.
  Vector beta;
  std::vector<Index> basis;
};

/// Conditional conformal calibration over the linear class spanned by the
/// calibration features. Each cutoff augments the calibration quantile
/// regression with the test row; the calibration solution is computed once
/// and used as the warm start for every augmented solve.
///
/// Instances hold scratch buffers and are not safe for concurrent use; build
/// one per thread.
class ConditionalCalibrator {
 public:
  ConditionalCalibrator(FeatureMatrix calib_features, Vector calib_scores, LevelVector calib_levels);

  /// tau = sup{S : S <= g_S(x)}: the smallest fitted value at x over all optimal
  /// fits once the imputed score sits above the fit. +inf (bounded = false) if
  /// no imputed score clears the fit.
  Cutoff nonrandomized(const Vector& test_features, double alpha_test);

  /// tau = max{S : eta^S_test <= u}, located by bisection on S using that eta^S
  /// is a non-decreasing step function. u >= 1 - alpha returns the
  /// non-randomized threshold.
  Cutoff randomized(const Vector& test_features, double alpha_test, double u);

  /// Dual of the test row when its score is imputed as `imputed`.
  double test_dual(const Vector& test_features, double alpha_test, double imputed);

  const QRSolution& calibration_fit() const { return calib_fit_; }
  Index size() const { return n_; }
  Index dim() const { return d_; }
  double score_span() const { return span_; }

 private:
  struct DualEval {
    double eta;
    QRSolution solution;
  };

  void load_test_row(const Vector& x, double alpha_test);
  DualEval eval_dual(double imputed);
  double next_breakpoint(const QRSolution& sol, double imputed) const;

  Index n_ = 0;
  Index d_ = 0;
  Matrix aug_x_;
  Vector aug_s_;
  Vector aug_alpha_;
  Vector sorted_scores_;
  QRSolution calib_fit_;
  std::vector<Index> last_basis_;
  double span_ = 1.0;
};

/// Draws U ~ Uniform[-alpha, 1 - alpha] from `seed`.
double draw_randomization(double alpha_test, std::uint64_t seed);

Cutoff cutoff_nonrandomized(const FeatureMatrix& calib_features, const Vector& calib_scores,
                            const LevelVector& calib_levels, const Vector& test_features,
                            double alpha_test);

Cutoff cutoff_randomized(const FeatureMatrix& calib_features, const Vector& calib_scores,
                         const LevelVector& calib_levels, const Vector& test_features,
                         double alpha_test, std::uint64_t seed);

/// The ceil((1 - alpha)(n + 1))-th smallest score; +inf when that rank exceeds n.
double split_conformal_quantile(std::span<const double> scores, double alpha);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty = true;
  double length() const { return empty ? 0.0 : hi - lo; }
  bool contains(double y) const { return !empty && y >= lo && y <= hi; }
};

enum class ScoreFamily {
  abs_residual,  ///< S = |y|
  scaled,        ///< S = |y| / |x' theta|
};

/// {y : S(x, y) <= tau} as a symmetric interval.
Interval predict_interval(ScoreFamily family, const Vector& x, const Vector& theta, double tau);

}  // namespace condconf
