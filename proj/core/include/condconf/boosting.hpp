#pragma once

// Conditional boosting: gradient descent on a parameterized conformity score
// through the conditional conformal cutoff. Locally the cutoff is
// tau = phi(x)' Phi_B^{-1} S_B(theta) for the optimal basis B, so its gradient
// is one linear solve.

#include "condconf/adam.hpp"
#include "condconf/conformal.hpp"
#include "condconf/qr_solver.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace condconf {

struct BoostConfig {
  double learning_rate = 1e-3;
  int steps = 500;
  double sigmoid_temperature = 1.0;
  double split_fraction = 0.5;
  std::uint64_t seed = 0;
  bool use_full_basis = false;  ///< exact per-test-point augmented basis

  void validate() const;
};

/// Phi(x_test)' Phi_B^{-1} dS_B. Throws SingularBasisError if Phi_B is singular.
Vector tau_gradient(std::span<const Index> basis, const Eigen::Ref<const Matrix>& features,
                    const Matrix& dscore_dtheta_B, const Vector& test_features);

/// A parameterized score over a fixed dataset together with the smoothed
/// objective evaluated at each hold-out point.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual Index size() const = 0;
  virtual Index param_dim() const = 0;

  /// Conformity score of point i; writes dS_i/dtheta into `grad` when non-null.
  virtual double score(Index i, const Vector& theta, Vector* grad) const = 0;

  /// Objective term (to be minimized) for hold-out point i whose cutoff is tau
  /// with gradient dtau; adds d(term)/dtheta to `grad`.
  virtual double objective(Index i, const Vector& theta, double tau, const Vector& dtau,
                           Vector& grad) const = 0;

  /// Called once per step before scoring, for models whose scores share state.
  virtual void prepare(const Vector& theta) { (void)theta; }
};

/// S_theta(x, y) = |y| / |x' theta| with objective 2 tau |x' theta| (interval length).
/// |x' theta| below `clamp` is clamped and a penalty repels theta from the singular set.
class ScaledResidualModel : public ScoreModel {
 public:
  ScaledResidualModel(Matrix x, Vector y, double clamp = 1e-6, double penalty = 1.0);

  Index size() const override { return x_.rows(); }
  Index param_dim() const override { return x_.cols(); }
  double score(Index i, const Vector& theta, Vector* grad) const override;
  double objective(Index i, const Vector& theta, double tau, const Vector& dtau,
                   Vector& grad) const override;

  double scale(Index i, const Vector& theta) const;

 private:
  Matrix x_;
  Vector y_;
  double clamp_;
  double penalty_;
};

struct EnsemblePrompt {
  Matrix base_scores;            ///< k claims x m base scores
  std::vector<int> annotations;  ///< 1 = true claim
};

/// Claim score p_theta = theta' (base scores); conformity score from a monotone
/// loss; objective minus the sigmoid-smoothed retained fraction.
class ClaimEnsembleModel : public ScoreModel {
 public:
  ClaimEnsembleModel(std::vector<EnsemblePrompt> prompts, MonotoneLoss loss,
                     double temperature = 1.0);

  Index size() const override { return static_cast<Index>(prompts_.size()); }
  Index param_dim() const override { return m_; }
  void prepare(const Vector& theta) override;
  double score(Index i, const Vector& theta, Vector* grad) const override;
  double objective(Index i, const Vector& theta, double tau, const Vector& dtau,
                   Vector& grad) const override;

  ScoredClaimSet claims(Index i, const Vector& theta) const;
  const EnsemblePrompt& prompt(Index i) const { return prompts_[static_cast<std::size_t>(i)]; }
  void set_temperature(double t) { temperature_ = t; }

 private:
  std::vector<EnsemblePrompt> prompts_;
  MonotoneLoss loss_;
  double temperature_;
  Index m_ = 0;
  std::size_t total_claims_ = 0;
  // Floor that stands in for -inf scores: one below the smallest claim score
  // in the dataset, differentiated through that claim.
  double floor_ = 0.0;
  Vector floor_grad_;
};

struct BoostResult {
  Vector theta;
  std::vector<double> objective;  ///< smoothed objective per step, before the update
  std::vector<Vector> thetas;     ///< theta after each step
  int skipped_points = 0;         ///< hold-out points with unbounded cutoffs
  int dithered_steps = 0;
};

/// Adam on the smoothed objective with the conditional cutoff computed on a
/// fresh random split each step.
BoostResult conditional_boost(ScoreModel& model, const FeatureMatrix& features,
                              const LevelVector& levels, const Vector& theta0,
                              const BoostConfig& config);

/// Same loop with the split-conformal order statistic of fold-1 scores as the
/// cutoff; its gradient is that one sample's score gradient.
BoostResult marginal_boost_baseline(ScoreModel& model, double alpha, const Vector& theta0,
                                    const BoostConfig& config);

}  // namespace condconf
