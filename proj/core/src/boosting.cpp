#include "condconf/boosting.hpp"

#include "condconf/errors.hpp"
#include "condconf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace condconf {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Split {
  std::vector<Index> fold1;
  std::vector<Index> fold2;
};

Split random_split(Index n, double fraction, Rng& rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto cut = static_cast<std::ptrdiff_t>(std::llround(fraction * static_cast<double>(n)));
  cut = std::clamp<std::ptrdiff_t>(cut, 1, static_cast<std::ptrdiff_t>(n) - 1);
  Split s;
  s.fold1.assign(order.begin(), order.begin() + cut);
  s.fold2.assign(order.begin() + cut, order.end());
  std::sort(s.fold1.begin(), s.fold1.end());
  std::sort(s.fold2.begin(), s.fold2.end());
  return s;
}

// Scores and score gradients of the fold-1 rows.
void score_rows(const ScoreModel& model, const std::vector<Index>& rows, const Vector& theta,
                Vector& scores, Matrix& grads) {
  const Index p = model.param_dim();
  scores.resize(static_cast<Index>(rows.size()));
  grads.resize(static_cast<Index>(rows.size()), p);
  Vector g(p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    g.setZero();
    const double s = model.score(rows[r], theta, &g);
    if (!std::isfinite(s)) {
      throw ContractError("conformity score of point " + std::to_string(rows[r]) +
                          " is not finite; boosting needs finite thresholds");
    }
    scores[static_cast<Index>(r)] = s;
    grads.row(static_cast<Index>(r)) = g.transpose();
  }
}

Matrix rows_of(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

}  // namespace

void BoostConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (steps < 0) throw ValidationError("steps must be non-negative");
  if (!(sigmoid_temperature > 0.0)) throw ValidationError("sigmoid temperature must be positive");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ValidationError("split_fraction must lie in (0, 1)");
}

Vector tau_gradient(std::span<const Index> basis, const Eigen::Ref<const Matrix>& features,
                    const Matrix& dscore_dtheta_B, const Vector& test_features) {
  const Index d = features.cols();
  if (static_cast<Index>(basis.size()) != d) throw ValidationError("basis size must equal the feature dimension");
  if (dscore_dtheta_B.rows() != d) throw ValidationError("score Jacobian needs one row per basis element");
  if (test_features.size() != d) throw ValidationError("test feature dimension mismatch");
  const Matrix phi_b = basis_matrix(features, basis);
  Eigen::FullPivLU<Matrix> lu(phi_b);
  if (!lu.isInvertible() || lu.rcond() <= 1e-13) throw SingularBasisError("basis feature matrix is singular");
  // Solve Phi_B' w = x so that the gradient is w' dS_B.
  const Vector w = phi_b.transpose().fullPivLu().solve(test_features);
  return dscore_dtheta_B.transpose() * w;
}

ScaledResidualModel::ScaledResidualModel(Matrix x, Vector y, double clamp, double penalty)
    : x_(std::move(x)), y_(std::move(y)), clamp_(clamp), penalty_(penalty) {
  if (x_.rows() != y_.size()) throw ValidationError("x and y differ in row count");
  if (!x_.allFinite() || !y_.allFinite()) throw ValidationError("x and y must be finite");
  if (!(clamp_ > 0.0)) throw ValidationError("clamp must be positive");
}

double ScaledResidualModel::scale(Index i, const Vector& theta) const {
  return std::max(std::abs(x_.row(i).dot(theta)), clamp_);
}

double ScaledResidualModel::score(Index i, const Vector& theta, Vector* grad) const {
  const double lin = x_.row(i).dot(theta);
  const double a = std::abs(lin);
  const double y = std::abs(y_[i]);
  if (a < clamp_) {
    if (grad) grad->setZero();
    return y / clamp_;
  }
  // subgradient of |.| at 0 is never reached past the clamp
  const double sign = lin > 0.0 ? 1.0 : -1.0;
  if (grad) *grad = (-y * sign / (lin * lin)) * x_.row(i).transpose();
  return y / a;
}

double ScaledResidualModel::objective(Index i, const Vector& theta, double tau, const Vector& dtau,
                                      Vector& grad) const {
  const double lin = x_.row(i).dot(theta);
  const double a = std::abs(lin);
  const double sign = lin >= 0.0 ? 1.0 : -1.0;
  if (a < clamp_) {
    // penalty (clamp - |lin|) / clamp, pushing |lin| up
    grad += 2.0 * clamp_ * dtau - penalty_ * sign / clamp_ * x_.row(i).transpose();
    return 2.0 * tau * clamp_ + penalty_ * (clamp_ - a) / clamp_;
  }
  grad += 2.0 * a * dtau + 2.0 * tau * sign * x_.row(i).transpose();
  return 2.0 * tau * a;
}

ClaimEnsembleModel::ClaimEnsembleModel(std::vector<EnsemblePrompt> prompts, MonotoneLoss loss,
                                       double temperature)
    : prompts_(std::move(prompts)), loss_(std::move(loss)), temperature_(temperature) {
  if (!(temperature_ > 0.0)) throw ValidationError("temperature must be positive");
  m_ = -1;
  for (const auto& p : prompts_) {
    if (p.base_scores.rows() != static_cast<Index>(p.annotations.size())) {
      throw ValidationError("base score rows and annotations differ in length");
    }
    if (p.base_scores.rows() > 0) {
      if (m_ >= 0 && p.base_scores.cols() != m_) throw ValidationError("prompts disagree on base score count");
      m_ = p.base_scores.cols();
    }
    total_claims_ += p.annotations.size();
  }
  if (m_ <= 0) throw ValidationError("ensemble needs at least one claim with base scores");
  floor_grad_ = Vector::Zero(m_);
}

void ClaimEnsembleModel::prepare(const Vector& theta) {
  double lowest = kInf;
  for (const auto& p : prompts_) {
    for (Index j = 0; j < p.base_scores.rows(); ++j) {
      const double s = p.base_scores.row(j).dot(theta);
      if (s < lowest) {
        lowest = s;
        floor_grad_ = p.base_scores.row(j).transpose();
      }
    }
  }
  floor_ = lowest - 1.0;
}

ScoredClaimSet ClaimEnsembleModel::claims(Index i, const Vector& theta) const {
  const EnsemblePrompt& p = prompt(i);
  ScoredClaimSet out;
  const Vector s = p.base_scores * theta;
  out.claim_scores.assign(s.data(), s.data() + s.size());
  out.annotations = p.annotations;
  return out;
}

double ClaimEnsembleModel::score(Index i, const Vector& theta, Vector* grad) const {
  const ScoredClaimSet set = claims(i, theta);
  const double s = score_from_loss(set, loss_);
  if (s == -kInf) {
    if (grad) *grad = floor_grad_;
    return floor_;
  }
  // active claim: first one carrying the threshold value
  const auto it = std::find(set.claim_scores.begin(), set.claim_scores.end(), s);
  if (grad) *grad = prompt(i).base_scores.row(it - set.claim_scores.begin()).transpose();
  return s;
}

double ClaimEnsembleModel::objective(Index i, const Vector& theta, double tau, const Vector& dtau,
                                     Vector& grad) const {
  const EnsemblePrompt& p = prompt(i);
  double value = 0.0;
  for (Index j = 0; j < p.base_scores.rows(); ++j) {
    const double z = (p.base_scores.row(j).dot(theta) - tau) / temperature_;
    const double sg = sigmoid(z);
    value -= sg;
    grad -= (sg * (1.0 - sg) / temperature_) * (p.base_scores.row(j).transpose() - dtau);
  }
  return value;
}

BoostResult conditional_boost(ScoreModel& model, const FeatureMatrix& features,
                              const LevelVector& levels, const Vector& theta0,
                              const BoostConfig& config) {
  config.validate();
  const Index n = model.size();
  const Index d = features.cols();
  if (features.rows() != n || levels.size() != n) {
    throw ValidationError("features, levels and score model must share the row count");
  }
  if (theta0.size() != model.param_dim()) throw ValidationError("theta0 has the wrong dimension");

  AdamState state(theta0);
  const AdamConfig adam{config.learning_rate};
  Rng rng = make_rng(derive_seed(config.seed, "boost-splits"));
  BoostResult result;

  for (int step = 0; step < config.steps; ++step) {
    const Vector theta = state.params;
    model.prepare(theta);
    const Split split = random_split(n, config.split_fraction, rng);
    if (static_cast<Index>(split.fold1.size()) < d) {
      throw InsufficientDataError("boosting fold smaller than the feature dimension");
    }
    Vector s1;
    Matrix g1;
    score_rows(model, split.fold1, theta, s1, g1);
    const FeatureMatrix x1 = features.select_rows(split.fold1);
    const LevelVector a1 = levels.select(split.fold1);

    Vector grad = Vector::Zero(theta.size());
    double total = 0.0;
    int used = 0;

    if (!config.use_full_basis) {
      QRSolution fit = solve_pinball_lp(x1.values(), s1, a1.values(), {});
      if (fit.dithered) ++result.dithered_steps;
      Matrix w;  // Phi_B^{-1} dS_B, shared by every hold-out point
      for (int attempt = 0;; ++attempt) {
        const Matrix phi_b = basis_matrix(x1.values(), fit.basis);
        Eigen::FullPivLU<Matrix> lu(phi_b);
        if (lu.isInvertible() && lu.rcond() > 1e-13) {
          w = lu.solve(rows_of(g1, fit.basis));
          break;
        }
        if (attempt > 0) {
          throw SingularBasisError("singular basis at boosting step " + std::to_string(step) +
                                   " persists after dithering");
        }
        const Vector sd = dither(s1, default_dither_magnitude(s1), derive_seed(config.seed, step));
        fit = solve_pinball_lp(x1.values(), sd, a1.values(), {});
        ++result.dithered_steps;
      }
      for (Index i : split.fold2) {
        const Vector phi = features.row(i).transpose();
        const double tau = phi.dot(fit.beta);
        const Vector dtau = w.transpose() * phi;
        total += model.objective(i, theta, tau, dtau, grad);
        ++used;
      }
    } else {
      ConditionalCalibrator cal(x1, s1, a1);
      for (Index i : split.fold2) {
        const Vector phi = features.row(i).transpose();
        const Cutoff c = cal.nonrandomized(phi, levels[i]);
        if (!c.bounded) {
          ++result.skipped_points;
          continue;
        }
        Vector dtau;
        try {
          dtau = tau_gradient(c.basis, x1.values(), rows_of(g1, c.basis), phi);
        } catch (const SingularBasisError&) {
          ++result.skipped_points;
          continue;
        }
        total += model.objective(i, theta, c.tau, dtau, grad);
        ++used;
      }
    }

    if (used == 0) throw NumericalError("no usable hold-out point at boosting step " + std::to_string(step));
    grad /= static_cast<double>(used);
    result.objective.push_back(total / used);
    adam_step(state, grad, adam);
    result.thetas.push_back(state.params);
  }
  result.theta = state.params;
  return result;
}

BoostResult marginal_boost_baseline(ScoreModel& model, double alpha, const Vector& theta0,
                                    const BoostConfig& config) {
  config.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  const Index n = model.size();
  if (theta0.size() != model.param_dim()) throw ValidationError("theta0 has the wrong dimension");

  AdamState state(theta0);
  const AdamConfig adam{config.learning_rate};
  Rng rng = make_rng(derive_seed(config.seed, "boost-splits"));
  BoostResult result;

  for (int step = 0; step < config.steps; ++step) {
    const Vector theta = state.params;
    model.prepare(theta);
    const Split split = random_split(n, config.split_fraction, rng);
    Vector s1;
    Matrix g1;
    score_rows(model, split.fold1, theta, s1, g1);

    const auto n1 = static_cast<std::size_t>(s1.size());
    const double rank = std::ceil((1.0 - alpha) * static_cast<double>(n1 + 1) - 1e-9);
    if (rank > static_cast<double>(n1)) {
      throw InsufficientDataError("fold too small for a finite split-conformal quantile");
    }
    std::vector<Index> order(n1);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s1[a] < s1[b]; });
    const Index pick = order[static_cast<std::size_t>(rank) - 1];
    const double tau = s1[pick];
    const Vector dtau = g1.row(pick).transpose();

    Vector grad = Vector::Zero(theta.size());
    double total = 0.0;
    for (Index i : split.fold2) total += model.objective(i, theta, tau, dtau, grad);
    const auto used = static_cast<double>(split.fold2.size());
    grad /= used;
    result.objective.push_back(total / used);
    adam_step(state, grad, adam);
    result.thetas.push_back(state.params);
  }
  result.theta = state.params;
  return result;
}

}  // namespace condconf
