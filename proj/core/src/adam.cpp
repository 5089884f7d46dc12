#include "condconf/adam.hpp"

#include "condconf/errors.hpp"

#include <cmath>

namespace condconf {

AdamState::AdamState(Vector initial)
    : params(std::move(initial)),
      m(Vector::Zero(params.size())),
      v(Vector::Zero(params.size())) {}

void adam_step(AdamState& state, const Vector& gradient, const AdamConfig& config) {
  if (gradient.size() != state.params.size()) {
    throw ValidationError("gradient has " + std::to_string(gradient.size()) + " entries, parameters have " +
                          std::to_string(state.params.size()));
  }
  for (Index k = 0; k < gradient.size(); ++k) {
    if (!std::isfinite(gradient[k])) {
      throw NumericalError("non-finite gradient entry " + std::to_string(k) + " at step " +
                           std::to_string(state.step + 1));
    }
  }
  if (!(config.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");

  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * gradient;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (Index k = 0; k < state.params.size(); ++k) {
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    state.params[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
  }
}

}  // namespace condconf
