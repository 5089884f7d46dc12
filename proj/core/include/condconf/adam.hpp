#pragma once

#include "condconf/qr_solver.hpp"

namespace condconf {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vector params;
  Vector m;
  Vector v;
  long step = 0;

  explicit AdamState(Vector initial = {});
};

/// One bias-corrected Adam update, descending on `gradient`. A non-finite
/// gradient throws NumericalError and leaves the state untouched.
void adam_step(AdamState& state, const Vector& gradient, const AdamConfig& config);

}  // namespace condconf
