#pragma once

#include "snnlab/tensor.hpp"

namespace snnlab {

// Per-layer LIF parameters. decay is the multiplicative membrane leak in
// (0,1]; threshold must be positive. surrogate_slope shapes the spike
// pseudo-derivative used by training.
struct LifParams {
  double decay = 0.9;
  double threshold = 1.0;
  bool reset_enabled = true;
  bool decay_learnable = false;
  double surrogate_slope = 2.0;

  void validate() const;
};

// Membrane potentials plus the previous step's binary spikes (the reset is
// applied one step late, through s_prev).
struct MembraneState {
  Tensor v;
  Tensor s_prev;

  static MembraneState rest(const std::vector<int>& shape);
};

struct LifStepResult {
  MembraneState state;
  Tensor spikes;
};

// One LIF update:
//   v_new = decay * v + weighted_input - (reset_enabled ? threshold * s_prev : 0)
//   spike = 1 iff v_new > threshold (strict), else 0
LifStepResult lif_step(const MembraneState& state, const Tensor& weighted_input,
                       const LifParams& params);

// Readout variant: reset forced off, no spikes emitted. After T calls the
// membrane carries the continuous regression output.
MembraneState readout_step(const MembraneState& state, const Tensor& weighted_input,
                           const LifParams& params);

// Elementwise spike pseudo-derivative g(x) = slope / (pi * (1 + (slope*x)^2)).
// Integrates to 1 over the real line and peaks at x = 0.
Tensor surrogate_grad(const Tensor& v_minus_th, double slope);
double surrogate_grad_scalar(double x, double slope);

// Primitive of the surrogate: a smooth [0,1] spike relaxation used by the
// gradient checker, sigma(x) = 0.5 + atan(slope*x) / pi.
double surrogate_sigmoid_scalar(double x, double slope);

}  // namespace snnlab
