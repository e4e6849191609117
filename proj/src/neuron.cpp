#include "snnlab/neuron.hpp"

#include <cmath>

namespace snnlab {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_step_shapes(const MembraneState& state, const Tensor& weighted_input) {
  if (!state.v.same_shape(state.s_prev)) {
    throw ShapeError("membrane state v " + state.v.shape_str() + " vs s_prev " +
                     state.s_prev.shape_str());
  }
  if (!state.v.same_shape(weighted_input)) {
    throw ShapeError("weighted input " + weighted_input.shape_str() +
                     " does not match membrane shape " + state.v.shape_str());
  }
}
}  // namespace

void LifParams::validate() const {
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidArgumentError("decay must lie in (0,1]");
  if (!(threshold > 0.0)) throw InvalidArgumentError("threshold must be positive");
  if (!(surrogate_slope > 0.0)) throw InvalidArgumentError("surrogate_slope must be positive");
}

MembraneState MembraneState::rest(const std::vector<int>& shape) {
  return MembraneState{Tensor::zeros(shape), Tensor::zeros(shape)};
}

LifStepResult lif_step(const MembraneState& state, const Tensor& weighted_input,
                       const LifParams& params) {
  params.validate();
  check_step_shapes(state, weighted_input);

  LifStepResult r;
  r.state.v = Tensor(state.v.shape);
  r.spikes = Tensor(state.v.shape);
  for (std::int64_t i = 0; i < state.v.numel(); ++i) {
    double v = params.decay * state.v[i] + weighted_input[i];
    if (params.reset_enabled) v -= params.threshold * state.s_prev[i];
    r.state.v[i] = v;
    r.spikes[i] = (v > params.threshold) ? 1.0 : 0.0;  // strict inequality
  }
  r.state.s_prev = r.spikes;
  return r;
}

MembraneState readout_step(const MembraneState& state, const Tensor& weighted_input,
                           const LifParams& params) {
  LifParams p = params;
  p.reset_enabled = false;
  LifStepResult r = lif_step(state, weighted_input, p);
  r.state.s_prev = Tensor::zeros(state.v.shape);  // readout never spikes
  return r.state;
}

double surrogate_grad_scalar(double x, double slope) {
  const double sx = slope * x;
  return slope / (kPi * (1.0 + sx * sx));
}

Tensor surrogate_grad(const Tensor& v_minus_th, double slope) {
  if (!(slope > 0.0)) throw InvalidArgumentError("surrogate slope must be positive");
  Tensor out(v_minus_th.shape);
  for (std::int64_t i = 0; i < v_minus_th.numel(); ++i) {
    out[i] = surrogate_grad_scalar(v_minus_th[i], slope);
  }
  return out;
}

double surrogate_sigmoid_scalar(double x, double slope) {
  return 0.5 + std::atan(slope * x) / kPi;
}

}  // namespace snnlab
