#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "snnlab/network.hpp"
#include "snnlab/tensor.hpp"

namespace snnlab {

// Spike nonlinearity used by the taped forward pass. Hard is the true binary
// model. Soft replaces the step with the smooth primitive of the surrogate,
// which makes the whole network exactly differentiable -- that is the
// reference surface for finite-difference gradient checks.
enum class SpikeMode { Hard, Soft };

struct TrainConfig {
  int epochs = 10;
  double lr = 0.05;
  double momentum = 0.9;
  int batch_size = 16;
  std::uint64_t seed = 0;
  bool learn_beta = true;
  // When true (default), gradients do not flow through the reset term; this
  // avoids second-order spike coupling in BPTT.
  bool detach_reset = true;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
};

struct TrainExample {
  Tensor image;
  std::array<double, 3> target{};
};

// Loads every manifest item into memory (images are small).
std::vector<TrainExample> load_examples(const std::string& manifest_path);

// Parameter gradients, aligned with Model::weights / Model::decays.
struct Gradients {
  std::vector<Tensor> weights;
  std::vector<double> decays;

  static Gradients zeros_like(const Model& model);
  void accumulate(const Gradients& other);
  void scale(double factor);
};

// Building blocks, exposed for the numeric tests.
Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& kernel, int stride, int padding,
                         const std::vector<int>& input_shape);
Tensor conv2d_grad_kernel(const Tensor& grad_out, const Tensor& input,
                          const std::vector<int>& kernel_shape, int stride, int padding);
Tensor linear_grad_input(const Tensor& grad_out, const Tensor& weight);
Tensor linear_grad_weight(const Tensor& grad_out, const Tensor& input);

// Everything the backward pass needs, indexed [timestep][parameterized
// layer]. s holds the emitted spikes (soft or hard); the readout slot keeps
// an empty tensor there.
struct TapedForward {
  std::vector<std::vector<Tensor>> x;       // layer inputs
  std::vector<std::vector<Tensor>> v_prev;  // membrane before the update
  std::vector<std::vector<Tensor>> v;       // membrane after the update
  std::vector<std::vector<Tensor>> s;       // emitted spikes
  Tensor prediction;
};

// In Hard mode this reproduces snn_forward()'s prediction exactly.
TapedForward snn_forward_taped(const Model& model, const Tensor& image, SpikeMode mode);

// Backpropagation through time for the squared-error loss
// L = mean_i (prediction_i - target_i)^2 read out at the final step.
Gradients snn_backward(const Model& model, const TapedForward& tape,
                       const std::array<double, 3>& target, SpikeMode mode, bool detach_reset);

struct CnnTape {
  std::vector<Tensor> x;  // layer inputs
  std::vector<Tensor> z;  // pre-activations
  Tensor prediction;
};

CnnTape cnn_forward_taped(const Model& model, const Tensor& image);
Gradients cnn_backward(const Model& model, const CnnTape& tape,
                       const std::array<double, 3>& target);

// Single-sample loss and gradient for either model kind (Hard spikes).
double loss_and_gradients(const Model& model, const TrainExample& ex, bool detach_reset,
                          Gradients* grads);

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-sample loss, one entry per epoch
  double final_loss = 0.0;
};

// Minibatch SGD with momentum; updates the model in place. Shuffling and all
// arithmetic are deterministic given cfg.seed. Decay parameters are updated
// only when cfg.learn_beta and are clamped to (0,1].
TrainResult train(Model& model, const std::vector<TrainExample>& examples,
                  const TrainConfig& cfg);

double eval_mse(const Model& model, const std::vector<TrainExample>& examples);

// Compares analytic gradients against central finite differences of the
// model's own loss and returns the maximum relative error over the probed
// entries, rel = |a - f| / max(|a|, |f|, 1e-12). layer_begin/layer_end select
// a half-open range of parameterized layers (layer_end == -1 means all); each
// weight tensor is probed at up to max_per_layer evenly strided entries, plus
// its decay. For CNN models mode and detach_reset are ignored.
double grad_check(const Model& model, const Tensor& image, const std::array<double, 3>& target,
                  SpikeMode mode, bool detach_reset, double epsilon, int layer_begin = 0,
                  int layer_end = -1, int max_per_layer = 48);

// Convenience form. epsilon must lie in [1e-7, 1e-3]. CNN: all parameters
// against the true forward. SNN: readout parameters against the true forward
// (exactly differentiable, upstream spikes are frozen) plus spiking-layer
// parameters against the soft-relaxed forward; returns the max over both
// groups. The true spiking forward is never the differentiated object for
// spiking parameters.
double grad_check(const Model& model, const TrainExample& sample, double epsilon);

}  // namespace snnlab
