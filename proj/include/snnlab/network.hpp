#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snnlab/neuron.hpp"
#include "snnlab/tensor.hpp"

namespace snnlab {

enum class LayerKind { Conv, Dense, Flatten };
enum class Activation { SpikingLif, Relu, Readout, None };

struct LayerSpec {
  LayerKind kind = LayerKind::Flatten;
  // Conv fields
  int in_c = 0, out_c = 0, k = 0, stride = 1, pad = 0;
  // Dense fields
  int n_in = 0, n_out = 0;
  Activation activation = Activation::None;

  static LayerSpec conv(int in_c, int out_c, int k, int stride, int pad,
                        Activation act = Activation::SpikingLif);
  static LayerSpec dense(int n_in, int n_out, Activation act = Activation::SpikingLif);
  static LayerSpec flatten();

  bool parameterized() const noexcept { return kind != LayerKind::Flatten; }
  // Fan-in per neuron: k*k*in_c for Conv, n_in for Dense.
  int fan_in() const noexcept;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  int t_window = 4;
  std::array<int, 3> input_shape{3, 32, 32};  // channels, H, W

  // Throws InvalidArgumentError naming the offending layer if shapes do not
  // compose or the activation pattern is wrong (every parameterized layer
  // SpikingLif except a final Readout).
  void validate() const;

  std::string to_json() const;
  static NetworkSpec from_json(const std::string& text);
};

// The desk-scale default architecture used by the CLI when no spec is given.
NetworkSpec default_network_spec();

enum class ModelKind { Snn, Cnn };

// Static geometry of one parameterized layer, derived from the spec.
struct LayerGeom {
  int spec_index = 0;       // index into NetworkSpec::layers
  std::int64_t neuron_count = 0;
  int fan_in = 0;
  std::int64_t param_count = 0;
  bool analog_input = false;  // first parameterized layer under direct encoding
  std::vector<int> out_shape;
};

struct Model {
  NetworkSpec spec;
  ModelKind kind = ModelKind::Snn;
  std::vector<Tensor> weights;   // one per parameterized layer
  std::vector<double> decays;    // per-layer membrane decay (SNN; kept for CNN, unused)
  double threshold = 1.0;
  double surrogate_slope = 2.0;

  std::vector<LayerGeom> geometry() const;
  LifParams layer_params(std::size_t param_layer, bool is_last) const;
};

// Two models with layer-for-layer identical shapes and independently seeded
// Kaiming-uniform (fan-in) weights.
struct ModelPair {
  Model snn;
  Model cnn;
};
ModelPair build_pair(const NetworkSpec& spec, std::uint64_t seed);
Model build_model(const NetworkSpec& spec, ModelKind kind, std::uint64_t seed);

// Measured firing statistics for every parameterized layer and timestep.
struct LayerProfile {
  std::int64_t neuron_count = 0;
  int fan_in = 0;
  bool analog_input = false;
  std::vector<double> input_sparsity;   // one entry per timestep
  std::vector<double> output_sparsity;
};

struct SparsityProfile {
  int t_window = 0;
  std::vector<LayerProfile> layers;
};

// Optional record of the raw tensors seen during an SNN forward, for
// event-replay checks. inputs[t][l] is layer l's input at step t; spikes[t][l]
// its emitted spikes (empty tensor for the readout layer).
struct ForwardTrace {
  std::vector<std::vector<Tensor>> inputs;
  std::vector<std::vector<Tensor>> spikes;
};

struct SnnForwardResult {
  Tensor prediction;
  SparsityProfile profile;
};

// Direct encoding: the same analog image is presented at every timestep.
SnnForwardResult snn_forward(const Model& model, const Tensor& image, int t_window,
                             ForwardTrace* trace = nullptr);

struct CnnForwardResult {
  Tensor prediction;
  std::vector<std::int64_t> op_counts;  // per-layer MAC totals
};

CnnForwardResult cnn_forward(const Model& model, const Tensor& image);

// Checkpoint: 8-byte little-endian length, the spec JSON, then all weights
// and per-layer decay values as little-endian doubles.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path, ModelKind kind);

// Averages profiles entrywise; all profiles must share geometry.
SparsityProfile mean_profile(const std::vector<SparsityProfile>& profiles);

}  // namespace snnlab
