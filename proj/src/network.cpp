#include "snnlab/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "snnlab/metrics.hpp"
#include "snnlab/rng.hpp"
#include "json.hpp"

namespace snnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::SpikingLif: return "spiking_lif";
    case Activation::Relu: return "relu";
    case Activation::Readout: return "readout";
    case Activation::None: return "none";
  }
  return "none";
}

Activation activation_from_name(const std::string& s) {
  if (s == "spiking_lif") return Activation::SpikingLif;
  if (s == "relu") return Activation::Relu;
  if (s == "readout") return Activation::Readout;
  if (s == "none") return Activation::None;
  throw ParseError("unknown activation '" + s + "'");
}

// Walks the layer list computing each layer's output shape; shared by
// validate() and geometry().
std::vector<std::vector<int>> trace_shapes(const NetworkSpec& spec) {
  std::vector<std::vector<int>> out_shapes;
  std::vector<int> cur{spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string where = "layer " + std::to_string(i);
    switch (l.kind) {
      case LayerKind::Conv: {
        if (cur.size() != 3) throw InvalidArgumentError(where + ": conv requires a 3-D input");
        if (l.in_c != cur[0]) {
          throw InvalidArgumentError(where + ": conv expects " + std::to_string(l.in_c) +
                                     " channels, input has " + std::to_string(cur[0]));
        }
        int oh, ow;
        try {
          oh = conv_out_dim(cur[1], l.k, l.stride, l.pad);
          ow = conv_out_dim(cur[2], l.k, l.stride, l.pad);
        } catch (const Error& e) {
          throw InvalidArgumentError(where + ": " + e.what());
        }
        cur = {l.out_c, oh, ow};
        break;
      }
      case LayerKind::Dense: {
        if (cur.size() != 1) {
          throw InvalidArgumentError(where + ": dense requires a flattened input");
        }
        if (l.n_in != cur[0]) {
          throw InvalidArgumentError(where + ": dense expects " + std::to_string(l.n_in) +
                                     " inputs, got " + std::to_string(cur[0]));
        }
        cur = {l.n_out};
        break;
      }
      case LayerKind::Flatten: {
        int n = 1;
        for (int d : cur) n *= d;
        cur = {n};
        break;
      }
    }
    out_shapes.push_back(cur);
  }
  return out_shapes;
}

}  // namespace

LayerSpec LayerSpec::conv(int in_c, int out_c, int k, int stride, int pad, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.in_c = in_c;
  l.out_c = out_c;
  l.k = k;
  l.stride = stride;
  l.pad = pad;
  l.activation = act;
  return l;
}

LayerSpec LayerSpec::dense(int n_in, int n_out, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.n_in = n_in;
  l.n_out = n_out;
  l.activation = act;
  return l;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

int LayerSpec::fan_in() const noexcept {
  if (kind == LayerKind::Conv) return k * k * in_c;
  if (kind == LayerKind::Dense) return n_in;
  return 0;
}

void NetworkSpec::validate() const {
  if (t_window < 1) throw InvalidArgumentError("t_window must be >= 1");
  if (input_shape[0] != 1 && input_shape[0] != 3) {
    throw InvalidArgumentError("input channels must be 1 or 3");
  }
  if (input_shape[1] < 1 || input_shape[2] < 1) {
    throw InvalidArgumentError("input height/width must be positive");
  }
  if (layers.empty()) throw InvalidArgumentError("network has no layers");

  int last_param = -1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i);
    if (l.kind == LayerKind::Conv) {
      if (l.in_c < 1 || l.out_c < 1 || l.k < 1 || l.stride < 1 || l.pad < 0) {
        throw InvalidArgumentError(where + ": bad conv geometry");
      }
    } else if (l.kind == LayerKind::Dense) {
      if (l.n_in < 1 || l.n_out < 1) throw InvalidArgumentError(where + ": bad dense geometry");
    }
    if (l.parameterized()) last_param = static_cast<int>(i);
  }
  if (last_param < 0) throw InvalidArgumentError("network has no parameterized layer");
  if (last_param != static_cast<int>(layers.size()) - 1) {
    throw InvalidArgumentError("layer " + std::to_string(last_param) +
                               ": the readout layer must be last");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i);
    if (!l.parameterized()) {
      if (l.activation != Activation::None) {
        throw InvalidArgumentError(where + ": flatten takes no activation");
      }
      continue;
    }
    const bool is_last = static_cast<int>(i) == last_param;
    if (is_last && l.activation != Activation::Readout) {
      throw InvalidArgumentError(where + ": the last parameterized layer must be a readout");
    }
    if (!is_last && l.activation != Activation::SpikingLif) {
      throw InvalidArgumentError(where + ": hidden parameterized layers must be spiking_lif");
    }
  }
  trace_shapes(*this);  // shape composition
}

std::string NetworkSpec::to_json() const {
  ordered_json j;
  j["layers"] = ordered_json::array();
  for (const LayerSpec& l : layers) {
    ordered_json lj;
    switch (l.kind) {
      case LayerKind::Conv:
        lj["kind"] = "conv";
        lj["in_c"] = l.in_c;
        lj["out_c"] = l.out_c;
        lj["k"] = l.k;
        lj["stride"] = l.stride;
        lj["pad"] = l.pad;
        lj["activation"] = activation_name(l.activation);
        break;
      case LayerKind::Dense:
        lj["kind"] = "dense";
        lj["n_in"] = l.n_in;
        lj["n_out"] = l.n_out;
        lj["activation"] = activation_name(l.activation);
        break;
      case LayerKind::Flatten:
        lj["kind"] = "flatten";
        break;
    }
    j["layers"].push_back(lj);
  }
  j["t_window"] = t_window;
  j["input_shape"] = {input_shape[0], input_shape[1], input_shape[2]};
  return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("network spec JSON: ") + e.what());
  }
  try {
    NetworkSpec spec;
    spec.layers.clear();
    for (const auto& lj : j.at("layers")) {
      const std::string kind = lj.at("kind").get<std::string>();
      if (kind == "conv") {
        spec.layers.push_back(LayerSpec::conv(
            lj.at("in_c").get<int>(), lj.at("out_c").get<int>(), lj.at("k").get<int>(),
            lj.at("stride").get<int>(), lj.at("pad").get<int>(),
            activation_from_name(lj.value("activation", "spiking_lif"))));
      } else if (kind == "dense") {
        spec.layers.push_back(LayerSpec::dense(
            lj.at("n_in").get<int>(), lj.at("n_out").get<int>(),
            activation_from_name(lj.value("activation", "spiking_lif"))));
      } else if (kind == "flatten") {
        spec.layers.push_back(LayerSpec::flatten());
      } else {
        throw ParseError("unknown layer kind '" + kind + "'");
      }
    }
    spec.t_window = j.at("t_window").get<int>();
    const auto& shape = j.at("input_shape");
    if (shape.size() != 3) throw ParseError("input_shape must have 3 entries");
    spec.input_shape = {shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>()};
    return spec;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("network spec JSON: ") + e.what());
  }
}

NetworkSpec default_network_spec() {
  NetworkSpec spec;
  spec.input_shape = {3, 32, 32};
  spec.t_window = 4;
  spec.layers = {
      LayerSpec::conv(3, 8, 3, 2, 1),
      LayerSpec::conv(8, 16, 3, 2, 1),
      LayerSpec::conv(16, 16, 3, 2, 1),
      LayerSpec::flatten(),
      LayerSpec::dense(16 * 4 * 4, 64),
      LayerSpec::dense(64, 3, Activation::Readout),
  };
  return spec;
}

std::vector<LayerGeom> Model::geometry() const {
  std::vector<LayerGeom> geoms;
  const auto shapes = trace_shapes(spec);
  bool first_param = true;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (!l.parameterized()) continue;
    LayerGeom g;
    g.spec_index = static_cast<int>(i);
    g.out_shape = shapes[i];
    g.neuron_count = shape_numel(g.out_shape);
    g.fan_in = l.fan_in();
    g.param_count = (l.kind == LayerKind::Conv)
                        ? static_cast<std::int64_t>(l.out_c) * l.in_c * l.k * l.k
                        : static_cast<std::int64_t>(l.n_out) * l.n_in;
    g.analog_input = first_param;
    first_param = false;
    geoms.push_back(g);
  }
  return geoms;
}

LifParams Model::layer_params(std::size_t param_layer, bool is_last) const {
  LifParams p;
  p.decay = decays.at(param_layer);
  p.threshold = threshold;
  p.reset_enabled = !is_last;
  p.surrogate_slope = surrogate_slope;
  return p;
}

Model build_model(const NetworkSpec& spec, ModelKind kind, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  m.kind = kind;
  std::mt19937_64 rng(seed);
  for (const LayerSpec& l : spec.layers) {
    if (!l.parameterized()) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(l.fan_in()));
    Tensor w = (l.kind == LayerKind::Conv) ? Tensor({l.out_c, l.in_c, l.k, l.k})
                                           : Tensor({l.n_out, l.n_in});
    for (double& v : w.data) v = (2.0 * next_uniform01(rng) - 1.0) * bound;
    m.weights.push_back(std::move(w));
    m.decays.push_back(0.9);
  }
  return m;
}

ModelPair build_pair(const NetworkSpec& spec, std::uint64_t seed) {
  ModelPair pair{build_model(spec, ModelKind::Snn, seed),
                 build_model(spec, ModelKind::Cnn, splitmix64(seed))};
  return pair;
}

namespace {

Tensor layer_weighted(const LayerSpec& l, const Tensor& w, const Tensor& input) {
  if (l.kind == LayerKind::Conv) return conv2d(input, w, l.stride, l.pad);
  return linear(input, w);
}

void check_image(const Model& model, const Tensor& image) {
  const auto& s = model.spec.input_shape;
  if (image.rank() != 3 || image.shape[0] != s[0] || image.shape[1] != s[1] ||
      image.shape[2] != s[2]) {
    throw ShapeError("image shape " + image.shape_str() + " does not match network input [" +
                     std::to_string(s[0]) + "," + std::to_string(s[1]) + "," +
                     std::to_string(s[2]) + "]");
  }
}

}  // namespace

SnnForwardResult snn_forward(const Model& model, const Tensor& image, int t_window,
                             ForwardTrace* trace) {
  if (t_window < 1) throw InvalidArgumentError("t_window must be >= 1");
  check_image(model, image);
  const auto geoms = model.geometry();
  const std::size_t n_param = geoms.size();

  std::vector<MembraneState> states;
  states.reserve(n_param);
  for (const auto& g : geoms) states.push_back(MembraneState::rest(g.out_shape));

  SparsityProfile profile;
  profile.t_window = t_window;
  profile.layers.resize(n_param);
  for (std::size_t p = 0; p < n_param; ++p) {
    profile.layers[p].neuron_count = geoms[p].neuron_count;
    profile.layers[p].fan_in = geoms[p].fan_in;
    profile.layers[p].analog_input = geoms[p].analog_input;
    profile.layers[p].input_sparsity.assign(t_window, 0.0);
    profile.layers[p].output_sparsity.assign(t_window, 0.0);
  }
  if (trace) {
    trace->inputs.assign(t_window, std::vector<Tensor>(n_param));
    trace->spikes.assign(t_window, std::vector<Tensor>(n_param));
  }

  Tensor prediction;
  for (int t = 0; t < t_window; ++t) {
    Tensor cur = image;  // direct encoding: same analog frame each step
    std::size_t p = 0;
    for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
      const LayerSpec& l = model.spec.layers[i];
      if (l.kind == LayerKind::Flatten) {
        const int flat_n = static_cast<int>(cur.numel());
        cur = Tensor({flat_n}, std::move(cur.data));
        continue;
      }
      const bool is_last = (p + 1 == n_param);
      profile.layers[p].input_sparsity[t] = sparsity(cur);
      if (trace) trace->inputs[t][p] = cur;

      Tensor weighted = layer_weighted(l, model.weights[p], cur);
      if (!weighted.all_finite()) {
        throw NumericError("non-finite activation at layer " + std::to_string(i));
      }
      const LifParams params = model.layer_params(p, is_last);
      if (is_last) {
        states[p] = readout_step(states[p], weighted, params);
        profile.layers[p].output_sparsity[t] = 1.0;  // no spikes leave the readout
        if (t == t_window - 1) prediction = states[p].v;
      } else {
        LifStepResult r = lif_step(states[p], weighted, params);
        states[p] = std::move(r.state);
        profile.layers[p].output_sparsity[t] = sparsity(r.spikes);
        if (trace) trace->spikes[t][p] = r.spikes;
        cur = std::move(r.spikes);
      }
      ++p;
    }
  }
  return SnnForwardResult{std::move(prediction), std::move(profile)};
}

CnnForwardResult cnn_forward(const Model& model, const Tensor& image) {
  check_image(model, image);
  const auto geoms = model.geometry();

  CnnForwardResult res;
  res.op_counts.reserve(geoms.size());
  for (const auto& g : geoms) res.op_counts.push_back(g.neuron_count * g.fan_in);

  Tensor cur = image;
  std::size_t p = 0;
  for (const LayerSpec& l : model.spec.layers) {
    if (l.kind == LayerKind::Flatten) {
      const int flat_n = static_cast<int>(cur.numel());
      cur = Tensor({flat_n}, std::move(cur.data));
      continue;
    }
    cur = layer_weighted(l, model.weights[p], cur);
    if (!cur.all_finite()) throw NumericError("non-finite activation in cnn forward");
    const bool is_last = (p + 1 == geoms.size());
    if (!is_last) {
      for (double& v : cur.data) v = v > 0.0 ? v : 0.0;  // SpikingLif maps to ReLU
    }
    ++p;
  }
  res.prediction = std::move(cur);
  return res;
}

namespace {

void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw ParseError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64_le(std::ostream& os, double d) {
  put_u64_le(os, std::bit_cast<std::uint64_t>(d));
}

double get_f64_le(std::istream& is) { return std::bit_cast<double>(get_u64_le(is)); }

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  const std::string spec_json = model.spec.to_json();
  put_u64_le(os, spec_json.size());
  os.write(spec_json.data(), static_cast<std::streamsize>(spec_json.size()));
  for (const Tensor& w : model.weights) {
    for (double v : w.data) put_f64_le(os, v);
  }
  for (double d : model.decays) put_f64_le(os, d);
  if (!os) throw IoError("write failed for '" + path + "'");
}

Model load_checkpoint(const std::string& path, ModelKind kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  const std::uint64_t json_len = get_u64_le(is);
  if (json_len > (1ULL << 24)) throw ParseError("checkpoint spec header too large");
  std::string spec_json(json_len, '\0');
  is.read(spec_json.data(), static_cast<std::streamsize>(json_len));
  if (!is) throw ParseError("checkpoint truncated in spec header");

  Model m = build_model(NetworkSpec::from_json(spec_json), kind, 0);
  for (Tensor& w : m.weights) {
    for (double& v : w.data) v = get_f64_le(is);
  }
  for (double& d : m.decays) d = get_f64_le(is);
  is.peek();
  if (!is.eof()) throw ParseError("checkpoint has trailing bytes");
  return m;
}

SparsityProfile mean_profile(const std::vector<SparsityProfile>& profiles) {
  if (profiles.empty()) throw InvalidArgumentError("mean_profile needs at least one profile");
  SparsityProfile acc = profiles[0];
  for (std::size_t k = 1; k < profiles.size(); ++k) {
    const SparsityProfile& p = profiles[k];
    if (p.t_window != acc.t_window || p.layers.size() != acc.layers.size()) {
      throw ShapeError("profiles disagree in geometry");
    }
    for (std::size_t l = 0; l < acc.layers.size(); ++l) {
      if (p.layers[l].neuron_count != acc.layers[l].neuron_count ||
          p.layers[l].fan_in != acc.layers[l].fan_in) {
        throw ShapeError("profiles disagree in layer geometry");
      }
      for (int t = 0; t < acc.t_window; ++t) {
        acc.layers[l].input_sparsity[t] += p.layers[l].input_sparsity[t];
        acc.layers[l].output_sparsity[t] += p.layers[l].output_sparsity[t];
      }
    }
  }
  const double n = static_cast<double>(profiles.size());
  for (auto& layer : acc.layers) {
    for (double& v : layer.input_sparsity) v /= n;
    for (double& v : layer.output_sparsity) v /= n;
  }
  return acc;
}

}  // namespace snnlab
