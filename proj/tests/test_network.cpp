#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "snnlab/metrics.hpp"
#include "snnlab/network.hpp"
#include "snnlab/rng.hpp"

using namespace snnlab;

namespace {

NetworkSpec tiny_spec() {
  NetworkSpec spec;
  spec.input_shape = {1, 6, 6};
  spec.t_window = 3;
  spec.layers = {
      LayerSpec::conv(1, 2, 3, 2, 1),
      LayerSpec::flatten(),
      LayerSpec::dense(18, 3, Activation::Readout),
  };
  return spec;
}

Tensor random_image(const std::array<int, 3>& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor img({shape[0], shape[1], shape[2]});
  for (double& v : img.data) v = next_uniform01(rng);
  return img;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("snnlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("default network geometry matches hand-computed sizes") {
  const NetworkSpec spec = default_network_spec();
  spec.validate();
  const Model m = build_model(spec, ModelKind::Snn, 0);
  const auto geoms = m.geometry();
  REQUIRE(geoms.size() == 5);

  const std::int64_t neurons[] = {8 * 16 * 16, 16 * 8 * 8, 16 * 4 * 4, 64, 3};
  const int fan_ins[] = {27, 72, 144, 256, 64};
  const std::int64_t params[] = {216, 1152, 2304, 16384, 192};
  for (int i = 0; i < 5; ++i) {
    CHECK(geoms[i].neuron_count == neurons[i]);
    CHECK(geoms[i].fan_in == fan_ins[i]);
    CHECK(geoms[i].param_count == params[i]);
    CHECK(geoms[i].analog_input == (i == 0));
  }
  CHECK(m.weights.size() == 5);
  CHECK(m.decays.size() == 5);
}

TEST_CASE("spec validation rejects malformed networks") {
  SUBCASE("hidden layer must be spiking") {
    NetworkSpec s = tiny_spec();
    s.layers.insert(s.layers.begin(), LayerSpec::conv(1, 1, 1, 1, 0, Activation::Relu));
    s.layers[1] = LayerSpec::conv(1, 2, 3, 2, 1);
    CHECK_THROWS_AS(s.validate(), InvalidArgumentError);
  }
  SUBCASE("last layer must be the readout") {
    NetworkSpec s = tiny_spec();
    s.layers.back().activation = Activation::SpikingLif;
    CHECK_THROWS_AS(s.validate(), InvalidArgumentError);
  }
  SUBCASE("shapes must compose") {
    NetworkSpec s = tiny_spec();
    s.layers.back() = LayerSpec::dense(20, 3, Activation::Readout);  // 18 != 20
    CHECK_THROWS_AS(s.validate(), InvalidArgumentError);
  }
  SUBCASE("t_window must be positive") {
    NetworkSpec s = tiny_spec();
    s.t_window = 0;
    CHECK_THROWS_AS(s.validate(), InvalidArgumentError);
  }
}

TEST_CASE("spec JSON round-trips") {
  const NetworkSpec spec = default_network_spec();
  const std::string j = spec.to_json();
  const NetworkSpec back = NetworkSpec::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.t_window == spec.t_window);
  CHECK(back.layers.size() == spec.layers.size());
  CHECK_THROWS_AS(NetworkSpec::from_json("{not json"), ParseError);
}

TEST_CASE("build_pair is deterministic and shape-matched, with independent draws") {
  const NetworkSpec spec = tiny_spec();
  const ModelPair a = build_pair(spec, 7);
  const ModelPair b = build_pair(spec, 7);
  REQUIRE(a.snn.weights.size() == a.cnn.weights.size());
  bool any_differs = false;
  for (std::size_t p = 0; p < a.snn.weights.size(); ++p) {
    CHECK(a.snn.weights[p].shape == a.cnn.weights[p].shape);
    REQUIRE(a.snn.weights[p].data == b.snn.weights[p].data);  // bitwise
    REQUIRE(a.cnn.weights[p].data == b.cnn.weights[p].data);
    if (a.snn.weights[p].data != a.cnn.weights[p].data) any_differs = true;
  }
  CHECK(any_differs);

  const ModelPair c = build_pair(spec, 8);
  CHECK(a.snn.weights[0].data != c.snn.weights[0].data);
}

TEST_CASE("kaiming bound respected") {
  const Model m = build_model(tiny_spec(), ModelKind::Snn, 3);
  const auto geoms = m.geometry();
  for (std::size_t p = 0; p < m.weights.size(); ++p) {
    const double bound = std::sqrt(6.0 / geoms[p].fan_in);
    for (double w : m.weights[p].data) {
      CHECK(w >= -bound);
      CHECK(w <= bound);
    }
  }
}

TEST_CASE("all-black image yields zero prediction and silent layers") {
  const Model m = build_model(tiny_spec(), ModelKind::Snn, 1);
  const Tensor black = Tensor::zeros({1, 6, 6});
  ForwardTrace trace;
  const SnnForwardResult r = snn_forward(m, black, 3, &trace);
  for (double v : r.prediction.data) CHECK(v == 0.0);
  for (const LayerProfile& l : r.profile.layers) {
    for (double s : l.input_sparsity) CHECK(s == 1.0);
    for (double s : l.output_sparsity) CHECK(s == 1.0);
  }
}

TEST_CASE("forward profile matches a recount of the trace") {
  const NetworkSpec spec = default_network_spec();
  const Model m = build_model(spec, ModelKind::Snn, 11);
  const Tensor img = random_image(spec.input_shape, 99);
  ForwardTrace trace;
  const SnnForwardResult r = snn_forward(m, img, spec.t_window, &trace);

  REQUIRE(static_cast<int>(trace.inputs.size()) == spec.t_window);
  const std::size_t n_layers = r.profile.layers.size();
  for (int t = 0; t < spec.t_window; ++t) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      CHECK(r.profile.layers[l].input_sparsity[t] ==
            doctest::Approx(sparsity(trace.inputs[t][l])).epsilon(1e-15));
      if (l + 1 < n_layers) {
        CHECK(r.profile.layers[l].output_sparsity[t] ==
              doctest::Approx(sparsity(trace.spikes[t][l])).epsilon(1e-15));
        for (double s : trace.spikes[t][l].data) CHECK((s == 0.0 || s == 1.0));
      } else {
        CHECK(r.profile.layers[l].output_sparsity[t] == 1.0);  // readout never spikes
      }
    }
  }

  // sparsity chains: what layer l emits is what layer l+1 consumes
  for (int t = 0; t < spec.t_window; ++t) {
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      CHECK(r.profile.layers[l + 1].input_sparsity[t] ==
            doctest::Approx(r.profile.layers[l].output_sparsity[t]).epsilon(1e-15));
    }
  }
}

TEST_CASE("snn_forward is deterministic") {
  const NetworkSpec spec = tiny_spec();
  const Model m = build_model(spec, ModelKind::Snn, 5);
  const Tensor img = random_image(spec.input_shape, 5);
  const SnnForwardResult a = snn_forward(m, img, spec.t_window);
  const SnnForwardResult b = snn_forward(m, img, spec.t_window);
  CHECK(a.prediction.data == b.prediction.data);
}

TEST_CASE("cnn op counts are data-independent and match geometry") {
  const NetworkSpec spec = default_network_spec();
  const Model m = build_model(spec, ModelKind::Cnn, 2);
  const CnnForwardResult r1 = cnn_forward(m, random_image(spec.input_shape, 1));
  const CnnForwardResult r2 = cnn_forward(m, random_image(spec.input_shape, 2));
  CHECK(r1.op_counts == r2.op_counts);
  const std::vector<std::int64_t> expected{55296, 73728, 36864, 16384, 192};
  CHECK(r1.op_counts == expected);
  CHECK(r1.prediction.numel() == 3);
  CHECK(r1.prediction.data != r2.prediction.data);
}

TEST_CASE("forward rejects mismatched images and non-finite weights") {
  const Model m = build_model(tiny_spec(), ModelKind::Snn, 1);
  CHECK_THROWS_AS(snn_forward(m, Tensor::zeros({3, 6, 6}), 3), ShapeError);
  CHECK_THROWS_AS(snn_forward(m, Tensor::zeros({1, 6, 6}), 0), InvalidArgumentError);

  Model bad = m;
  bad.weights[0][0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(snn_forward(bad, Tensor::full({1, 6, 6}, 0.5), 3), NumericError);
}

TEST_CASE("checkpoint round-trips bitwise") {
  const auto dir = fresh_dir("ckpt");
  const std::string path = (dir / "model.ckpt").string();

  Model m = build_model(tiny_spec(), ModelKind::Snn, 21);
  m.decays = {0.7, 0.95};
  save_checkpoint(m, path);
  const Model back = load_checkpoint(path, ModelKind::Snn);
  CHECK(back.spec.to_json() == m.spec.to_json());
  CHECK(back.decays == m.decays);
  REQUIRE(back.weights.size() == m.weights.size());
  for (std::size_t p = 0; p < m.weights.size(); ++p)
    CHECK(back.weights[p].data == m.weights[p].data);

  const Model as_cnn = load_checkpoint(path, ModelKind::Cnn);
  CHECK(as_cnn.kind == ModelKind::Cnn);

  // trailing garbage is rejected
  {
    std::ofstream app(path, std::ios::binary | std::ios::app);
    app << "x";
  }
  CHECK_THROWS_AS(load_checkpoint(path, ModelKind::Snn), ParseError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string(), ModelKind::Snn), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mean_profile averages entrywise and checks geometry") {
  const NetworkSpec spec = tiny_spec();
  const Model m = build_model(spec, ModelKind::Snn, 4);
  const SnnForwardResult a = snn_forward(m, random_image(spec.input_shape, 41), spec.t_window);
  const SnnForwardResult b = snn_forward(m, random_image(spec.input_shape, 42), spec.t_window);

  const SparsityProfile mean = mean_profile({a.profile, b.profile});
  for (std::size_t l = 0; l < mean.layers.size(); ++l) {
    for (int t = 0; t < mean.t_window; ++t) {
      CHECK(mean.layers[l].input_sparsity[t] ==
            doctest::Approx((a.profile.layers[l].input_sparsity[t] +
                             b.profile.layers[l].input_sparsity[t]) /
                            2.0));
    }
  }

  SparsityProfile other = a.profile;
  other.layers[0].fan_in += 1;
  CHECK_THROWS_AS(mean_profile({a.profile, other}), ShapeError);
  CHECK_THROWS_AS(mean_profile({}), InvalidArgumentError);
}
