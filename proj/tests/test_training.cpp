#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "snnlab/data.hpp"
#include "snnlab/training.hpp"
#include "snnlab/rng.hpp"

using namespace snnlab;

namespace {

// conv -> flatten -> dense readout over a 6x6 single-channel frame
NetworkSpec tiny_snn_spec() {
  NetworkSpec spec;
  spec.input_shape = {1, 6, 6};
  spec.t_window = 3;
  spec.layers = {LayerSpec::conv(1, 2, 3, 2, 1), LayerSpec::flatten(),
                 LayerSpec::dense(18, 3, Activation::Readout)};
  return spec;
}

// readout-only network: with t_window 1 the prediction is exactly W x
NetworkSpec readout_only_spec(int t_window) {
  NetworkSpec spec;
  spec.input_shape = {1, 4, 4};
  spec.t_window = t_window;
  spec.layers = {LayerSpec::flatten(), LayerSpec::dense(16, 3, Activation::Readout)};
  return spec;
}

Tensor random_image(const std::array<int, 3>& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor img({shape[0], shape[1], shape[2]});
  for (double& v : img.data) v = next_uniform01(rng);
  return img;
}

double rel_or_abs(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-12});
}

}  // namespace

TEST_CASE("train config JSON round trip and validation") {
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr = 0.1;
  cfg.momentum = 0.0;
  cfg.batch_size = 4;
  cfg.seed = 99;
  cfg.learn_beta = false;
  cfg.detach_reset = false;
  const TrainConfig back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.epochs == 30);
  CHECK(back.lr == 0.1);
  CHECK(back.momentum == 0.0);
  CHECK(back.batch_size == 4);
  CHECK(back.seed == 99);
  CHECK_FALSE(back.learn_beta);
  CHECK_FALSE(back.detach_reset);

  const TrainConfig defaults = TrainConfig::from_json("{}");
  CHECK(defaults.epochs == 10);
  CHECK(defaults.momentum == 0.9);
  CHECK(defaults.detach_reset);  // reset path is detached unless asked otherwise

  CHECK_THROWS_AS(TrainConfig::from_json(R"({"epochs": 0})"), InvalidArgumentError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"lr": 0.0})"), InvalidArgumentError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"momentum": 1.0})"), InvalidArgumentError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"batch_size": 0})"), InvalidArgumentError);
  CHECK_THROWS_AS(TrainConfig::from_json(R"({"lerning_rate": 0.1})"), ParseError);
  CHECK_THROWS_AS(TrainConfig::from_json("{oops"), ParseError);
}

TEST_CASE("linear layer gradients match hand values") {
  const Tensor weight({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor grad_out({2}, {10, 100});
  const Tensor input({3}, {7, 8, 9});

  const Tensor gi = linear_grad_input(grad_out, weight);
  CHECK(gi.data == std::vector<double>{410, 520, 630});

  const Tensor gw = linear_grad_weight(grad_out, input);
  CHECK(gw.shape == std::vector<int>{2, 3});
  CHECK(gw.data == std::vector<double>{70, 80, 90, 700, 800, 900});

  CHECK_THROWS_AS(linear_grad_input(Tensor({3}, {1, 2, 3}), weight), ShapeError);
}

TEST_CASE("conv gradient primitives agree with finite differences") {
  std::mt19937_64 rng(31);
  Tensor input({2, 5, 5});
  for (double& v : input.data) v = next_uniform01(rng);
  Tensor kernel({3, 2, 3, 3});
  for (double& v : kernel.data) v = next_uniform01(rng) - 0.5;
  const int stride = 2, pad = 1;

  Tensor grad_out({3, 3, 3});
  for (double& v : grad_out.data) v = next_uniform01(rng) - 0.5;

  // scalar objective: <grad_out, conv(input, kernel)> -- linear in both args
  const auto objective = [&](const Tensor& in, const Tensor& k) {
    const Tensor out = conv2d(in, k, stride, pad);
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.numel(); ++i) acc += grad_out[i] * out[i];
    return acc;
  };
  const double eps = 1e-6;

  SUBCASE("input gradient") {
    const Tensor gi = conv2d_grad_input(grad_out, kernel, stride, pad, input.shape);
    REQUIRE(gi.shape == input.shape);
    for (std::int64_t i = 0; i < gi.numel(); i += 7) {
      Tensor probe = input;
      probe[i] += eps;
      const double lp = objective(probe, kernel);
      probe[i] = input[i] - eps;
      const double lm = objective(probe, kernel);
      CHECK(rel_or_abs(gi[i], (lp - lm) / (2 * eps)) <= 1e-6);
    }
  }
  SUBCASE("kernel gradient") {
    const Tensor gk = conv2d_grad_kernel(grad_out, input, kernel.shape, stride, pad);
    REQUIRE(gk.shape == kernel.shape);
    for (std::int64_t i = 0; i < gk.numel(); i += 5) {
      Tensor probe = kernel;
      probe[i] += eps;
      const double lp = objective(input, probe);
      probe[i] = kernel[i] - eps;
      const double lm = objective(input, probe);
      CHECK(rel_or_abs(gk[i], (lp - lm) / (2 * eps)) <= 1e-6);
    }
  }
  SUBCASE("shape validation") {
    CHECK_THROWS_AS(conv2d_grad_input(grad_out, kernel, stride, pad, {2, 5}), ShapeError);
    CHECK_THROWS_AS(conv2d_grad_input(Tensor::zeros({3, 4, 4}), kernel, stride, pad,
                                      input.shape),
                    ShapeError);
    CHECK_THROWS_AS(conv2d_grad_kernel(grad_out, input, {3, 2, 3}, stride, pad), ShapeError);
  }
}

TEST_CASE("taped hard forward reproduces the plain forward bit for bit") {
  const NetworkSpec spec = tiny_snn_spec();
  const Model m = build_model(spec, ModelKind::Snn, 17);
  const Tensor img = random_image(spec.input_shape, 17);

  ForwardTrace trace;
  const SnnForwardResult plain = snn_forward(m, img, spec.t_window, &trace);
  const TapedForward tape = snn_forward_taped(m, img, SpikeMode::Hard);

  CHECK(tape.prediction.data == plain.prediction.data);
  for (int t = 0; t < spec.t_window; ++t) {
    CHECK(tape.s[t][0].data == trace.spikes[t][0].data);
    CHECK(tape.x[t][1].data == trace.inputs[t][1].data);
  }

  // soft mode emits graded spikes strictly inside (0,1)
  const TapedForward soft = snn_forward_taped(m, img, SpikeMode::Soft);
  for (double s : soft.s[0][0].data) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("gradient check: CNN end to end") {
  const NetworkSpec spec = tiny_snn_spec();
  const Model m = build_model(spec, ModelKind::Cnn, 23);
  TrainExample ex{random_image(spec.input_shape, 5), {0.3, 0.6, 0.2}};
  CHECK(grad_check(m, ex, 1e-5) <= 1e-5);
}

TEST_CASE("gradient check: SNN readout exactly, spiking layers on the soft surface") {
  const NetworkSpec spec = tiny_snn_spec();
  const Model m = build_model(spec, ModelKind::Snn, 29);
  TrainExample ex{random_image(spec.input_shape, 9), {0.4, 0.5, 0.25}};

  // readout path under the true forward is exactly differentiable
  CHECK(grad_check(m, ex.image, ex.target, SpikeMode::Hard, true, 1e-5, 1, 2) <= 1e-5);
  // full soft surface, reset attached
  CHECK(grad_check(m, ex.image, ex.target, SpikeMode::Soft, false, 1e-5) <= 1e-3);
  // the convenience form combines both groups
  CHECK(grad_check(m, ex, 1e-5) <= 1e-3);

  CHECK_THROWS_AS(grad_check(m, ex, 1e-8), InvalidArgumentError);
  CHECK_THROWS_AS(grad_check(m, ex, 1e-2), InvalidArgumentError);
  CHECK_THROWS_AS(grad_check(m, ex.image, ex.target, SpikeMode::Hard, true, 0.0),
                  InvalidArgumentError);
  CHECK_THROWS_AS(grad_check(m, ex.image, ex.target, SpikeMode::Hard, true, 1e-5, 2, 1),
                  InvalidArgumentError);
}

TEST_CASE("gradient check: silent network is exactly zero everywhere") {
  const NetworkSpec spec = tiny_snn_spec();
  Model m = build_model(spec, ModelKind::Snn, 1);
  for (Tensor& w : m.weights)
    for (double& v : w.data) v = 0.0;
  TrainExample ex{random_image(spec.input_shape, 2), {0.5, 0.5, 0.5}};
  CHECK(grad_check(m, ex.image, ex.target, SpikeMode::Hard, true, 1e-5) == 0.0);
}

TEST_CASE("detach_reset removes the reset contribution from hidden gradients") {
  const NetworkSpec spec = tiny_snn_spec();
  const Model m = build_model(spec, ModelKind::Snn, 3);
  const Tensor img = random_image(spec.input_shape, 3);
  const std::array<double, 3> target{0.2, 0.8, 0.5};

  const TapedForward tape = snn_forward_taped(m, img, SpikeMode::Soft);
  const Gradients detached = snn_backward(m, tape, target, SpikeMode::Soft, true);
  const Gradients attached = snn_backward(m, tape, target, SpikeMode::Soft, false);

  bool hidden_differs = false;
  for (std::int64_t i = 0; i < detached.weights[0].numel(); ++i)
    if (detached.weights[0][i] != attached.weights[0][i]) hidden_differs = true;
  CHECK(hidden_differs);
  // the readout layer is below every reset, so its gradient is untouched
  CHECK(detached.weights[1].data == attached.weights[1].data);
}

TEST_CASE("a target equal to the prediction is a training fixed point") {
  const NetworkSpec spec = tiny_snn_spec();
  Model m = build_model(spec, ModelKind::Snn, 13);
  const Tensor img = random_image(spec.input_shape, 13);
  const Tensor pred = snn_forward(m, img, spec.t_window).prediction;

  TrainExample ex;
  ex.image = img;
  ex.target = {pred[0], pred[1], pred[2]};

  const std::vector<Tensor> before = m.weights;
  const std::vector<double> decays_before = m.decays;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 1;
  const TrainResult r = train(m, {ex}, cfg);

  REQUIRE(r.epoch_loss.size() == 3);
  for (double l : r.epoch_loss) CHECK(l == 0.0);
  for (std::size_t p = 0; p < before.size(); ++p)
    CHECK(m.weights[p].data == before[p].data);
  CHECK(m.decays == decays_before);
}

TEST_CASE("readout-only network fits realizable targets to high precision") {
  const NetworkSpec spec = readout_only_spec(1);
  Model m = build_model(spec, ModelKind::Snn, 41);

  // realizable targets: y = A x for a fixed random map A
  std::mt19937_64 rng(77);
  Tensor a({3, 16});
  for (double& v : a.data) v = next_uniform01(rng) - 0.5;
  std::vector<TrainExample> examples;
  for (int k = 0; k < 8; ++k) {
    TrainExample ex;
    ex.image = random_image(spec.input_shape, 100 + static_cast<std::uint64_t>(k));
    Tensor flat({16}, ex.image.data);
    const Tensor y = linear(flat, a);
    ex.target = {y[0], y[1], y[2]};
    examples.push_back(std::move(ex));
  }

  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.lr = 0.1;
  cfg.momentum = 0.9;
  cfg.batch_size = 8;
  cfg.seed = 7;
  const TrainResult r = train(m, examples, cfg);
  CHECK(r.final_loss <= 1e-4);
  CHECK(eval_mse(m, examples) <= 1e-4);
  CHECK(r.epoch_loss.front() > r.epoch_loss.back());
}

TEST_CASE("training is bitwise deterministic in the seed") {
  const NetworkSpec spec = tiny_snn_spec();
  std::vector<TrainExample> examples;
  for (int k = 0; k < 4; ++k)
    examples.push_back(
        {random_image(spec.input_shape, 50 + static_cast<std::uint64_t>(k)),
         {0.25 * k, 0.5, 1.0 - 0.2 * k}});

  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.lr = 0.02;
  cfg.batch_size = 2;
  cfg.seed = 3;

  Model m1 = build_model(spec, ModelKind::Snn, 61);
  Model m2 = build_model(spec, ModelKind::Snn, 61);
  const TrainResult r1 = train(m1, examples, cfg);
  const TrainResult r2 = train(m2, examples, cfg);

  CHECK(r1.epoch_loss == r2.epoch_loss);
  for (std::size_t p = 0; p < m1.weights.size(); ++p)
    CHECK(m1.weights[p].data == m2.weights[p].data);
  CHECK(m1.decays == m2.decays);

  // a different shuffle seed takes a different path
  cfg.seed = 4;
  Model m3 = build_model(spec, ModelKind::Snn, 61);
  const TrainResult r3 = train(m3, examples, cfg);
  CHECK(r3.epoch_loss != r1.epoch_loss);
}

TEST_CASE("learned decay parameters stay inside (0, 1]") {
  // t_window 2 readout: prediction = beta (W x) + W x, so the decay gradient
  // is large and of controllable sign.
  const NetworkSpec spec = readout_only_spec(2);
  const Tensor img = Tensor::full({1, 4, 4}, 0.5);

  auto run_once = [&](double beta0, double delta) {
    Model m = build_model(spec, ModelKind::Snn, 1);
    for (double& v : m.weights[0].data) v = 0.2;
    m.decays[0] = beta0;
    const Tensor pred = snn_forward(m, img, spec.t_window).prediction;
    TrainExample ex;
    ex.image = img;
    ex.target = {pred[0] - delta, pred[1] - delta, pred[2] - delta};
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.lr = 1.0;
    cfg.momentum = 0.0;
    cfg.batch_size = 1;
    train(m, {ex}, cfg);
    return m.decays[0];
  };

  // pushing beta below zero clamps at the floor, above one at the ceiling
  CHECK(run_once(0.005, 1.0) == 0.001);
  CHECK(run_once(0.999, -1.0) == 1.0);

  // with learning disabled the decay never moves
  Model frozen = build_model(spec, ModelKind::Snn, 1);
  frozen.decays[0] = 0.37;
  TrainExample ex{random_image(spec.input_shape, 8), {0.9, 0.9, 0.9}};
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learn_beta = false;
  cfg.batch_size = 1;
  train(frozen, {ex}, cfg);
  CHECK(frozen.decays[0] == 0.37);
}

TEST_CASE("divergent training reports a numeric error") {
  // A readout-only model is linear in its weights, so an oversized learning
  // rate compounds geometrically instead of saturating through dead units.
  const NetworkSpec spec = readout_only_spec(2);
  Model m = build_model(spec, ModelKind::Cnn, 19);
  std::vector<TrainExample> examples{{random_image(spec.input_shape, 1), {0.5, 0.5, 0.5}}};
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 1e6;
  cfg.momentum = 0.9;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(train(m, examples, cfg), NumericError);
}

TEST_CASE("training rejects empty datasets and bad configs") {
  Model m = build_model(tiny_snn_spec(), ModelKind::Snn, 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(m, {}, cfg), InvalidArgumentError);
  cfg.epochs = 0;
  std::vector<TrainExample> one{{random_image({1, 6, 6}, 1), {0.5, 0.5, 0.5}}};
  CHECK_THROWS_AS(train(m, one, cfg), InvalidArgumentError);
  CHECK_THROWS_AS(eval_mse(m, {}), InvalidArgumentError);
}

TEST_CASE("examples load from a generated dataset") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "snnlab_test_train_data";
  fs::remove_all(dir);
  const DatasetManifest manifest = gen_dataset(2, 16, 16, {0.8, 0.9}, 0.005, 5, dir.string());

  const std::vector<TrainExample> examples =
      load_examples((dir / "manifest.json").string());
  REQUIRE(examples.size() == manifest.items.size());
  for (std::size_t k = 0; k < examples.size(); ++k) {
    CHECK(examples[k].image.shape == std::vector<int>{3, 16, 16});
    CHECK(examples[k].target == manifest.items[k].target);
  }
  fs::remove_all(dir);
}
