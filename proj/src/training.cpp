#include "snnlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "snnlab/data.hpp"
#include "snnlab/errors.hpp"
#include "snnlab/rng.hpp"
#include "json.hpp"

namespace snnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

double mse_loss(const Tensor& prediction, const std::array<double, 3>& target) {
  if (prediction.numel() != 3)
    throw ShapeError("prediction shape " + prediction.shape_str() + " != [3]");
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = prediction[i] - target[i];
    acc += d * d;
  }
  return acc / 3.0;
}

Tensor loss_grad(const Tensor& prediction, const std::array<double, 3>& target) {
  Tensor g(prediction.shape);
  const double inv_n = 1.0 / static_cast<double>(prediction.numel());
  for (std::int64_t i = 0; i < prediction.numel(); ++i)
    g[i] = 2.0 * (prediction[i] - target[static_cast<std::size_t>(i)]) * inv_n;
  return g;
}

void check_image_shape(const Model& model, const Tensor& image) {
  const auto& s = model.spec.input_shape;
  if (image.rank() != 3 || image.shape[0] != s[0] || image.shape[1] != s[1] ||
      image.shape[2] != s[2]) {
    throw ShapeError("image shape " + image.shape_str() + " does not match network input [" +
                     std::to_string(s[0]) + "," + std::to_string(s[1]) + "," +
                     std::to_string(s[2]) + "]");
  }
}

Tensor layer_apply(const LayerSpec& l, const Tensor& w, const Tensor& input) {
  if (l.kind == LayerKind::Conv) return conv2d(input, w, l.stride, l.pad);
  return linear(input, w);
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgumentError("epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgumentError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw InvalidArgumentError("momentum must lie in [0,1)");
  if (batch_size < 1) throw InvalidArgumentError("batch_size must be >= 1");
}

std::string TrainConfig::to_json() const {
  ordered_json j;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["momentum"] = momentum;
  j["batch_size"] = batch_size;
  j["seed"] = seed;
  j["learn_beta"] = learn_beta;
  j["detach_reset"] = detach_reset;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  TrainConfig cfg;
  try {
    if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
    if (j.contains("lr")) cfg.lr = j["lr"].get<double>();
    if (j.contains("momentum")) cfg.momentum = j["momentum"].get<double>();
    if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("learn_beta")) cfg.learn_beta = j["learn_beta"].get<bool>();
    if (j.contains("detach_reset")) cfg.detach_reset = j["detach_reset"].get<bool>();
  } catch (const std::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "epochs" && key != "lr" && key != "momentum" && key != "batch_size" &&
        key != "seed" && key != "learn_beta" && key != "detach_reset") {
      throw ParseError("train config: unknown field '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<TrainExample> load_examples(const std::string& manifest_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::vector<TrainExample> examples;
  examples.reserve(manifest.items.size());
  for (const ManifestItem& item : manifest.items) {
    TrainExample ex;
    ex.image = read_image(manifest_item_path(manifest_path, item));
    ex.target = item.target;
    examples.push_back(std::move(ex));
  }
  return examples;
}

Gradients Gradients::zeros_like(const Model& model) {
  Gradients g;
  g.weights.reserve(model.weights.size());
  for (const Tensor& w : model.weights) g.weights.push_back(Tensor::zeros(w.shape));
  g.decays.assign(model.decays.size(), 0.0);
  return g;
}

void Gradients::accumulate(const Gradients& other) {
  if (weights.size() != other.weights.size())
    throw ShapeError("gradient layer counts disagree");
  for (std::size_t p = 0; p < weights.size(); ++p) {
    if (!weights[p].same_shape(other.weights[p]))
      throw ShapeError("gradient shapes disagree at layer " + std::to_string(p));
    add_into(weights[p], other.weights[p]);
  }
  for (std::size_t p = 0; p < decays.size(); ++p) decays[p] += other.decays[p];
}

void Gradients::scale(double factor) {
  for (Tensor& w : weights)
    for (double& v : w.data) v *= factor;
  for (double& d : decays) d *= factor;
}

Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& kernel, int stride, int padding,
                         const std::vector<int>& input_shape) {
  if (input_shape.size() != 3) throw ShapeError("conv2d_grad_input expects a rank-3 input shape");
  const int c_in = input_shape[0], h = input_shape[1], w = input_shape[2];
  const int c_out = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
  if (kernel.shape[1] != c_in)
    throw ShapeError("kernel channel count does not match input shape");
  const int oh = conv_out_dim(h, kh, stride, padding);
  const int ow = conv_out_dim(w, kw, stride, padding);
  if (grad_out.rank() != 3 || grad_out.shape[0] != c_out || grad_out.shape[1] != oh ||
      grad_out.shape[2] != ow) {
    throw ShapeError("grad_out shape " + grad_out.shape_str() + " does not match conv output");
  }

  Tensor gi = Tensor::zeros(input_shape);
  for (int co = 0; co < c_out; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = grad_out.at3(co, oy, ox);
        if (g == 0.0) continue;
        const int y0 = oy * stride - padding;
        const int x0 = ox * stride - padding;
        for (int ci = 0; ci < c_in; ++ci) {
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = y0 + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = x0 + kx;
              if (ix < 0 || ix >= w) continue;
              gi.at3(ci, iy, ix) += g * kernel.data[static_cast<std::size_t>(
                                            ((co * c_in + ci) * kh + ky) * kw + kx)];
            }
          }
        }
      }
    }
  }
  return gi;
}

Tensor conv2d_grad_kernel(const Tensor& grad_out, const Tensor& input,
                          const std::vector<int>& kernel_shape, int stride, int padding) {
  if (kernel_shape.size() != 4) throw ShapeError("conv2d_grad_kernel expects a rank-4 kernel shape");
  const int c_out = kernel_shape[0], c_in = kernel_shape[1], kh = kernel_shape[2],
            kw = kernel_shape[3];
  if (input.rank() != 3 || input.shape[0] != c_in)
    throw ShapeError("input shape " + input.shape_str() + " does not match kernel channels");
  const int h = input.shape[1], w = input.shape[2];
  const int oh = conv_out_dim(h, kh, stride, padding);
  const int ow = conv_out_dim(w, kw, stride, padding);
  if (grad_out.rank() != 3 || grad_out.shape[0] != c_out || grad_out.shape[1] != oh ||
      grad_out.shape[2] != ow) {
    throw ShapeError("grad_out shape " + grad_out.shape_str() + " does not match conv output");
  }

  Tensor gk = Tensor::zeros(kernel_shape);
  for (int co = 0; co < c_out; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = grad_out.at3(co, oy, ox);
        if (g == 0.0) continue;
        const int y0 = oy * stride - padding;
        const int x0 = ox * stride - padding;
        for (int ci = 0; ci < c_in; ++ci) {
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = y0 + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = x0 + kx;
              if (ix < 0 || ix >= w) continue;
              gk.data[static_cast<std::size_t>(((co * c_in + ci) * kh + ky) * kw + kx)] +=
                  g * input.at3(ci, iy, ix);
            }
          }
        }
      }
    }
  }
  return gk;
}

Tensor linear_grad_input(const Tensor& grad_out, const Tensor& weight) {
  const int n_out = weight.shape[0], n_in = weight.shape[1];
  if (grad_out.numel() != n_out)
    throw ShapeError("grad_out length does not match weight rows");
  Tensor gi = Tensor::zeros({n_in});
  for (int j = 0; j < n_out; ++j) {
    const double g = grad_out[j];
    if (g == 0.0) continue;
    const double* row = &weight.data[static_cast<std::size_t>(j) * n_in];
    for (int i = 0; i < n_in; ++i) gi[i] += g * row[i];
  }
  return gi;
}

Tensor linear_grad_weight(const Tensor& grad_out, const Tensor& input) {
  const int n_out = static_cast<int>(grad_out.numel());
  const int n_in = static_cast<int>(input.numel());
  Tensor gw = Tensor::zeros({n_out, n_in});
  for (int j = 0; j < n_out; ++j) {
    const double g = grad_out[j];
    if (g == 0.0) continue;
    double* row = &gw.data[static_cast<std::size_t>(j) * n_in];
    for (int i = 0; i < n_in; ++i) row[i] = g * input[i];
  }
  return gw;
}

TapedForward snn_forward_taped(const Model& model, const Tensor& image, SpikeMode mode) {
  check_image_shape(model, image);
  const auto geoms = model.geometry();
  const std::size_t n_param = geoms.size();
  const int t_window = model.spec.t_window;
  const double th = model.threshold;
  const double slope = model.surrogate_slope;

  TapedForward tape;
  tape.x.assign(t_window, std::vector<Tensor>(n_param));
  tape.v_prev.assign(t_window, std::vector<Tensor>(n_param));
  tape.v.assign(t_window, std::vector<Tensor>(n_param));
  tape.s.assign(t_window, std::vector<Tensor>(n_param));

  std::vector<Tensor> v(n_param), s_prev(n_param);
  for (std::size_t p = 0; p < n_param; ++p) {
    v[p] = Tensor::zeros(geoms[p].out_shape);
    s_prev[p] = Tensor::zeros(geoms[p].out_shape);
  }

  for (int t = 0; t < t_window; ++t) {
    Tensor cur = image;
    std::size_t p = 0;
    for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
      const LayerSpec& l = model.spec.layers[i];
      if (l.kind == LayerKind::Flatten) {
        const int flat_n = static_cast<int>(cur.numel());
        cur = Tensor({flat_n}, std::move(cur.data));
        continue;
      }
      const bool is_last = (p + 1 == n_param);
      tape.x[t][p] = cur;
      Tensor wx = layer_apply(l, model.weights[p], cur);
      if (!wx.all_finite())
        throw NumericError("non-finite activation at layer " + std::to_string(i));
      tape.v_prev[t][p] = v[p];
      const double decay = model.decays[p];

      // Same arithmetic and operation order as lif_step, so Hard mode
      // reproduces snn_forward bit for bit.
      Tensor vn(wx.shape);
      if (is_last) {
        for (std::int64_t j = 0; j < wx.numel(); ++j) vn[j] = decay * v[p][j] + wx[j];
        v[p] = std::move(vn);
        tape.v[t][p] = v[p];
        if (t == t_window - 1) tape.prediction = v[p];
      } else {
        Tensor sp(wx.shape);
        for (std::int64_t j = 0; j < wx.numel(); ++j) {
          double nv = decay * v[p][j] + wx[j];
          nv -= th * s_prev[p][j];
          vn[j] = nv;
          sp[j] = (mode == SpikeMode::Hard) ? ((nv > th) ? 1.0 : 0.0)
                                            : surrogate_sigmoid_scalar(nv - th, slope);
        }
        v[p] = std::move(vn);
        tape.v[t][p] = v[p];
        tape.s[t][p] = sp;
        s_prev[p] = sp;
        cur = std::move(sp);
      }
      ++p;
    }
  }
  return tape;
}

Gradients snn_backward(const Model& model, const TapedForward& tape,
                       const std::array<double, 3>& target, SpikeMode mode, bool detach_reset) {
  (void)mode;  // the surrogate is the derivative of the soft spike, so both
               // modes share one backward rule
  const auto geoms = model.geometry();
  const int n_param = static_cast<int>(geoms.size());
  const int t_window = static_cast<int>(tape.x.size());
  const double th = model.threshold;
  const double slope = model.surrogate_slope;

  Gradients grads = Gradients::zeros_like(model);
  const Tensor dpred = loss_grad(tape.prediction, target);

  // Gradient flowing into v[t] from everything later than t, per layer.
  std::vector<Tensor> dv_carry(n_param);
  for (int p = 0; p < n_param; ++p) dv_carry[p] = Tensor::zeros(geoms[p].out_shape);

  for (int t = t_window - 1; t >= 0; --t) {
    Tensor dx_above;  // grad w.r.t. this timestep's input of the layer above
    for (int p = n_param - 1; p >= 0; --p) {
      const bool is_last = (p == n_param - 1);
      const double decay = model.decays[p];
      const Tensor& vt = tape.v[t][p];
      const Tensor& vp = tape.v_prev[t][p];

      Tensor dv(vt.shape);
      if (is_last) {
        for (std::int64_t j = 0; j < vt.numel(); ++j) {
          dv[j] = decay * dv_carry[p][j] + ((t == t_window - 1) ? dpred[j] : 0.0);
        }
      } else {
        // s[t] feeds the layer above now and the reset of v[t+1];
        // v[t] additionally leaks into v[t+1].
        for (std::int64_t j = 0; j < vt.numel(); ++j) {
          double ds = dx_above[j];
          if (!detach_reset) ds -= th * dv_carry[p][j];
          dv[j] = ds * surrogate_grad_scalar(vt[j] - th, slope) + decay * dv_carry[p][j];
        }
      }

      const LayerSpec& l = model.spec.layers[geoms[p].spec_index];
      const Tensor& x = tape.x[t][p];
      if (l.kind == LayerKind::Conv) {
        add_into(grads.weights[p],
                 conv2d_grad_kernel(dv, x, model.weights[p].shape, l.stride, l.pad));
        if (p > 0) dx_above = conv2d_grad_input(dv, model.weights[p], l.stride, l.pad, x.shape);
      } else {
        add_into(grads.weights[p], linear_grad_weight(dv, x));
        if (p > 0) dx_above = linear_grad_input(dv, model.weights[p]);
      }
      for (std::int64_t j = 0; j < vt.numel(); ++j) grads.decays[p] += dv[j] * vp[j];
      dv_carry[p] = std::move(dv);
    }
  }
  return grads;
}

CnnTape cnn_forward_taped(const Model& model, const Tensor& image) {
  check_image_shape(model, image);
  const auto geoms = model.geometry();

  CnnTape tape;
  Tensor cur = image;
  std::size_t p = 0;
  for (const LayerSpec& l : model.spec.layers) {
    if (l.kind == LayerKind::Flatten) {
      const int flat_n = static_cast<int>(cur.numel());
      cur = Tensor({flat_n}, std::move(cur.data));
      continue;
    }
    tape.x.push_back(cur);
    Tensor z = layer_apply(l, model.weights[p], cur);
    if (!z.all_finite()) throw NumericError("non-finite activation in cnn forward");
    tape.z.push_back(z);
    const bool is_last = (p + 1 == geoms.size());
    if (!is_last) {
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
    }
    cur = std::move(z);
    ++p;
  }
  tape.prediction = std::move(cur);
  return tape;
}

Gradients cnn_backward(const Model& model, const CnnTape& tape,
                       const std::array<double, 3>& target) {
  const auto geoms = model.geometry();
  const int n_param = static_cast<int>(geoms.size());

  Gradients grads = Gradients::zeros_like(model);
  Tensor da = loss_grad(tape.prediction, target);

  for (int p = n_param - 1; p >= 0; --p) {
    const bool is_last = (p == n_param - 1);
    const Tensor& z = tape.z[static_cast<std::size_t>(p)];
    Tensor dz(z.shape);
    for (std::int64_t j = 0; j < z.numel(); ++j) {
      dz[j] = is_last ? da[j] : (z[j] > 0.0 ? da[j] : 0.0);
    }
    const LayerSpec& l = model.spec.layers[geoms[static_cast<std::size_t>(p)].spec_index];
    const Tensor& x = tape.x[static_cast<std::size_t>(p)];
    if (l.kind == LayerKind::Conv) {
      add_into(grads.weights[static_cast<std::size_t>(p)],
               conv2d_grad_kernel(dz, x, model.weights[static_cast<std::size_t>(p)].shape,
                                  l.stride, l.pad));
      if (p > 0)
        da = conv2d_grad_input(dz, model.weights[static_cast<std::size_t>(p)], l.stride, l.pad,
                               x.shape);
    } else {
      add_into(grads.weights[static_cast<std::size_t>(p)], linear_grad_weight(dz, x));
      if (p > 0) da = linear_grad_input(dz, model.weights[static_cast<std::size_t>(p)]);
    }
  }
  return grads;
}

double loss_and_gradients(const Model& model, const TrainExample& ex, bool detach_reset,
                          Gradients* grads) {
  if (model.kind == ModelKind::Cnn) {
    const CnnTape tape = cnn_forward_taped(model, ex.image);
    if (grads) *grads = cnn_backward(model, tape, ex.target);
    return mse_loss(tape.prediction, ex.target);
  }
  const TapedForward tape = snn_forward_taped(model, ex.image, SpikeMode::Hard);
  if (grads) *grads = snn_backward(model, tape, ex.target, SpikeMode::Hard, detach_reset);
  return mse_loss(tape.prediction, ex.target);
}

TrainResult train(Model& model, const std::vector<TrainExample>& examples,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (examples.empty()) throw InvalidArgumentError("training dataset is empty");

  const std::size_t n = examples.size();
  const std::size_t n_layers = model.weights.size();

  Gradients velocity = Gradients::zeros_like(model);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the raw engine: identical order on every platform.
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      Gradients batch = Gradients::zeros_like(model);
      Gradients sample;
      for (std::size_t k = start; k < end; ++k) {
        loss_sum += loss_and_gradients(model, examples[order[k]], cfg.detach_reset, &sample);
        batch.accumulate(sample);
      }
      batch.scale(1.0 / static_cast<double>(end - start));

      for (std::size_t p = 0; p < n_layers; ++p) {
        Tensor& vel = velocity.weights[p];
        Tensor& w = model.weights[p];
        const Tensor& g = batch.weights[p];
        for (std::int64_t j = 0; j < w.numel(); ++j) {
          vel[j] = cfg.momentum * vel[j] + g[j];
          w[j] -= cfg.lr * vel[j];
        }
        if (cfg.learn_beta) {
          velocity.decays[p] = cfg.momentum * velocity.decays[p] + batch.decays[p];
          model.decays[p] -= cfg.lr * velocity.decays[p];
          model.decays[p] = std::clamp(model.decays[p], 1e-3, 1.0);
        }
      }
    }

    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    result.epoch_loss.push_back(epoch_loss);
  }

  result.final_loss = result.epoch_loss.back();
  return result;
}

double eval_mse(const Model& model, const std::vector<TrainExample>& examples) {
  if (examples.empty()) throw InvalidArgumentError("evaluation dataset is empty");
  double acc = 0.0;
  for (const TrainExample& ex : examples) {
    const Tensor pred = (model.kind == ModelKind::Snn)
                            ? snn_forward(model, ex.image, model.spec.t_window).prediction
                            : cnn_forward(model, ex.image).prediction;
    acc += mse_loss(pred, ex.target);
  }
  return acc / static_cast<double>(examples.size());
}

double grad_check(const Model& model, const Tensor& image, const std::array<double, 3>& target,
                  SpikeMode mode, bool detach_reset, double epsilon, int layer_begin,
                  int layer_end, int max_per_layer) {
  if (!(epsilon > 0.0)) throw InvalidArgumentError("epsilon must be positive");
  if (max_per_layer < 1) throw InvalidArgumentError("max_per_layer must be >= 1");
  const int n_param = static_cast<int>(model.weights.size());
  if (layer_end == -1) layer_end = n_param;
  if (layer_begin < 0 || layer_end > n_param || layer_begin >= layer_end)
    throw InvalidArgumentError("bad layer range for grad_check");

  Gradients analytic;
  if (model.kind == ModelKind::Cnn) {
    analytic = cnn_backward(model, cnn_forward_taped(model, image), target);
  } else {
    const TapedForward tape = snn_forward_taped(model, image, mode);
    analytic = snn_backward(model, tape, target, mode, detach_reset);
  }

  const auto loss_of = [&](const Model& m) {
    const Tensor pred = (m.kind == ModelKind::Cnn)
                            ? cnn_forward_taped(m, image).prediction
                            : snn_forward_taped(m, image, mode).prediction;
    return mse_loss(pred, target);
  };
  const auto rel_err = [](double a, double f) {
    return std::fabs(a - f) / std::max({std::fabs(a), std::fabs(f), 1e-12});
  };

  Model probe = model;
  double max_rel = 0.0;
  for (int p = layer_begin; p < layer_end; ++p) {
    Tensor& w = probe.weights[static_cast<std::size_t>(p)];
    const std::int64_t count = w.numel();
    const std::int64_t step = std::max<std::int64_t>(1, count / max_per_layer);
    int probed = 0;
    for (std::int64_t i = 0; i < count && probed < max_per_layer; i += step, ++probed) {
      const double orig = w[i];
      w[i] = orig + epsilon;
      const double lp = loss_of(probe);
      w[i] = orig - epsilon;
      const double lm = loss_of(probe);
      w[i] = orig;
      const double fd = (lp - lm) / (2.0 * epsilon);
      max_rel = std::max(max_rel, rel_err(analytic.weights[static_cast<std::size_t>(p)][i], fd));
    }
    if (model.kind == ModelKind::Snn) {
      const double orig = probe.decays[static_cast<std::size_t>(p)];
      probe.decays[static_cast<std::size_t>(p)] = orig + epsilon;
      const double lp = loss_of(probe);
      probe.decays[static_cast<std::size_t>(p)] = orig - epsilon;
      const double lm = loss_of(probe);
      probe.decays[static_cast<std::size_t>(p)] = orig;
      const double fd = (lp - lm) / (2.0 * epsilon);
      max_rel = std::max(max_rel, rel_err(analytic.decays[static_cast<std::size_t>(p)], fd));
    }
  }
  return max_rel;
}

double grad_check(const Model& model, const TrainExample& sample, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw InvalidArgumentError("epsilon must lie in [1e-7, 1e-3]");
  if (model.kind == ModelKind::Cnn) {
    return grad_check(model, sample.image, sample.target, SpikeMode::Hard, true, epsilon);
  }
  const int n_param = static_cast<int>(model.weights.size());
  // Readout parameters on the true forward: upstream spikes do not depend on
  // them, so the path is exactly differentiable.
  double worst = grad_check(model, sample.image, sample.target, SpikeMode::Hard, true, epsilon,
                            n_param - 1, n_param);
  if (n_param > 1) {
    // Spiking-layer parameters on the soft-relaxed model, reset attached so
    // the analytic recursion matches the differentiated object exactly.
    worst = std::max(worst, grad_check(model, sample.image, sample.target, SpikeMode::Soft,
                                       false, epsilon, 0, n_param - 1));
  }
  return worst;
}

}  // namespace snnlab
