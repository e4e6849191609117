#include "snnlab.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "snnlab/data.hpp"
#include "snnlab/energy.hpp"
#include "snnlab/errors.hpp"
#include "snnlab/metrics.hpp"
#include "snnlab/network.hpp"
#include "snnlab/sweep.hpp"
#include "snnlab/training.hpp"

struct snnlab_model {
  snnlab::Model impl;
};

namespace {

thread_local std::string t_last_error;

snnlab_status status_of(snnlab::ErrorCode code) {
  switch (code) {
    case snnlab::ErrorCode::InvalidArgument: return SNNLAB_ERR_INVALID_ARGUMENT;
    case snnlab::ErrorCode::ShapeMismatch: return SNNLAB_ERR_SHAPE;
    case snnlab::ErrorCode::Geometry: return SNNLAB_ERR_GEOMETRY;
    case snnlab::ErrorCode::Io: return SNNLAB_ERR_IO;
    case snnlab::ErrorCode::Parse: return SNNLAB_ERR_PARSE;
    case snnlab::ErrorCode::Numeric: return SNNLAB_ERR_NUMERIC;
    case snnlab::ErrorCode::Infeasible: return SNNLAB_ERR_INFEASIBLE;
    case snnlab::ErrorCode::Unknown: return SNNLAB_ERR_UNKNOWN;
  }
  return SNNLAB_ERR_UNKNOWN;
}

template <typename Fn>
snnlab_status guarded(Fn&& fn) {
  try {
    fn();
    return SNNLAB_OK;
  } catch (const snnlab::Error& e) {
    t_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return SNNLAB_ERR_UNKNOWN;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return SNNLAB_ERR_UNKNOWN;
  } catch (...) {
    t_last_error = "unknown error";
    return SNNLAB_ERR_UNKNOWN;
  }
}

void require(bool cond, const char* message) {
  if (!cond) throw snnlab::InvalidArgumentError(message);
}

snnlab::Tensor tensor_from(const double* image, int channels, int height, int width) {
  require(image != nullptr, "image must not be NULL");
  require(channels >= 1 && height >= 1 && width >= 1, "image dimensions must be positive");
  snnlab::Tensor t({channels, height, width});
  std::memcpy(t.data.data(), image, t.data.size() * sizeof(double));
  return t;
}

char* copy_to_c_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* snnlab_version(void) { return "0.1.0"; }

const char* snnlab_status_name(snnlab_status status) {
  switch (status) {
    case SNNLAB_OK: return "ok";
    case SNNLAB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SNNLAB_ERR_SHAPE: return "shape_mismatch";
    case SNNLAB_ERR_GEOMETRY: return "geometry";
    case SNNLAB_ERR_IO: return "io";
    case SNNLAB_ERR_PARSE: return "parse";
    case SNNLAB_ERR_NUMERIC: return "numeric";
    case SNNLAB_ERR_INFEASIBLE: return "infeasible";
    case SNNLAB_ERR_UNKNOWN: return "unknown";
  }
  return "unknown";
}

const char* snnlab_last_error(void) { return t_last_error.c_str(); }

void snnlab_string_free(char* s) { std::free(s); }

snnlab_status snnlab_model_create(const char* spec_json, int is_snn, uint64_t seed,
                                  snnlab_model** out_model) {
  return guarded([&] {
    require(out_model != nullptr, "out_model must not be NULL");
    const snnlab::NetworkSpec spec =
        spec_json ? snnlab::NetworkSpec::from_json(spec_json) : snnlab::default_network_spec();
    const snnlab::ModelKind kind = is_snn ? snnlab::ModelKind::Snn : snnlab::ModelKind::Cnn;
    *out_model = new snnlab_model{snnlab::build_model(spec, kind, seed)};
  });
}

snnlab_status snnlab_model_load(const char* path, int is_snn, snnlab_model** out_model) {
  return guarded([&] {
    require(path != nullptr, "path must not be NULL");
    require(out_model != nullptr, "out_model must not be NULL");
    const snnlab::ModelKind kind = is_snn ? snnlab::ModelKind::Snn : snnlab::ModelKind::Cnn;
    *out_model = new snnlab_model{snnlab::load_checkpoint(path, kind)};
  });
}

snnlab_status snnlab_model_save(const snnlab_model* model, const char* path) {
  return guarded([&] {
    require(model != nullptr, "model must not be NULL");
    require(path != nullptr, "path must not be NULL");
    snnlab::save_checkpoint(model->impl, path);
  });
}

void snnlab_model_free(snnlab_model* model) { delete model; }

snnlab_status snnlab_model_predict(const snnlab_model* model, const double* image, int channels,
                                   int height, int width, double* out_prediction) {
  return guarded([&] {
    require(model != nullptr, "model must not be NULL");
    require(out_prediction != nullptr, "out_prediction must not be NULL");
    const snnlab::Tensor img = tensor_from(image, channels, height, width);
    const snnlab::Tensor pred =
        (model->impl.kind == snnlab::ModelKind::Snn)
            ? snnlab::snn_forward(model->impl, img, model->impl.spec.t_window).prediction
            : snnlab::cnn_forward(model->impl, img).prediction;
    for (std::int64_t i = 0; i < pred.numel(); ++i) out_prediction[i] = pred[i];
  });
}

snnlab_status snnlab_gen_dataset(int n_per_bucket, int height, int width,
                                 const double* rho_values, int n_rho, double noise_sigma,
                                 uint64_t seed, const char* out_dir) {
  return guarded([&] {
    require(rho_values != nullptr, "rho_values must not be NULL");
    require(n_rho >= 1, "n_rho must be >= 1");
    require(out_dir != nullptr, "out_dir must not be NULL");
    const std::vector<double> rhos(rho_values, rho_values + n_rho);
    snnlab::gen_dataset(n_per_bucket, height, width, rhos, noise_sigma, seed, out_dir);
  });
}

snnlab_status snnlab_train(snnlab_model* model, const char* manifest_path,
                           const char* config_json, double* out_final_loss) {
  return guarded([&] {
    require(model != nullptr, "model must not be NULL");
    require(manifest_path != nullptr, "manifest_path must not be NULL");
    const snnlab::TrainConfig cfg =
        config_json ? snnlab::TrainConfig::from_json(config_json) : snnlab::TrainConfig{};
    const std::vector<snnlab::TrainExample> examples = snnlab::load_examples(manifest_path);
    const snnlab::TrainResult result = snnlab::train(model->impl, examples, cfg);
    if (out_final_loss) *out_final_loss = result.final_loss;
  });
}

snnlab_status snnlab_eval_mse(const snnlab_model* model, const char* manifest_path,
                              double* out_mse) {
  return guarded([&] {
    require(model != nullptr, "model must not be NULL");
    require(manifest_path != nullptr, "manifest_path must not be NULL");
    require(out_mse != nullptr, "out_mse must not be NULL");
    *out_mse = snnlab::eval_mse(model->impl, snnlab::load_examples(manifest_path));
  });
}

snnlab_status snnlab_dark_pixel_ratio(const double* image, int channels, int height, int width,
                                      double theta, double* out_ratio) {
  return guarded([&] {
    require(out_ratio != nullptr, "out_ratio must not be NULL");
    snnlab::DarkRatioConfig cfg;
    if (theta >= 0.0) cfg.theta = theta;
    *out_ratio = snnlab::dark_pixel_ratio(tensor_from(image, channels, height, width), cfg);
  });
}

snnlab_status snnlab_sweep(const char* config_json) {
  return guarded([&] {
    require(config_json != nullptr, "config_json must not be NULL");
    snnlab::run_sweep(snnlab::SweepConfig::from_json(config_json));
  });
}

snnlab_status snnlab_energy_image(const char* image_path, const char* snn_checkpoint,
                                  const char* cnn_checkpoint, const char* spec_json,
                                  uint64_t seed, const char* costs_path, const double* mer_list,
                                  int n_mer, int n_hop, char** out_json) {
  return guarded([&] {
    require(image_path != nullptr, "image_path must not be NULL");
    require(out_json != nullptr, "out_json must not be NULL");
    require((snn_checkpoint == nullptr) == (cnn_checkpoint == nullptr),
            "provide both checkpoints or neither");
    require(n_mer >= 0, "n_mer must be >= 0");
    require(n_hop >= 1, "n_hop must be >= 1");

    snnlab::Model snn, cnn;
    if (snn_checkpoint) {
      snn = snnlab::load_checkpoint(snn_checkpoint, snnlab::ModelKind::Snn);
      cnn = snnlab::load_checkpoint(cnn_checkpoint, snnlab::ModelKind::Cnn);
      if (snn.spec.to_json() != cnn.spec.to_json())
        throw snnlab::InvalidArgumentError("snn and cnn checkpoints disagree on the network spec");
    } else {
      const snnlab::NetworkSpec spec =
          spec_json ? snnlab::NetworkSpec::from_json(spec_json) : snnlab::default_network_spec();
      snnlab::ModelPair pair = snnlab::build_pair(spec, seed);
      snn = std::move(pair.snn);
      cnn = std::move(pair.cnn);
    }

    std::vector<double> mers{0.01, 0.02, 1.0};
    if (mer_list && n_mer > 0) mers.assign(mer_list, mer_list + n_mer);
    for (double m : mers) {
      if (!(m > 0.0 && m <= 1.0))
        throw snnlab::InvalidArgumentError("mer values must lie in (0,1]");
    }

    snnlab::NdaModel nda;
    nda.router_hops = n_hop;
    if (costs_path) nda.costs = snnlab::EnergyCostTable::load(costs_path);
    nda.validate();

    const snnlab::Tensor image = snnlab::read_image(image_path);
    snnlab::EnergyReport raw;
    raw.mer_list = mers;
    raw.rows.push_back(
        snnlab::energy_row_for_image(snn, cnn, image, mers, nda, image_path));
    const snnlab::EnergyReport normalized = snnlab::normalize_report(raw);
    *out_json = copy_to_c_string(snnlab::report_to_json(raw, normalized));
  });
}

}  // extern "C"
