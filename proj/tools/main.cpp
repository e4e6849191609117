// Batch front door for the snnlab shared library: dataset generation,
// training, evaluation, per-image energy estimation, and rho sweeps. All
// domain work goes through the C API in snnlab.h.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snnlab.h"

namespace {

using ordered_json = nlohmann::ordered_json;

// Exit codes: 0 success, 1 diagnostics, 2 non-finite energy.
int fail_with(snnlab_status st, bool numeric_is_2) {
  std::fprintf(stderr, "error (%s): %s\n", snnlab_status_name(st), snnlab_last_error());
  return (numeric_is_2 && st == SNNLAB_ERR_NUMERIC) ? 2 : 1;
}

bool read_text_file(const std::string& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error (io): cannot open %s\n", path.c_str());
    return false;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  *out = ss.str();
  return true;
}

bool write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::fprintf(stderr, "error (io): cannot write %s\n", path.c_str());
    return false;
  }
  return true;
}

// Every command echoes its resolved parameters for reproducibility.
bool write_run_config(const std::string& out_dir, const ordered_json& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "error (io): cannot create %s\n", out_dir.c_str());
    return false;
  }
  const auto path = std::filesystem::path(out_dir) / "run-config.json";
  return write_text_file(path.string(), cfg.dump(2) + "\n");
}

struct ModelHandle {
  snnlab_model* ptr = nullptr;
  ModelHandle() = default;
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
  ~ModelHandle() { snnlab_model_free(ptr); }
};

struct GenDataArgs {
  std::string out;
  int n = 16;
  int height = 32;
  int width = 32;
  std::vector<double> rho{0.35, 0.55, 0.75, 0.9};
  double noise_sigma = 0.005;
  std::uint64_t seed = 0;
};

int cmd_gen_data(const GenDataArgs& a) {
  const snnlab_status st = snnlab_gen_dataset(a.n, a.height, a.width, a.rho.data(),
                                              static_cast<int>(a.rho.size()), a.noise_sigma,
                                              a.seed, a.out.c_str());
  if (st != SNNLAB_OK) return fail_with(st, false);

  ordered_json cfg;
  cfg["command"] = "gen-data";
  cfg["out"] = a.out;
  cfg["n"] = a.n;
  cfg["height"] = a.height;
  cfg["width"] = a.width;
  cfg["rho"] = a.rho;
  cfg["noise_sigma"] = a.noise_sigma;
  cfg["seed"] = a.seed;
  if (!write_run_config(a.out, cfg)) return 1;

  const auto manifest = std::filesystem::path(a.out) / "manifest.json";
  std::printf("wrote %zu scenes; manifest at %s\n", a.rho.size() * static_cast<std::size_t>(a.n),
              manifest.string().c_str());
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string model;  // "snn" | "cnn"
  std::string out;
  std::string spec_path;
  std::string init_checkpoint;
  std::uint64_t seed = 0;
  int epochs = 10;
  double lr = 0.05;
  double momentum = 0.9;
  int batch_size = 16;
  bool learn_beta = true;
  bool detach_reset = true;
};

int cmd_train(const TrainArgs& a) {
  std::string spec_json;
  if (!a.spec_path.empty() && !read_text_file(a.spec_path, &spec_json)) return 1;

  const int is_snn = (a.model == "snn") ? 1 : 0;
  ModelHandle model;
  snnlab_status st =
      a.init_checkpoint.empty()
          ? snnlab_model_create(spec_json.empty() ? nullptr : spec_json.c_str(), is_snn, a.seed,
                                &model.ptr)
          : snnlab_model_load(a.init_checkpoint.c_str(), is_snn, &model.ptr);
  if (st != SNNLAB_OK) return fail_with(st, false);

  ordered_json train_cfg;
  train_cfg["epochs"] = a.epochs;
  train_cfg["lr"] = a.lr;
  train_cfg["momentum"] = a.momentum;
  train_cfg["batch_size"] = a.batch_size;
  train_cfg["seed"] = a.seed;
  train_cfg["learn_beta"] = a.learn_beta;
  train_cfg["detach_reset"] = a.detach_reset;

  double final_loss = 0.0;
  st = snnlab_train(model.ptr, a.manifest.c_str(), train_cfg.dump().c_str(), &final_loss);
  if (st != SNNLAB_OK) return fail_with(st, false);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  const auto ckpt = std::filesystem::path(a.out) / (a.model + ".ckpt");
  st = snnlab_model_save(model.ptr, ckpt.string().c_str());
  if (st != SNNLAB_OK) return fail_with(st, false);

  ordered_json sidecar;
  sidecar["config"] = train_cfg;
  sidecar["final_loss"] = final_loss;
  if (!write_text_file(ckpt.string() + ".json", sidecar.dump(2) + "\n")) return 1;

  ordered_json cfg;
  cfg["command"] = "train";
  cfg["manifest"] = a.manifest;
  cfg["model"] = a.model;
  cfg["out"] = a.out;
  cfg["spec"] = a.spec_path;
  cfg["init"] = a.init_checkpoint;
  cfg["train"] = train_cfg;
  cfg["checkpoint"] = ckpt.string();
  if (!write_run_config(a.out, cfg)) return 1;

  std::printf("final training loss %.9g; checkpoint at %s\n", final_loss, ckpt.string().c_str());
  return 0;
}

struct EvalArgs {
  std::string snn_checkpoint;
  std::string cnn_checkpoint;
  std::string train_manifest;
  std::string test_manifest;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  if (a.snn_checkpoint.empty() && a.cnn_checkpoint.empty()) {
    std::fprintf(stderr, "error: provide --snn and/or --cnn checkpoints\n");
    return 1;
  }
  if (a.train_manifest.empty() && a.test_manifest.empty()) {
    std::fprintf(stderr, "error: provide --train-manifest and/or --test-manifest\n");
    return 1;
  }

  struct Row {
    std::string model, split;
    double mse = 0.0;
  };
  std::vector<Row> rows;
  ordered_json results = ordered_json::object();

  for (const auto& [name, ckpt] : {std::pair<std::string, std::string>{"snn", a.snn_checkpoint},
                                   {"cnn", a.cnn_checkpoint}}) {
    if (ckpt.empty()) continue;
    ModelHandle model;
    snnlab_status st = snnlab_model_load(ckpt.c_str(), name == "snn" ? 1 : 0, &model.ptr);
    if (st != SNNLAB_OK) return fail_with(st, false);
    for (const auto& [split, manifest] :
         {std::pair<std::string, std::string>{"train", a.train_manifest},
          {"test", a.test_manifest}}) {
      if (manifest.empty()) continue;
      double mse = 0.0;
      st = snnlab_eval_mse(model.ptr, manifest.c_str(), &mse);
      if (st != SNNLAB_OK) return fail_with(st, false);
      rows.push_back(Row{name, split, mse});
      results[name][split] = mse;
    }
  }

  std::printf("%-6s %-6s %s\n", "model", "split", "mse");
  for (const Row& r : rows) std::printf("%-6s %-6s %.9g\n", r.model.c_str(), r.split.c_str(), r.mse);

  if (!a.out.empty()) {
    ordered_json cfg;
    cfg["command"] = "eval";
    cfg["snn"] = a.snn_checkpoint;
    cfg["cnn"] = a.cnn_checkpoint;
    cfg["train_manifest"] = a.train_manifest;
    cfg["test_manifest"] = a.test_manifest;
    cfg["out"] = a.out;
    if (!write_run_config(a.out, cfg)) return 1;
    const auto path = std::filesystem::path(a.out) / "eval.json";
    if (!write_text_file(path.string(), results.dump(2) + "\n")) return 1;
  }
  return 0;
}

struct EnergyArgs {
  std::string image;
  std::string snn_checkpoint;
  std::string cnn_checkpoint;
  std::string spec_path;
  std::string costs_path;
  std::vector<double> mer{0.01, 0.02, 1.0};
  int n_hop = 2;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_energy(const EnergyArgs& a) {
  std::string spec_json;
  if (!a.spec_path.empty() && !read_text_file(a.spec_path, &spec_json)) return 1;

  char* json = nullptr;
  const snnlab_status st = snnlab_energy_image(
      a.image.c_str(), a.snn_checkpoint.empty() ? nullptr : a.snn_checkpoint.c_str(),
      a.cnn_checkpoint.empty() ? nullptr : a.cnn_checkpoint.c_str(),
      spec_json.empty() ? nullptr : spec_json.c_str(), a.seed,
      a.costs_path.empty() ? nullptr : a.costs_path.c_str(), a.mer.data(),
      static_cast<int>(a.mer.size()), a.n_hop, &json);
  if (st != SNNLAB_OK) return fail_with(st, true);

  std::printf("%s\n", json);
  std::string report(json);
  snnlab_string_free(json);

  if (!a.out.empty()) {
    ordered_json cfg;
    cfg["command"] = "energy";
    cfg["image"] = a.image;
    cfg["snn"] = a.snn_checkpoint;
    cfg["cnn"] = a.cnn_checkpoint;
    cfg["spec"] = a.spec_path;
    cfg["costs"] = a.costs_path;
    cfg["mer_list"] = a.mer;
    cfg["n_hop"] = a.n_hop;
    cfg["seed"] = a.seed;
    cfg["out"] = a.out;
    if (!write_run_config(a.out, cfg)) return 1;
    const auto path = std::filesystem::path(a.out) / "report.json";
    if (!write_text_file(path.string(), report + "\n")) return 1;
  }
  return 0;
}

struct SweepArgs {
  std::string manifest;
  std::string snn_checkpoint;
  std::string cnn_checkpoint;
  std::string spec_path;
  std::string costs_path;
  std::vector<double> mer{0.01, 0.02, 1.0};
  int n_hop = 2;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_sweep(const SweepArgs& a) {
  ordered_json cfg;
  cfg["manifest"] = a.manifest;
  cfg["spec"] = a.spec_path;
  cfg["snn_checkpoint"] = a.snn_checkpoint;
  cfg["cnn_checkpoint"] = a.cnn_checkpoint;
  cfg["costs"] = a.costs_path;
  cfg["mer_list"] = a.mer;
  cfg["n_hop"] = a.n_hop;
  cfg["out_dir"] = a.out;
  cfg["seed"] = a.seed;

  const snnlab_status st = snnlab_sweep(cfg.dump().c_str());
  if (st != SNNLAB_OK) return fail_with(st, true);

  ordered_json echo = cfg;
  echo["command"] = "sweep";
  if (!write_run_config(a.out, echo)) return 1;

  std::printf("wrote %s\n", (std::filesystem::path(a.out) / "report.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SNN vs CNN inference-energy laboratory"};
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic scene dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--n", gen.n, "Scenes per rho bucket");
  gen_cmd->add_option("--height", gen.height, "Image height");
  gen_cmd->add_option("--width", gen.width, "Image width");
  gen_cmd->add_option("--rho", gen.rho, "Dark-pixel-ratio buckets")->expected(-1);
  gen_cmd->add_option("--noise-sigma", gen.noise_sigma, "Additive Gaussian noise sigma");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
  train_cmd->add_option("--manifest", train.manifest, "Dataset manifest path")->required();
  train_cmd->add_option("--model", train.model, "Model kind")
      ->required()
      ->check(CLI::IsMember({"snn", "cnn"}));
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--spec", train.spec_path, "Network spec JSON path");
  train_cmd->add_option("--init", train.init_checkpoint, "Checkpoint to resume from");
  train_cmd->add_option("--seed", train.seed, "RNG seed (init + shuffling)");
  train_cmd->add_option("--epochs", train.epochs, "Training epochs");
  train_cmd->add_option("--lr", train.lr, "Learning rate");
  train_cmd->add_option("--momentum", train.momentum, "SGD momentum");
  train_cmd->add_option("--batch-size", train.batch_size, "Minibatch size");
  train_cmd->add_flag("--learn-beta,!--no-learn-beta", train.learn_beta,
                      "Update per-layer membrane decay");
  train_cmd->add_flag("--detach-reset,!--no-detach-reset", train.detach_reset,
                      "Treat the reset path as constant in BPTT");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints (model x split MSE)");
  eval_cmd->add_option("--snn", eval.snn_checkpoint, "SNN checkpoint");
  eval_cmd->add_option("--cnn", eval.cnn_checkpoint, "CNN checkpoint");
  eval_cmd->add_option("--train-manifest", eval.train_manifest, "Training split manifest");
  eval_cmd->add_option("--test-manifest", eval.test_manifest, "Held-out split manifest");
  eval_cmd->add_option("--out", eval.out, "Optional output directory for eval.json");

  EnergyArgs energy;
  CLI::App* energy_cmd = app.add_subcommand("energy", "Energy estimates for one image");
  energy_cmd->add_option("--image", energy.image, "PPM image path")->required();
  energy_cmd->add_option("--snn", energy.snn_checkpoint, "SNN checkpoint");
  energy_cmd->add_option("--cnn", energy.cnn_checkpoint, "CNN checkpoint");
  energy_cmd->add_option("--spec", energy.spec_path, "Network spec JSON path");
  energy_cmd->add_option("--costs", energy.costs_path, "Cost table JSON path");
  energy_cmd->add_option("--mer", energy.mer, "Memory energy ratios, each in (0,1]")
      ->expected(-1);
  energy_cmd->add_option("--n-hop", energy.n_hop, "Router hops per spike");
  energy_cmd->add_option("--seed", energy.seed, "Seed for fresh models");
  energy_cmd->add_option("--out", energy.out, "Optional output directory");

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Per-bucket energy report over a dataset");
  sweep_cmd->add_option("--manifest", sweep.manifest, "Dataset manifest path")->required();
  sweep_cmd->add_option("--snn", sweep.snn_checkpoint, "SNN checkpoint");
  sweep_cmd->add_option("--cnn", sweep.cnn_checkpoint, "CNN checkpoint");
  sweep_cmd->add_option("--spec", sweep.spec_path, "Network spec JSON path");
  sweep_cmd->add_option("--costs", sweep.costs_path, "Cost table JSON path");
  sweep_cmd->add_option("--mer", sweep.mer, "Memory energy ratios, each in (0,1]")->expected(-1);
  sweep_cmd->add_option("--n-hop", sweep.n_hop, "Router hops per spike");
  sweep_cmd->add_option("--seed", sweep.seed, "Seed for fresh models");
  sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (app.got_subcommand(gen_cmd)) return cmd_gen_data(gen);
  if (app.got_subcommand(train_cmd)) return cmd_train(train);
  if (app.got_subcommand(eval_cmd)) return cmd_eval(eval);
  if (app.got_subcommand(energy_cmd)) return cmd_energy(energy);
  if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sweep);
  return 1;
}
