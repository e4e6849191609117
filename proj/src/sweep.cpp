#include "snnlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "snnlab/data.hpp"
#include "snnlab/errors.hpp"
#include "snnlab/metrics.hpp"
#include "json.hpp"

namespace snnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

// Index-parallel map; result slots make the aggregation order independent of
// scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(hw, count));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

bool row_finite(const EnergyRow& row) {
  auto ok = [](double v) { return std::isfinite(v); };
  if (!ok(row.rho) || !ok(row.emac_cnn) || !ok(row.emac_snn) || !ok(row.snn_nda)) return false;
  for (double v : row.cnn_ca)
    if (!ok(v)) return false;
  for (double v : row.snn_ca)
    if (!ok(v)) return false;
  return true;
}

}  // namespace

void SweepConfig::validate() const {
  if (manifest_path.empty()) throw InvalidArgumentError("manifest path is required");
  if (out_dir.empty()) throw InvalidArgumentError("output directory is required");
  if (mer_list.empty()) throw InvalidArgumentError("mer_list must be non-empty");
  for (double m : mer_list) {
    if (!(m > 0.0 && m <= 1.0))
      throw InvalidArgumentError("mer values must lie in (0,1], got " + std::to_string(m));
  }
  if (n_hop < 1) throw InvalidArgumentError("n_hop must be >= 1");
  if (snn_checkpoint.empty() != cnn_checkpoint.empty())
    throw InvalidArgumentError("provide both checkpoints or neither");
}

std::string SweepConfig::to_json() const {
  ordered_json j;
  j["manifest"] = manifest_path;
  j["spec"] = spec_path;
  j["snn_checkpoint"] = snn_checkpoint;
  j["cnn_checkpoint"] = cnn_checkpoint;
  j["costs"] = costs_path;
  j["mer_list"] = mer_list;
  j["n_hop"] = n_hop;
  j["out_dir"] = out_dir;
  j["seed"] = seed;
  return j.dump(2);
}

SweepConfig SweepConfig::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("sweep config: ") + e.what());
  }
  SweepConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "manifest") cfg.manifest_path = value.get<std::string>();
      else if (key == "spec") cfg.spec_path = value.get<std::string>();
      else if (key == "snn_checkpoint") cfg.snn_checkpoint = value.get<std::string>();
      else if (key == "cnn_checkpoint") cfg.cnn_checkpoint = value.get<std::string>();
      else if (key == "costs") cfg.costs_path = value.get<std::string>();
      else if (key == "mer_list") cfg.mer_list = value.get<std::vector<double>>();
      else if (key == "n_hop") cfg.n_hop = value.get<int>();
      else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw ParseError("sweep config: unknown field '" + key + "'");
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("sweep config: ") + e.what());
  }
  return cfg;
}

SweepOutputs run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const DatasetManifest manifest = load_manifest(cfg.manifest_path);

  NetworkSpec spec = cfg.spec_path.empty()
                         ? default_network_spec()
                         : NetworkSpec::from_json(read_text_file(cfg.spec_path));
  Model snn, cnn;
  if (!cfg.snn_checkpoint.empty()) {
    snn = load_checkpoint(cfg.snn_checkpoint, ModelKind::Snn);
    cnn = load_checkpoint(cfg.cnn_checkpoint, ModelKind::Cnn);
    if (snn.spec.to_json() != cnn.spec.to_json())
      throw InvalidArgumentError("snn and cnn checkpoints disagree on the network spec");
    if (!cfg.spec_path.empty() && snn.spec.to_json() != spec.to_json())
      throw InvalidArgumentError("checkpoint spec does not match the requested spec");
    spec = snn.spec;
  } else {
    ModelPair pair = build_pair(spec, cfg.seed);
    snn = std::move(pair.snn);
    cnn = std::move(pair.cnn);
  }

  EnergyCostTable costs =
      cfg.costs_path.empty() ? EnergyCostTable{} : EnergyCostTable::load(cfg.costs_path);
  costs.validate();
  NdaModel nda;
  nda.router_hops = cfg.n_hop;
  nda.costs = costs;
  nda.validate();

  const std::size_t n_items = manifest.items.size();
  const std::size_t n_buckets = manifest.bucket_count();
  const auto geoms = cnn.geometry();

  struct ItemResult {
    SparsityProfile profile;
    std::vector<std::int64_t> op_counts;
    double rho = 0.0;
  };
  std::vector<ItemResult> results(n_items);
  parallel_for(n_items, [&](std::size_t k) {
    const Tensor image = read_image(manifest_item_path(cfg.manifest_path, manifest.items[k]));
    results[k].profile = snn_forward(snn, image, spec.t_window).profile;
    results[k].op_counts = cnn_forward(cnn, image).op_counts;
    results[k].rho = manifest.items[k].rho;
  });

  EnergyReport raw;
  raw.mer_list = cfg.mer_list;
  for (std::size_t b = 0; b < n_buckets; ++b) {
    std::vector<SparsityProfile> profiles;
    std::vector<std::int64_t> op_counts;
    double rho_sum = 0.0;
    for (std::size_t k = b; k < n_items; k += n_buckets) {
      profiles.push_back(results[k].profile);
      op_counts = results[k].op_counts;  // data-independent; any item's counts do
      rho_sum += results[k].rho;
    }
    if (profiles.empty()) continue;
    const SparsityProfile mean = mean_profile(profiles);

    EnergyRow row;
    row.key = "bucket_" + std::to_string(b);
    row.rho = rho_sum / static_cast<double>(profiles.size());
    row.emac_cnn = emac_cnn(op_counts);
    row.emac_snn = emac_snn(mean, costs);
    for (double mer : cfg.mer_list) {
      CaModel ca;
      ca.mer = mer;
      ca.costs = costs;
      row.cnn_ca.push_back(energy_cnn_ca(op_counts, geoms, ca).total);
      row.snn_ca.push_back(energy_snn_ca(mean, ca).total);
    }
    row.snn_nda = energy_snn_nda(mean, nda).total;
    if (!row_finite(row)) throw NumericError("non-finite energy in bucket " + std::to_string(b));
    raw.rows.push_back(std::move(row));
  }

  std::sort(raw.rows.begin(), raw.rows.end(),
            [](const EnergyRow& a, const EnergyRow& b) { return a.rho < b.rho; });

  const EnergyReport normalized = normalize_report(raw);

  std::filesystem::create_directories(cfg.out_dir);
  SweepOutputs out;
  out.raw = raw;
  out.normalized = normalized;
  out.csv_path = (std::filesystem::path(cfg.out_dir) / "report.csv").string();
  out.raw_csv_path = (std::filesystem::path(cfg.out_dir) / "report_raw.csv").string();
  out.json_path = (std::filesystem::path(cfg.out_dir) / "report.json").string();
  write_text_file(out.csv_path, report_to_csv(normalized));
  write_text_file(out.raw_csv_path, report_to_csv(raw));
  write_text_file(out.json_path, report_to_json(raw, normalized));
  return out;
}

EnergyRow energy_row_for_image(const Model& snn, const Model& cnn, const Tensor& image,
                               const std::vector<double>& mer_list, const NdaModel& nda,
                               const std::string& key) {
  EnergyRow row;
  row.key = key;
  row.rho = dark_pixel_ratio(image, DarkRatioConfig{});

  const SnnForwardResult sf = snn_forward(snn, image, snn.spec.t_window);
  const CnnForwardResult cf = cnn_forward(cnn, image);
  const auto geoms = cnn.geometry();

  row.emac_cnn = emac_cnn(cf.op_counts);
  row.emac_snn = emac_snn(sf.profile, nda.costs);
  for (double mer : mer_list) {
    CaModel ca;
    ca.mer = mer;
    ca.costs = nda.costs;
    row.cnn_ca.push_back(energy_cnn_ca(cf.op_counts, geoms, ca).total);
    row.snn_ca.push_back(energy_snn_ca(sf.profile, ca).total);
  }
  row.snn_nda = energy_snn_nda(sf.profile, nda).total;
  if (!row_finite(row)) throw NumericError("non-finite energy for " + key);
  return row;
}

}  // namespace snnlab
