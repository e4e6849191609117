#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnlab/energy.hpp"
#include "snnlab/network.hpp"

namespace snnlab {

// Everything a sweep run needs. Empty paths fall back to defaults: the
// stock network spec, freshly seeded model pairs, and the default cost
// table.
struct SweepConfig {
  std::string manifest_path;
  std::string spec_path;
  std::string snn_checkpoint;
  std::string cnn_checkpoint;
  std::string costs_path;
  std::vector<double> mer_list{0.01, 0.02, 1.0};  // 1:100, 1:50, 1:1
  int n_hop = 2;
  std::string out_dir;
  std::uint64_t seed = 0;  // used only when checkpoints are absent

  void validate() const;
  std::string to_json() const;
  static SweepConfig from_json(const std::string& text);
};

struct SweepOutputs {
  EnergyReport raw;
  EnergyReport normalized;
  std::string csv_path;  // normalized report
  std::string raw_csv_path;
  std::string json_path;
};

// Groups the manifest's items into their round-robin rho buckets, runs both
// models over every image (images within a bucket are evaluated in
// parallel), averages the per-bucket sparsity profiles, evaluates every
// estimator, and writes report.csv (normalized), report_raw.csv, and
// report.json under cfg.out_dir. Rows are sorted by ascending mean rho.
SweepOutputs run_sweep(const SweepConfig& cfg);

// Single-image variant backing the energy command. key labels the row; rho
// is measured from the image.
EnergyRow energy_row_for_image(const Model& snn, const Model& cnn, const Tensor& image,
                               const std::vector<double>& mer_list, const NdaModel& nda,
                               const std::string& key);

}  // namespace snnlab
