#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snnlab/network.hpp"

namespace snnlab {

// Per-event energy costs. Units are arbitrary but consistent (defaults are
// picojoule-scale). e_mem_int/e_mem_ext are the classical-architecture
// internal/external memory access costs; the e_r_*/e_w_* entries are the
// neuromorphic core's local state accesses; e_mac/e_ac parameterize the
// hardware-agnostic estimator.
struct EnergyCostTable {
  double e_add = 0.9;
  double e_mul = 3.7;
  double e_sub = 0.9;
  double e_cmp = 0.9;
  double e_r_weight = 5.0;
  double e_r_state = 5.0;
  double e_r_leak = 5.0;
  double e_w_state = 5.0;
  double e_tphop = 3.0;
  double e_mem_int = 5.0;
  double e_mem_ext = 500.0;
  double e_mac = 3.7 + 0.9;
  double e_ac = 0.9;

  void validate() const;
  std::string to_json() const;
  // Accepts any subset of the field names; absent entries keep defaults,
  // except e_mac (defaults to e_mul+e_add) and e_ac (defaults to e_add).
  static EnergyCostTable from_json(const std::string& text);
  static EnergyCostTable load(const std::string& path);
};

EnergyCostTable scaled(const EnergyCostTable& t, double factor);

// Neuromorphic dataflow architecture: neuron-local state, spikes routed
// across router_hops hops. leak_enabled=false drops the leak read+multiply,
// reducing the neuron model to plain integrate-and-fire. fanout_movement
// substitutes per-neuron fan-out for fan-in in the data-movement term.
struct NdaModel {
  int router_hops = 2;
  bool leak_enabled = true;
  bool fanout_movement = false;
  EnergyCostTable costs;

  void validate() const;
};

// Classical architecture. mer expresses the internal:external memory access
// energy ratio (0.01 means an external access costs 100x an internal one);
// the effective external access energy is e_mem_int / mer.
struct CaModel {
  double mer = 0.01;
  EnergyCostTable costs;

  void validate() const;
  double external_access_energy() const { return costs.e_mem_int / mer; }
};

// Parses {"kind":"ca","mer":...} or
// {"kind":"nda","n_hop":...,"leak_enabled":...,"fanout_movement":...},
// each with an optional embedded "costs" object.
struct HardwareModel {
  bool is_nda = false;
  CaModel ca;
  NdaModel nda;

  static HardwareModel from_json(const std::string& text);
};

// Energy of one LIF neuron over a t_window-step inference on the dataflow
// architecture. Sparsities are per-step rates in [0,1]; the constant-rate
// form is recovered when every step shares one value.
double energy_lif_nda(int fan_in, int t_window, const std::vector<double>& input_sparsity,
                      const std::vector<double>& output_sparsity, int router_hops,
                      const EnergyCostTable& costs, bool leak_enabled = true);

struct EnergyBreakdown {
  std::vector<double> per_layer;
  double total = 0.0;
};

// Whole-network SNN energy on the dataflow architecture. The analog-input
// first layer charges a multiply per active synapse (MAC instead of AC).
EnergyBreakdown energy_snn_nda(const SparsityProfile& profile, const NdaModel& hw);

// CNN on a classical architecture: dense MACs, weights streamed from
// external memory once per inference, activations in internal memory.
EnergyBreakdown energy_cnn_ca(const std::vector<std::int64_t>& op_counts,
                              const std::vector<LayerGeom>& geoms, const CaModel& hw);

// SNN on a classical architecture: no resident neuron state, so weights and
// state are re-fetched every timestep.
EnergyBreakdown energy_snn_ca(const SparsityProfile& profile, const CaModel& hw);

// Hardware-agnostic operation counts in MAC-equivalents.
double emac_cnn(const std::vector<std::int64_t>& op_counts);
// ac_ratio defaults to e_ac/e_mac; update_ratio (per-neuron per-step state
// update, in MAC units) defaults to the same.
double emac_snn(const SparsityProfile& profile, const EnergyCostTable& costs,
                std::optional<double> ac_ratio = std::nullopt,
                std::optional<double> update_ratio = std::nullopt);

struct EnergyRow {
  std::string key;  // bucket id or image id
  double rho = 0.0;
  double emac_cnn = 0.0;
  double emac_snn = 0.0;
  std::vector<double> cnn_ca;  // one per MER in EnergyReport::mer_list
  std::vector<double> snn_ca;
  double snn_nda = 0.0;
};

struct EnergyReport {
  std::vector<double> mer_list;
  std::vector<EnergyRow> rows;
};

// EMAC pair divided row-wise by emac_cnn; hardware-aware block divided by
// its single global maximum. Idempotent.
EnergyReport normalize_report(const EnergyReport& raw);

std::vector<std::string> report_columns(const std::vector<double>& mer_list);
std::string report_to_csv(const EnergyReport& report);
// JSON mirror carrying both raw and normalized values.
std::string report_to_json(const EnergyReport& raw, const EnergyReport& normalized);

}  // namespace snnlab
