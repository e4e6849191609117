#include "snnlab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace snnlab {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_sparsity_value(double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw InvalidArgumentError("sparsity rate outside [0,1]: " + std::to_string(s));
  }
}

void check_profile(const SparsityProfile& profile) {
  if (profile.layers.empty() || profile.t_window < 1) {
    throw InvalidArgumentError("sparsity profile is empty");
  }
  for (const LayerProfile& l : profile.layers) {
    if (static_cast<int>(l.input_sparsity.size()) != profile.t_window ||
        static_cast<int>(l.output_sparsity.size()) != profile.t_window) {
      throw InvalidArgumentError("sparsity profile does not cover every timestep");
    }
  }
}

// Average outgoing connections per neuron of layer l, by connection-count
// conservation with the next layer. The last layer routes nothing.
double mean_fan_out(const SparsityProfile& profile, std::size_t l) {
  if (l + 1 >= profile.layers.size()) return 0.0;
  const LayerProfile& next = profile.layers[l + 1];
  return static_cast<double>(next.neuron_count) * next.fan_in /
         static_cast<double>(profile.layers[l].neuron_count);
}

// Per-neuron per-step NDA energy; synapse_op is the cost of servicing one
// active input (weight read + add, or weight read + MAC for analog input).
double lif_neuron_step_energy(double fan_in, double movement_fan, double input_sparsity,
                              double output_sparsity, double synapse_op, int router_hops,
                              const EnergyCostTable& c, bool leak_enabled) {
  check_sparsity_value(input_sparsity);
  check_sparsity_value(output_sparsity);
  double e = fan_in * (1.0 - input_sparsity) * synapse_op;
  e += c.e_r_state + c.e_add + c.e_cmp;
  if (leak_enabled) e += c.e_r_leak + c.e_mul;
  e += (1.0 - output_sparsity) * c.e_sub;
  e += c.e_w_state;
  e += movement_fan * (1.0 - output_sparsity) * router_hops * c.e_tphop;
  return e;
}

}  // namespace

void EnergyCostTable::validate() const {
  const double vals[] = {e_add, e_mul, e_sub, e_cmp, e_r_weight, e_r_state, e_r_leak,
                         e_w_state, e_tphop, e_mem_int, e_mem_ext, e_mac, e_ac};
  for (double v : vals) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgumentError("energy costs must be finite and non-negative");
    }
  }
}

std::string EnergyCostTable::to_json() const {
  ordered_json j;
  j["e_add"] = e_add;
  j["e_mul"] = e_mul;
  j["e_sub"] = e_sub;
  j["e_cmp"] = e_cmp;
  j["e_r_weight"] = e_r_weight;
  j["e_r_state"] = e_r_state;
  j["e_r_leak"] = e_r_leak;
  j["e_w_state"] = e_w_state;
  j["e_tphop"] = e_tphop;
  j["e_mem_int"] = e_mem_int;
  j["e_mem_ext"] = e_mem_ext;
  j["e_mac"] = e_mac;
  j["e_ac"] = e_ac;
  return j.dump(2);
}

EnergyCostTable EnergyCostTable::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("cost table JSON: ") + e.what());
  }
  EnergyCostTable t;
  bool mac_given = false, ac_given = false;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw ParseError("cost '" + key + "' must be a number");
    const double v = value.get<double>();
    if (key == "e_add") t.e_add = v;
    else if (key == "e_mul") t.e_mul = v;
    else if (key == "e_sub") t.e_sub = v;
    else if (key == "e_cmp") t.e_cmp = v;
    else if (key == "e_r_weight") t.e_r_weight = v;
    else if (key == "e_r_state") t.e_r_state = v;
    else if (key == "e_r_leak") t.e_r_leak = v;
    else if (key == "e_w_state") t.e_w_state = v;
    else if (key == "e_tphop") t.e_tphop = v;
    else if (key == "e_mem_int") t.e_mem_int = v;
    else if (key == "e_mem_ext") t.e_mem_ext = v;
    else if (key == "e_mac") { t.e_mac = v; mac_given = true; }
    else if (key == "e_ac") { t.e_ac = v; ac_given = true; }
    else throw ParseError("unknown cost field '" + key + "'");
  }
  if (!mac_given) t.e_mac = t.e_mul + t.e_add;
  if (!ac_given) t.e_ac = t.e_add;
  t.validate();
  return t;
}

EnergyCostTable EnergyCostTable::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open cost table '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

EnergyCostTable scaled(const EnergyCostTable& t, double factor) {
  EnergyCostTable s = t;
  s.e_add *= factor;
  s.e_mul *= factor;
  s.e_sub *= factor;
  s.e_cmp *= factor;
  s.e_r_weight *= factor;
  s.e_r_state *= factor;
  s.e_r_leak *= factor;
  s.e_w_state *= factor;
  s.e_tphop *= factor;
  s.e_mem_int *= factor;
  s.e_mem_ext *= factor;
  s.e_mac *= factor;
  s.e_ac *= factor;
  return s;
}

void NdaModel::validate() const {
  if (router_hops < 1) throw InvalidArgumentError("router_hops must be >= 1");
  costs.validate();
}

void CaModel::validate() const {
  if (!(mer > 0.0 && mer <= 1.0)) throw InvalidArgumentError("mer must lie in (0,1]");
  costs.validate();
}

HardwareModel HardwareModel::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("hardware model JSON: ") + e.what());
  }
  HardwareModel hw;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    EnergyCostTable costs;
    if (j.contains("costs")) costs = EnergyCostTable::from_json(j.at("costs").dump());
    if (kind == "ca") {
      hw.is_nda = false;
      hw.ca.mer = j.at("mer").get<double>();
      hw.ca.costs = costs;
      hw.ca.validate();
    } else if (kind == "nda") {
      hw.is_nda = true;
      hw.nda.router_hops = j.at("n_hop").get<int>();
      hw.nda.leak_enabled = j.value("leak_enabled", true);
      hw.nda.fanout_movement = j.value("fanout_movement", false);
      hw.nda.costs = costs;
      hw.nda.validate();
    } else {
      throw ParseError("hardware kind must be 'ca' or 'nda'");
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("hardware model JSON: ") + e.what());
  }
  return hw;
}

double energy_lif_nda(int fan_in, int t_window, const std::vector<double>& input_sparsity,
                      const std::vector<double>& output_sparsity, int router_hops,
                      const EnergyCostTable& costs, bool leak_enabled) {
  if (fan_in < 0) throw InvalidArgumentError("fan_in must be non-negative");
  if (router_hops < 1) throw InvalidArgumentError("router_hops must be >= 1");
  if (static_cast<int>(input_sparsity.size()) != t_window ||
      static_cast<int>(output_sparsity.size()) != t_window) {
    throw InvalidArgumentError("sparsity lists must have one entry per timestep");
  }
  const double synapse_op = costs.e_r_weight + costs.e_add;
  double total = 0.0;
  for (int t = 0; t < t_window; ++t) {
    total += lif_neuron_step_energy(fan_in, fan_in, input_sparsity[t], output_sparsity[t],
                                    synapse_op, router_hops, costs, leak_enabled);
  }
  return total;
}

EnergyBreakdown energy_snn_nda(const SparsityProfile& profile, const NdaModel& hw) {
  hw.validate();
  check_profile(profile);
  const EnergyCostTable& c = hw.costs;
  EnergyBreakdown out;
  for (std::size_t l = 0; l < profile.layers.size(); ++l) {
    const LayerProfile& layer = profile.layers[l];
    // Analog direct-encoded input: each active synapse is a full MAC.
    const double synapse_op = layer.analog_input ? c.e_r_weight + c.e_mul + c.e_add
                                                 : c.e_r_weight + c.e_add;
    const double movement_fan =
        hw.fanout_movement ? mean_fan_out(profile, l) : static_cast<double>(layer.fan_in);
    double layer_energy = 0.0;
    for (int t = 0; t < profile.t_window; ++t) {
      layer_energy += lif_neuron_step_energy(layer.fan_in, movement_fan,
                                             layer.input_sparsity[t], layer.output_sparsity[t],
                                             synapse_op, hw.router_hops, c, hw.leak_enabled);
    }
    layer_energy *= static_cast<double>(layer.neuron_count);
    out.per_layer.push_back(layer_energy);
    out.total += layer_energy;
  }
  return out;
}

EnergyBreakdown energy_cnn_ca(const std::vector<std::int64_t>& op_counts,
                              const std::vector<LayerGeom>& geoms, const CaModel& hw) {
  hw.validate();
  if (op_counts.size() != geoms.size()) {
    throw InvalidArgumentError("op_counts and layer geometry disagree");
  }
  const EnergyCostTable& c = hw.costs;
  const double e_ext = hw.external_access_energy();
  EnergyBreakdown out;
  for (std::size_t l = 0; l < geoms.size(); ++l) {
    const double macs = static_cast<double>(op_counts[l]) * (c.e_mul + c.e_add);
    // Weights stream from external memory once per inference; activations
    // live in internal memory.
    const double weight_reads = static_cast<double>(geoms[l].param_count) * e_ext;
    const double input_reads =
        static_cast<double>(geoms[l].neuron_count) * geoms[l].fan_in * c.e_mem_int;
    const double output_writes = static_cast<double>(geoms[l].neuron_count) * c.e_mem_int;
    const double layer_energy = macs + weight_reads + input_reads + output_writes;
    out.per_layer.push_back(layer_energy);
    out.total += layer_energy;
  }
  return out;
}

EnergyBreakdown energy_snn_ca(const SparsityProfile& profile, const CaModel& hw) {
  hw.validate();
  check_profile(profile);
  const EnergyCostTable& c = hw.costs;
  const double e_ext = hw.external_access_energy();
  EnergyBreakdown out;
  for (const LayerProfile& layer : profile.layers) {
    // No resident neuron state on a CA: weights and state are re-fetched
    // every timestep.
    const double synapse_op =
        (layer.analog_input ? c.e_mul + c.e_add : c.e_add) + e_ext;
    double layer_energy = 0.0;
    for (int t = 0; t < profile.t_window; ++t) {
      check_sparsity_value(layer.input_sparsity[t]);
      check_sparsity_value(layer.output_sparsity[t]);
      const double synaptic = static_cast<double>(layer.neuron_count) * layer.fan_in *
                              (1.0 - layer.input_sparsity[t]) * synapse_op;
      const double update =
          static_cast<double>(layer.neuron_count) *
          (2.0 * c.e_mem_int + c.e_mul + c.e_add + c.e_cmp +
           (1.0 - layer.output_sparsity[t]) * c.e_sub);
      layer_energy += synaptic + update;
    }
    out.per_layer.push_back(layer_energy);
    out.total += layer_energy;
  }
  return out;
}

double emac_cnn(const std::vector<std::int64_t>& op_counts) {
  double total = 0.0;
  for (std::int64_t n : op_counts) total += static_cast<double>(n);
  return total;
}

double emac_snn(const SparsityProfile& profile, const EnergyCostTable& costs,
                std::optional<double> ac_ratio, std::optional<double> update_ratio) {
  check_profile(profile);
  costs.validate();
  if (costs.e_mac <= 0.0) throw InvalidArgumentError("e_mac must be positive for EMAC counts");
  const double r_ac = ac_ratio.value_or(costs.e_ac / costs.e_mac);
  const double r_update = update_ratio.value_or(costs.e_ac / costs.e_mac);
  double total = 0.0;
  for (const LayerProfile& layer : profile.layers) {
    const double r = layer.analog_input ? 1.0 : r_ac;
    for (int t = 0; t < profile.t_window; ++t) {
      check_sparsity_value(layer.input_sparsity[t]);
      total += static_cast<double>(layer.neuron_count) * layer.fan_in *
                   (1.0 - layer.input_sparsity[t]) * r +
               static_cast<double>(layer.neuron_count) * r_update;
    }
  }
  return total;
}

EnergyReport normalize_report(const EnergyReport& raw) {
  if (raw.rows.empty()) throw InvalidArgumentError("cannot normalize an empty report");
  EnergyReport out = raw;
  double hw_max = 0.0;
  for (const EnergyRow& row : raw.rows) {
    for (double v : row.cnn_ca) hw_max = std::max(hw_max, v);
    for (double v : row.snn_ca) hw_max = std::max(hw_max, v);
    hw_max = std::max(hw_max, row.snn_nda);
  }
  for (EnergyRow& row : out.rows) {
    if (row.emac_cnn != 0.0) {
      row.emac_snn /= row.emac_cnn;
      row.emac_cnn = 1.0;
    }
    if (hw_max != 0.0) {
      for (double& v : row.cnn_ca) v /= hw_max;
      for (double& v : row.snn_ca) v /= hw_max;
      row.snn_nda /= hw_max;
    }
  }
  return out;
}

namespace {

std::string mer_label(double mer) {
  const long long inv = std::llround(1.0 / mer);
  return "mer" + std::to_string(inv);
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::vector<std::string> report_columns(const std::vector<double>& mer_list) {
  std::vector<std::string> cols{"rho", "emac_cnn", "emac_snn"};
  for (double mer : mer_list) {
    cols.push_back("cnn_ca_" + mer_label(mer));
    cols.push_back("snn_ca_" + mer_label(mer));
  }
  cols.push_back("snn_nda");
  return cols;
}

std::string report_to_csv(const EnergyReport& report) {
  std::ostringstream os;
  const auto cols = report_columns(report.mer_list);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os << ",";
    os << cols[i];
  }
  os << "\n";
  for (const EnergyRow& row : report.rows) {
    os << format_value(row.rho) << "," << format_value(row.emac_cnn) << ","
       << format_value(row.emac_snn);
    for (std::size_t m = 0; m < report.mer_list.size(); ++m) {
      os << "," << format_value(row.cnn_ca[m]) << "," << format_value(row.snn_ca[m]);
    }
    os << "," << format_value(row.snn_nda) << "\n";
  }
  return os.str();
}

std::string report_to_json(const EnergyReport& raw, const EnergyReport& normalized) {
  if (raw.rows.size() != normalized.rows.size()) {
    throw InvalidArgumentError("raw and normalized reports disagree");
  }
  ordered_json j;
  j["mer_list"] = raw.mer_list;
  j["columns"] = report_columns(raw.mer_list);
  j["rows"] = ordered_json::array();
  auto row_values = [&](const EnergyRow& row) {
    ordered_json v;
    v["emac_cnn"] = row.emac_cnn;
    v["emac_snn"] = row.emac_snn;
    for (std::size_t m = 0; m < raw.mer_list.size(); ++m) {
      v["cnn_ca_" + mer_label(raw.mer_list[m])] = row.cnn_ca[m];
      v["snn_ca_" + mer_label(raw.mer_list[m])] = row.snn_ca[m];
    }
    v["snn_nda"] = row.snn_nda;
    return v;
  };
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    ordered_json rj;
    rj["key"] = raw.rows[i].key;
    rj["rho"] = raw.rows[i].rho;
    rj["raw"] = row_values(raw.rows[i]);
    rj["normalized"] = row_values(normalized.rows[i]);
    j["rows"].push_back(rj);
  }
  return j.dump(2);
}

}  // namespace snnlab
