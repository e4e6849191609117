#pragma once

// Independent reference implementations the tests compare against. These
// deliberately use different structure than the production code: event
// counting instead of closed-form rates, scatter loops instead of gather
// loops, explicit stride walks instead of the closed-form output extent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "snnlab/energy.hpp"
#include "snnlab/network.hpp"
#include "snnlab/tensor.hpp"

namespace oracles {

// Scatter-based convolution: walk the input and push contributions to every
// output window that covers it.
inline snnlab::Tensor conv2d_scatter(const snnlab::Tensor& input, const snnlab::Tensor& kernel,
                                     int stride, int padding) {
  const int c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int c_out = kernel.shape[0], k = kernel.shape[2];
  const int oh = (h + 2 * padding - k) / stride + 1;
  const int ow = (w + 2 * padding - k) / stride + 1;

  snnlab::Tensor out = snnlab::Tensor::zeros({c_out, oh, ow});
  for (int ci = 0; ci < c_in; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        const double v = input.at3(ci, iy, ix);
        for (int ky = 0; ky < k; ++ky) {
          const int num_y = iy + padding - ky;
          if (num_y < 0 || num_y % stride != 0) continue;
          const int oy = num_y / stride;
          if (oy >= oh) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int num_x = ix + padding - kx;
            if (num_x < 0 || num_x % stride != 0) continue;
            const int ox = num_x / stride;
            if (ox >= ow) continue;
            for (int co = 0; co < c_out; ++co) {
              out.at3(co, oy, ox) +=
                  v * kernel.data[static_cast<std::size_t>(((co * c_in + ci) * k + ky) * k + kx)];
            }
          }
        }
      }
    }
  }
  return out;
}

// One neuron's event stream over a time window: how many of its inputs were
// active each step and whether it fired.
struct NeuronEvents {
  int fan_in = 0;
  std::vector<int> active_inputs;  // per step, in [0, fan_in]
  std::vector<int> fired;          // per step, 0 or 1
};

// Charges Eq.-style per-event costs by walking the stream: one weight-read +
// accumulate per active input, a fixed membrane update per step, a reset
// subtraction and per-synapse routing when the neuron fired.
inline double nda_neuron_event_energy(const NeuronEvents& ev, int router_hops,
                                      const snnlab::EnergyCostTable& c, bool leak_enabled,
                                      bool analog_input = false) {
  double total = 0.0;
  for (std::size_t t = 0; t < ev.active_inputs.size(); ++t) {
    const double per_input =
        analog_input ? c.e_r_weight + c.e_mul + c.e_add : c.e_r_weight + c.e_add;
    total += ev.active_inputs[t] * per_input;
    total += c.e_r_state + c.e_add + c.e_cmp + c.e_w_state;
    if (leak_enabled) total += c.e_r_leak + c.e_mul;
    if (ev.fired[t]) {
      total += c.e_sub;
      total += static_cast<double>(ev.fan_in) * router_hops * c.e_tphop;
    }
  }
  return total;
}

// Replays a recorded SNN forward and charges dataflow-architecture costs per
// event. Synaptic activity is charged at the layer's measured input rate
// (the same statistical quantity the estimator consumes); firing, reset, and
// routing are charged per actual spike.
inline double nda_trace_energy(const snnlab::ForwardTrace& trace,
                               const std::vector<snnlab::LayerGeom>& geoms, int router_hops,
                               const snnlab::EnergyCostTable& c, bool leak_enabled) {
  double total = 0.0;
  const std::size_t t_window = trace.inputs.size();
  for (std::size_t l = 0; l < geoms.size(); ++l) {
    const bool is_readout = (l + 1 == geoms.size());
    const bool analog = geoms[l].analog_input;
    const double per_input = analog ? c.e_r_weight + c.e_mul + c.e_add : c.e_r_weight + c.e_add;
    for (std::size_t t = 0; t < t_window; ++t) {
      const snnlab::Tensor& x = trace.inputs[t][l];
      std::int64_t active = 0;
      for (double v : x.data) active += (v != 0.0) ? 1 : 0;
      const double active_fraction =
          static_cast<double>(active) / static_cast<double>(x.numel());
      total += static_cast<double>(geoms[l].neuron_count) * geoms[l].fan_in * active_fraction *
               per_input;
      total += static_cast<double>(geoms[l].neuron_count) *
               (c.e_r_state + c.e_add + c.e_cmp + c.e_w_state +
                (leak_enabled ? c.e_r_leak + c.e_mul : 0.0));
      if (!is_readout) {
        const snnlab::Tensor& s = trace.spikes[t][l];
        std::int64_t fired = 0;
        for (double v : s.data) fired += (v != 0.0) ? 1 : 0;
        total += static_cast<double>(fired) * c.e_sub;
        total += static_cast<double>(fired) * geoms[l].fan_in * router_hops * c.e_tphop;
      }
    }
  }
  return total;
}

// MAC count of one conv layer by walking the full loop nest with an explicit
// stride walk (no closed-form output extent).
inline std::int64_t conv_macs_loop_nest(int c_in, int h, int w, int c_out, int k, int stride,
                                        int padding) {
  std::int64_t macs = 0;
  for (int co = 0; co < c_out; ++co) {
    for (int y0 = -padding; y0 + k <= h + padding; y0 += stride) {
      for (int x0 = -padding; x0 + k <= w + padding; x0 += stride) {
        for (int ci = 0; ci < c_in; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              ++macs;  // zero-padded taps still cost a MAC
            }
          }
        }
      }
    }
  }
  return macs;
}

inline std::int64_t dense_macs_loop_nest(int n_in, int n_out) {
  std::int64_t macs = 0;
  for (int j = 0; j < n_out; ++j)
    for (int i = 0; i < n_in; ++i) ++macs;
  return macs;
}

// Spearman rank correlation with average ranks for ties.
inline std::vector<double> ranks_of(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::vector<double> rx = ranks_of(x);
  const std::vector<double> ry = ranks_of(y);
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double cov = 0.0, vx = 0.0, vy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  return cov / std::sqrt(vx * vy);
}

}  // namespace oracles
