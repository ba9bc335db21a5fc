#pragma once

#include <cstddef>
#include <vector>

namespace upgd {

/// Inputs of the closed-form operation counts.
struct CostConfig {
  std::size_t num_users = 4;     // K
  std::size_t num_antennas = 32; // N_t
  std::size_t num_layers = 2;    // L
  double baseline_updates = 3.0; // beamformer updates of the convex baseline
  std::size_t eta_order = 1;
  std::size_t perturb_order = 1;
  /// Feature widths p^f of each net, input first.
  std::vector<std::size_t> eta_widths{5, 32, 2};
  std::vector<std::size_t> perturb_widths;  // empty: {K + 5, 32, 5}

  std::size_t num_outputs() const { return 5 * num_users; }          // M
  std::size_t num_constraints() const { return 5 * num_users + 1; }  // N_h
  std::vector<std::size_t> perturb_dims() const;
  void validate() const;

  /// K users, N_t antennas, L layers, default widths and orders.
  static CostConfig standard(std::size_t k, std::size_t nt, std::size_t l);
};

/// Per-layer count: K N_t^3 + 2 K^2 N_t + graph filter terms of both nets
/// + M N_h + M, multiplied by L.
double usrmnet_flops(const CostConfig& cfg);
/// F ((K^2 + 3K)^3.5 + N_t^2.7 + K N_t^3).
double hebf_flops(const CostConfig& cfg);
/// 100 * usrmnet_flops / hebf_flops.
double ratio_w3(const CostConfig& cfg);

}  // namespace upgd
