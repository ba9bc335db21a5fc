#include "upgd/cost.hpp"

#include <cmath>

#include "upgd/errors.hpp"

namespace upgd {

std::vector<std::size_t> CostConfig::perturb_dims() const {
  if (!perturb_widths.empty()) return perturb_widths;
  return {num_users + 5, 32, 5};
}

void CostConfig::validate() const {
  if (num_users < 1 || num_antennas < 1 || num_layers < 1) {
    throw ContractError("cost config: K, N_t and L must be positive");
  }
  if (eta_order < 1 || perturb_order < 1) throw ContractError("cost config: filter order must be >= 1");
  if (eta_widths.size() < 2 || perturb_dims().size() < 2) {
    throw ContractError("cost config: each net needs at least input and output widths");
  }
  if (!(baseline_updates > 0.0)) throw ContractError("cost config: baseline update count must be positive");
}

CostConfig CostConfig::standard(std::size_t k, std::size_t nt, std::size_t l) {
  CostConfig c;
  c.num_users = k;
  c.num_antennas = nt;
  c.num_layers = l;
  return c;
}

namespace {
// One filter width p^f contributes K^3 (K_ord - 1) + K^2 K_ord + K^2 p^f.
double filter_terms(double k, double order, const std::vector<std::size_t>& widths) {
  double total = 0.0;
  for (std::size_t p : widths) {
    total += k * k * k * (order - 1.0) + k * k * order + k * k * static_cast<double>(p);
  }
  return total;
}
}  // namespace

double usrmnet_flops(const CostConfig& cfg) {
  cfg.validate();
  const double k = static_cast<double>(cfg.num_users);
  const double nt = static_cast<double>(cfg.num_antennas);
  const double m = static_cast<double>(cfg.num_outputs());
  const double nh = static_cast<double>(cfg.num_constraints());
  const double per_layer = k * nt * nt * nt + 2.0 * k * k * nt +
                           filter_terms(k, static_cast<double>(cfg.eta_order), cfg.eta_widths) +
                           filter_terms(k, static_cast<double>(cfg.perturb_order), cfg.perturb_dims()) +
                           m * nh + m;
  return static_cast<double>(cfg.num_layers) * per_layer;
}

double hebf_flops(const CostConfig& cfg) {
  cfg.validate();
  const double k = static_cast<double>(cfg.num_users);
  const double nt = static_cast<double>(cfg.num_antennas);
  return cfg.baseline_updates * (std::pow(k * k + 3.0 * k, 3.5) + std::pow(nt, 2.7) + k * nt * nt * nt);
}

double ratio_w3(const CostConfig& cfg) { return 100.0 * usrmnet_flops(cfg) / hebf_flops(cfg); }

}  // namespace upgd
