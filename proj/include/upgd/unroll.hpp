#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/hwgcn.hpp"
#include "upgd/opt_vector.hpp"
#include "upgd/proj.hpp"
#include "upgd/tape.hpp"

namespace upgd {

/// One unrolled projected-gradient layer: a learned step size, a gradient
/// step on the weighted-rate objective, a learned perturbation and the
/// projection onto the decoupled constraints.
struct UpgdLayer {
  HwgcnNet eta_net;
  HwgcnNet perturb_net;

  /// Throws ContractError on wrong roles or widths incompatible with K users.
  void validate(std::size_t num_users) const;

  static UpgdLayer make_default(std::size_t num_users, std::size_t order, std::mt19937_64& rng);
};

/// Stack of unrolled layers with analytic receiver updates in between.
struct UsrmNet {
  std::vector<UpgdLayer> layers;

  std::size_t num_layers() const { return layers.size(); }
  void validate(std::size_t num_users) const;

  static UsrmNet make_default(std::size_t num_users, std::size_t num_layers, std::size_t order,
                              std::uint64_t seed);
};

/// Gradient of f(x) = -sum_k alpha_k (ln(1 + sinr_lo_k) - vartheta * sqrt_disp_k).
/// DomainError when some sinr_lo_k <= -1.
std::vector<double> grad_objective(const OptVector& x, const SystemParams& sys);

/// x - eta * grad restricted to the blocks the objective depends on.
/// `eta` has one entry (shared step) or two (sinr_lo step, sqrt_disp step).
OptVector gradient_step(const OptVector& x, std::span<const double> grad, std::span<const double> eta);

/// Intermediate quantities of one layer evaluation on a tape.
struct LayerTrace {
  Var eta;      // 1 x 2
  Var x_hat;    // after the gradient step
  Var x_bar;    // perturbation
  Var x_out;    // projected output
};

/// One layer on a tape. `x0` is treated as an input (no gradient through
/// the objective gradient), the nets' taps come from `eta`/`perturb`.
LayerTrace layer_forward(const BoundNet& eta, const BoundNet& perturb, Var x0, const OptVector& x0_value,
                         const Tensor& adjacency_matrix, const SystemParams& sys, const C1Spec& spec);

/// Plain evaluation of one layer with receivers `bf`.
OptVector layer_forward(const UpgdLayer& layer, const OptVector& x0, const Realization& real,
                        const Beamformers& bf, const C1Spec& spec);

struct ForwardResult {
  OptVector x;
  Beamformers bf;
  std::vector<double> wsr_trace;  // objective value after every layer
};

/// Runs all layers; after layer l the receivers are recomputed from its powers.
ForwardResult usrmnet_forward(const UsrmNet& model, const OptVector& x0, const Beamformers& bf0,
                              const Realization& real, const C1Spec& spec);

/// Same as usrmnet_forward but only through the first `num_layers` layers.
ForwardResult usrmnet_prefix_forward(const UsrmNet& model, std::size_t num_layers, const OptVector& x0,
                                     const Beamformers& bf0, const Realization& real, const C1Spec& spec);

struct Initialization {
  OptVector x0;
  Beamformers bf0;
};

/// Equal power split, MMSE receivers, auxiliaries set from the resulting
/// SINR and clipped into their boxes, then projected.
Initialization init_x0_w0(const Realization& real, const C1Spec& spec);

}  // namespace upgd
