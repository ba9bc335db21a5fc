#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/opt_vector.hpp"
#include "upgd/tape.hpp"

namespace upgd {

enum class Activation { kTanh, kRelu, kIdentity };

/// Polynomial graph filter Z_out = act(sum_k A^k Z B_k) with matrix taps B_k
/// of shape p_in x p_out. No bias.
struct GraphFilterLayer {
  std::vector<Tensor> taps;
  Activation activation = Activation::kTanh;

  std::size_t in_dim() const { return taps.at(0).rows(); }
  std::size_t out_dim() const { return taps.at(0).cols(); }
  std::size_t order() const { return taps.size(); }
  void validate() const;
};

enum class NetRole { kStepSize, kPerturbation };

/// Stack of graph filter layers. The step-size net maps Gamma(x) (K x 5) to
/// per-user step sizes (K x 2); the perturbation net maps [A | Gamma(x)]
/// (K x (K+5)) to per-user perturbations (K x 5).
struct HwgcnNet {
  NetRole role = NetRole::kStepSize;
  std::vector<GraphFilterLayer> layers;

  std::size_t num_params() const;
  void validate() const;

  /// Feature dimensions {in, hidden..., out}; hidden layers use tanh, the
  /// last layer relu (step-size) or identity (perturbation). Taps are drawn
  /// uniformly from [-1/sqrt(p_in), 1/sqrt(p_in)].
  static HwgcnNet make(NetRole role, std::span<const std::size_t> dims, std::size_t order,
                       std::mt19937_64& rng);
  /// Default dims {5, 32, 2} or {K+5, 32, 5}.
  static HwgcnNet make_default(NetRole role, std::size_t num_users, std::size_t order,
                               std::mt19937_64& rng);
};

/// A(k, j) = |sum_m H(k, m) W(j, m)|, i.e. |H W^T| entrywise.
Tensor adjacency(const CMatrix& H, const Beamformers& bf);

/// Gamma: 5K stacked vector -> K x 5 matrix whose row k is user k's variables.
Tensor gamma_reshape(const OptVector& x);
OptVector gamma_restack(const Tensor& rows);
Var gamma_reshape(Var x_column);
Var gamma_restack(Var rows);

/// Powers A^0 .. A^{order-1}.
std::vector<Tensor> adjacency_powers(const Tensor& a, std::size_t order);

/// Tap variables of a net bound to a tape (as leaves or constants).
struct BoundNet {
  const HwgcnNet* net = nullptr;
  std::vector<std::vector<Var>> taps;
};
BoundNet bind(const HwgcnNet& net, Tape& tape, bool trainable);

/// One filter layer on a tape.
Var gconv_forward(const GraphFilterLayer& layer, std::span<const Var> taps,
                  std::span<const Tensor> a_powers, Var z);
/// Plain evaluation of one filter layer.
Tensor gconv_forward(const GraphFilterLayer& layer, const Tensor& a, const Tensor& z);

/// Step sizes eta (1 x 2), the column mean of the per-user outputs.
Var eta_net_forward(const BoundNet& net, const Tensor& a, Var x_column);
std::vector<double> eta_net_forward(const HwgcnNet& net, const Tensor& a, const OptVector& x);

/// Row k of A in a relabeling-invariant order: A(k, k) first, then the
/// remaining entries of the row in descending order.
Tensor canonical_adjacency_rows(const Tensor& a);

/// Perturbation as a 5K x 1 column; each user's output row feeds that
/// user's own five variables. The per-user input row is
/// [canonical row k of A | Gamma(x_hat) row k].
Var perturb_net_forward(const BoundNet& net, const Tensor& a, Var xhat_column);
OptVector perturb_net_forward(const HwgcnNet& net, const Tensor& a, const OptVector& xhat);

}  // namespace upgd
