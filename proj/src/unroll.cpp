#include "upgd/unroll.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "upgd/errors.hpp"

namespace upgd {

void UpgdLayer::validate(std::size_t num_users) const {
  eta_net.validate();
  perturb_net.validate();
  if (eta_net.role != NetRole::kStepSize) throw ContractError("layer step-size net has the wrong role");
  if (perturb_net.role != NetRole::kPerturbation) {
    throw ContractError("layer perturbation net has the wrong role");
  }
  if (eta_net.layers.front().in_dim() != kNumBlocks) {
    throw ContractError("step-size net input width must be 5");
  }
  if (perturb_net.layers.front().in_dim() != num_users + kNumBlocks) {
    throw ContractError("perturbation net input width must be K + 5 = " +
                        std::to_string(num_users + kNumBlocks));
  }
}

UpgdLayer UpgdLayer::make_default(std::size_t num_users, std::size_t order, std::mt19937_64& rng) {
  UpgdLayer layer;
  layer.eta_net = HwgcnNet::make_default(NetRole::kStepSize, num_users, order, rng);
  layer.perturb_net = HwgcnNet::make_default(NetRole::kPerturbation, num_users, order, rng);
  return layer;
}

void UsrmNet::validate(std::size_t num_users) const {
  if (layers.empty()) throw ContractError("model needs at least one layer");
  for (const auto& layer : layers) layer.validate(num_users);
}

UsrmNet UsrmNet::make_default(std::size_t num_users, std::size_t num_layers, std::size_t order,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  UsrmNet model;
  for (std::size_t l = 0; l < num_layers; ++l) model.layers.push_back(UpgdLayer::make_default(num_users, order, rng));
  model.validate(num_users);
  return model;
}

std::vector<double> grad_objective(const OptVector& x, const SystemParams& sys) {
  const std::size_t k_users = x.num_users();
  if (sys.weights.size() != k_users) throw ContractError("grad_objective: weight count differs from K");
  const double vt = sys.vartheta();
  std::vector<double> g(x.size(), 0.0);
  for (std::size_t k = 0; k < k_users; ++k) {
    const double phi = x.at(Block::kSinrLower, k);
    if (!(phi > -1.0)) throw DomainError("grad_objective: sinr auxiliary must exceed -1");
    g[x.offset(Block::kSinrLower) + k] = -sys.weights[k] / (1.0 + phi);
    g[x.offset(Block::kSqrtDisp) + k] = sys.weights[k] * vt;
  }
  return g;
}

OptVector gradient_step(const OptVector& x, std::span<const double> grad, std::span<const double> eta) {
  if (grad.size() != x.size()) throw ContractError("gradient_step: gradient length mismatch");
  if (eta.size() != 1 && eta.size() != 2) throw ContractError("gradient_step: eta must have 1 or 2 entries");
  const double eta_lo = eta[0];
  const double eta_t = eta.size() == 2 ? eta[1] : eta[0];
  OptVector out = x;
  for (std::size_t k = 0; k < x.num_users(); ++k) {
    const std::size_t i = x.offset(Block::kSinrLower) + k;
    const std::size_t j = x.offset(Block::kSqrtDisp) + k;
    out.stacked()[i] -= eta_lo * grad[i];
    out.stacked()[j] -= eta_t * grad[j];
  }
  return out;
}

LayerTrace layer_forward(const BoundNet& eta, const BoundNet& perturb, Var x0, const OptVector& x0_value,
                         const Tensor& adjacency_matrix, const SystemParams& sys, const C1Spec& spec) {
  const std::size_t k_users = x0_value.num_users();
  Tape& tape = *x0.tape;
  const auto grad = grad_objective(x0_value, sys);
  // Column 0 carries the sinr_lo gradient, column 1 the sqrt_disp gradient,
  // so grad_cols * eta^T applies each step size to its own block.
  Tensor grad_cols(kNumBlocks * k_users, 2);
  for (std::size_t k = 0; k < k_users; ++k) {
    const std::size_t i = x0_value.offset(Block::kSinrLower) + k;
    const std::size_t j = x0_value.offset(Block::kSqrtDisp) + k;
    grad_cols(i, 0) = grad[i];
    grad_cols(j, 1) = grad[j];
  }
  LayerTrace tr;
  tr.eta = eta_net_forward(eta, adjacency_matrix, x0);
  tr.x_hat = x0 - matmul(tape.constant(std::move(grad_cols)), transpose(tr.eta));
  tr.x_bar = perturb_net_forward(perturb, adjacency_matrix, tr.x_hat);
  tr.x_out = project_c1(tr.x_hat + tr.x_bar, spec);
  return tr;
}

OptVector layer_forward(const UpgdLayer& layer, const OptVector& x0, const Realization& real,
                        const Beamformers& bf, const C1Spec& spec) {
  layer.validate(x0.num_users());
  if (!x0.as_column().all_finite()) throw NumericError("layer_forward: non-finite input");
  Tape tape;
  const BoundNet eta = bind(layer.eta_net, tape, false);
  const BoundNet perturb = bind(layer.perturb_net, tape, false);
  const Tensor a = adjacency(real.H, bf);
  const auto tr = layer_forward(eta, perturb, tape.constant(x0.as_column()), x0, a, real.sys, spec);
  const Tensor& out = tr.x_out.value();
  if (!out.all_finite()) throw NumericError("layer_forward: non-finite output");
  return OptVector::from_column(out);
}

ForwardResult usrmnet_prefix_forward(const UsrmNet& model, std::size_t num_layers, const OptVector& x0,
                                     const Beamformers& bf0, const Realization& real, const C1Spec& spec) {
  if (num_layers > model.num_layers()) throw ContractError("prefix longer than the model");
  ForwardResult r{x0, bf0, {}};
  for (std::size_t l = 0; l < num_layers; ++l) {
    r.x = layer_forward(model.layers[l], r.x, real, r.bf, spec);
    r.bf = mmse_beamformer(r.x.block(Block::kPower), real);
    r.wsr_trace.push_back(wsr(r.x, real.sys));
  }
  return r;
}

ForwardResult usrmnet_forward(const UsrmNet& model, const OptVector& x0, const Beamformers& bf0,
                              const Realization& real, const C1Spec& spec) {
  if (model.num_layers() == 0) throw ContractError("model needs at least one layer");
  return usrmnet_prefix_forward(model, model.num_layers(), x0, bf0, real, spec);
}

Initialization init_x0_w0(const Realization& real, const C1Spec& spec) {
  const std::size_t k_users = real.num_users();
  if (spec.num_users() != k_users) throw ContractError("init_x0_w0: spec user count mismatch");
  OptVector x(k_users);
  std::vector<double> q(k_users, real.sys.max_power / static_cast<double>(k_users));
  Beamformers bf = mmse_beamformer(q, real);
  const auto gamma = sinr(q, bf, real);
  const double v_lo = dispersion(spec.nu3);
  for (std::size_t k = 0; k < k_users; ++k) {
    const double g = std::min(std::max(gamma[k], spec.nu3), spec.gamma_tilde[k]);
    const double v = std::min(std::max(dispersion(g), v_lo), dispersion(spec.gamma_tilde[k]));
    x.at(Block::kPower, k) = q[k];
    x.at(Block::kSinrLower, k) = g;
    x.at(Block::kSinrUpper, k) = g;
    x.at(Block::kDisp, k) = v;
    x.at(Block::kSqrtDisp, k) = std::sqrt(v);
  }
  return {project_c1(x, spec), std::move(bf)};
}

}  // namespace upgd
