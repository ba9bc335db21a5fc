#include "upgd/hwgcn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "upgd/errors.hpp"

namespace upgd {

namespace {

std::vector<std::size_t> reshape_index(std::size_t k_users) {
  std::vector<std::size_t> idx(k_users * kNumBlocks);
  for (std::size_t k = 0; k < k_users; ++k)
    for (std::size_t b = 0; b < kNumBlocks; ++b) idx[k * kNumBlocks + b] = b * k_users + k;
  return idx;
}

std::vector<std::size_t> restack_index(std::size_t k_users) {
  std::vector<std::size_t> idx(k_users * kNumBlocks);
  for (std::size_t k = 0; k < k_users; ++k)
    for (std::size_t b = 0; b < kNumBlocks; ++b) idx[b * k_users + k] = k * kNumBlocks + b;
  return idx;
}

Var activate(Var v, Activation act) {
  switch (act) {
    case Activation::kTanh:
      return tanh(v);
    case Activation::kRelu:
      return relu(v);
    case Activation::kIdentity:
      return v;
  }
  return v;
}

}  // namespace

void GraphFilterLayer::validate() const {
  if (taps.empty()) throw ContractError("graph filter layer needs at least one tap");
  for (const Tensor& t : taps) {
    if (t.rows() != taps[0].rows() || t.cols() != taps[0].cols()) {
      throw ContractError("graph filter taps must share p_in x p_out");
    }
  }
}

std::size_t HwgcnNet::num_params() const {
  std::size_t n = 0;
  for (const auto& layer : layers)
    for (const auto& t : layer.taps) n += t.size();
  return n;
}

void HwgcnNet::validate() const {
  if (layers.empty()) throw ContractError("graph network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0 && layers[i].in_dim() != layers[i - 1].out_dim()) {
      throw ContractError("graph network layer " + std::to_string(i) + " input width mismatch");
    }
  }
  const std::size_t out = layers.back().out_dim();
  if (role == NetRole::kStepSize && out != 2) throw ContractError("step-size net must output 2 features");
  if (role == NetRole::kPerturbation && out != kNumBlocks) {
    throw ContractError("perturbation net must output 5 features");
  }
}

HwgcnNet HwgcnNet::make(NetRole role, std::span<const std::size_t> dims, std::size_t order,
                        std::mt19937_64& rng) {
  if (dims.size() < 2) throw ContractError("graph network needs at least input and output dims");
  if (order < 1) throw ContractError("filter order must be >= 1");
  HwgcnNet net;
  net.role = role;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    GraphFilterLayer layer;
    const bool last = i + 2 == dims.size();
    layer.activation = !last ? Activation::kTanh
                             : (role == NetRole::kStepSize ? Activation::kRelu : Activation::kIdentity);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t k = 0; k < order; ++k) {
      Tensor tap(dims[i], dims[i + 1]);
      for (std::size_t j = 0; j < tap.size(); ++j) tap[j] = dist(rng);
      layer.taps.push_back(std::move(tap));
    }
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

HwgcnNet HwgcnNet::make_default(NetRole role, std::size_t num_users, std::size_t order,
                                std::mt19937_64& rng) {
  if (role == NetRole::kStepSize) {
    const std::size_t dims[] = {kNumBlocks, 32, 2};
    return make(role, dims, order, rng);
  }
  const std::size_t dims[] = {num_users + kNumBlocks, 32, kNumBlocks};
  return make(role, dims, order, rng);
}

Tensor adjacency(const CMatrix& H, const Beamformers& bf) {
  if (H.rows() != bf.W.rows() || H.cols() != bf.W.cols()) {
    throw ContractError("adjacency: H and W shapes differ");
  }
  const CMatrix prod = H * bf.W.transpose();
  const auto k_users = static_cast<std::size_t>(H.rows());
  Tensor a(k_users, k_users);
  for (std::size_t i = 0; i < k_users; ++i)
    for (std::size_t j = 0; j < k_users; ++j)
      a(i, j) = std::abs(prod(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return a;
}

Tensor gamma_reshape(const OptVector& x) {
  const std::size_t k_users = x.num_users();
  const auto idx = reshape_index(k_users);
  Tensor out(k_users, kNumBlocks);
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x.stacked()[idx[i]];
  return out;
}

OptVector gamma_restack(const Tensor& rows) {
  if (rows.cols() != kNumBlocks) throw ContractError("gamma_restack: expected K x 5 input");
  const std::size_t k_users = rows.rows();
  const auto idx = restack_index(k_users);
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = rows[idx[i]];
  return OptVector(k_users, std::move(out));
}

Var gamma_reshape(Var x_column) {
  if (x_column.cols() != 1 || x_column.rows() % kNumBlocks != 0) {
    throw ContractError("gamma_reshape: expected a 5K x 1 column");
  }
  const std::size_t k_users = x_column.rows() / kNumBlocks;
  return gather(x_column, reshape_index(k_users), k_users, kNumBlocks);
}

Var gamma_restack(Var rows) {
  if (rows.cols() != kNumBlocks) throw ContractError("gamma_restack: expected K x 5 input");
  const std::size_t k_users = rows.rows();
  return gather(rows, restack_index(k_users), k_users * kNumBlocks, 1);
}

std::vector<Tensor> adjacency_powers(const Tensor& a, std::size_t order) {
  std::vector<Tensor> powers;
  if (order == 0) return powers;
  powers.push_back(Tensor::identity(a.rows()));
  for (std::size_t k = 1; k < order; ++k) powers.push_back(matmul(powers.back(), a));
  return powers;
}

BoundNet bind(const HwgcnNet& net, Tape& tape, bool trainable) {
  BoundNet b;
  b.net = &net;
  for (const auto& layer : net.layers) {
    std::vector<Var> vars;
    for (const auto& t : layer.taps) vars.push_back(trainable ? tape.leaf(t) : tape.constant(t));
    b.taps.push_back(std::move(vars));
  }
  return b;
}

Var gconv_forward(const GraphFilterLayer& layer, std::span<const Var> taps,
                  std::span<const Tensor> a_powers, Var z) {
  if (taps.size() != layer.order() || a_powers.size() < layer.order()) {
    throw ContractError("gconv_forward: tap/power count mismatch");
  }
  if (z.cols() != layer.in_dim()) throw ContractError("gconv_forward: input width mismatch");
  Tape& tape = *z.tape;
  Var acc = matmul(z, taps[0]);  // A^0 = I
  for (std::size_t k = 1; k < taps.size(); ++k) {
    acc = acc + matmul(tape.constant(a_powers[k]), matmul(z, taps[k]));
  }
  return activate(acc, layer.activation);
}

Tensor gconv_forward(const GraphFilterLayer& layer, const Tensor& a, const Tensor& z) {
  Tape tape;
  std::vector<Var> taps;
  for (const auto& t : layer.taps) taps.push_back(tape.constant(t));
  const auto powers = adjacency_powers(a, layer.order());
  return gconv_forward(layer, taps, powers, tape.constant(z)).value();
}

namespace {
Var run_layers(const BoundNet& net, const Tensor& a, Var z) {
  std::size_t max_order = 1;
  for (const auto& layer : net.net->layers) max_order = std::max(max_order, layer.order());
  const auto powers = adjacency_powers(a, max_order);
  for (std::size_t i = 0; i < net.net->layers.size(); ++i) {
    z = gconv_forward(net.net->layers[i], net.taps[i], powers, z);
  }
  return z;
}
}  // namespace

Var eta_net_forward(const BoundNet& net, const Tensor& a, Var x_column) {
  if (net.net->role != NetRole::kStepSize) throw ContractError("eta_net_forward: wrong net role");
  return mean_rows(run_layers(net, a, gamma_reshape(x_column)));
}

std::vector<double> eta_net_forward(const HwgcnNet& net, const Tensor& a, const OptVector& x) {
  Tape tape;
  const BoundNet bound = bind(net, tape, false);
  const Var eta = eta_net_forward(bound, a, tape.constant(x.as_column()));
  return eta.value().values();
}

Tensor canonical_adjacency_rows(const Tensor& a) {
  if (a.rows() != a.cols()) throw ContractError("canonical_adjacency_rows: adjacency must be square");
  const std::size_t n = a.rows();
  Tensor out(n, n);
  std::vector<double> rest;
  for (std::size_t k = 0; k < n; ++k) {
    rest.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != k) rest.push_back(a(k, j));
    std::sort(rest.begin(), rest.end(), std::greater<>());
    out(k, 0) = a(k, k);
    for (std::size_t j = 0; j < rest.size(); ++j) out(k, j + 1) = rest[j];
  }
  return out;
}

Var perturb_net_forward(const BoundNet& net, const Tensor& a, Var xhat_column) {
  if (net.net->role != NetRole::kPerturbation) throw ContractError("perturb_net_forward: wrong net role");
  Tape& tape = *xhat_column.tape;
  Var features = concat_cols(tape.constant(canonical_adjacency_rows(a)), gamma_reshape(xhat_column));
  return gamma_restack(run_layers(net, a, features));
}

OptVector perturb_net_forward(const HwgcnNet& net, const Tensor& a, const OptVector& xhat) {
  Tape tape;
  const BoundNet bound = bind(net, tape, false);
  return OptVector::from_column(perturb_net_forward(bound, a, tape.constant(xhat.as_column())).value());
}

}  // namespace upgd
