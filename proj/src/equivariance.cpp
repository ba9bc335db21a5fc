#include "upgd/equivariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "upgd/errors.hpp"
#include "upgd/proj.hpp"
#include "upgd/unroll.hpp"

namespace upgd {

CMatrix permute_rows(const CMatrix& m, std::span<const std::size_t> perm) {
  if (perm.size() != static_cast<std::size_t>(m.rows())) throw ContractError("permutation length mismatch");
  CMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(perm[i]));
  return out;
}

Tensor permute_rows(const Tensor& m, std::span<const std::size_t> perm) {
  if (perm.size() != m.rows()) throw ContractError("permutation length mismatch");
  Tensor out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(perm[i], j);
  return out;
}

Tensor permute_both(const Tensor& a, std::span<const std::size_t> perm) {
  if (perm.size() != a.rows() || a.rows() != a.cols()) throw ContractError("permutation length mismatch");
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(perm[i], perm[j]);
  return out;
}

Realization permute_realization(const Realization& real, std::span<const std::size_t> perm) {
  SystemParams sys = real.sys;
  for (std::size_t i = 0; i < perm.size(); ++i) sys.weights[i] = real.sys.weights[perm[i]];
  return make_realization(permute_rows(real.H, perm), std::move(sys), real.seed);
}

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

double EquivarianceReport::overall() const {
  double m = 0.0;
  for (const auto& [name, v] : max_deviation) m = std::max(m, v);
  return m;
}

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ContractError("shape mismatch in deviation");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const OptVector& a, const OptVector& b) { return max_abs_diff(a.as_column(), b.as_column()); }

double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

void record(EquivarianceReport& rep, const std::string& name, double dev) {
  double& slot = rep.max_deviation[name];
  slot = std::max(slot, dev);
}

}  // namespace

EquivarianceReport equivariance_suite(const SystemParams& sys_in, const Geometry& geo, std::uint64_t seed,
                                      std::size_t trials) {
  const SystemParams sys = SystemParams::with_uniform_weights(sys_in);
  sys.validate();
  const std::size_t k_users = sys.num_users;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EquivarianceReport rep;
  rep.trials = trials;
  constexpr std::size_t kOrder = 2;

  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Realization real = channel_gen(rng(), sys, geo);
    const C1Spec spec = C1Spec::build(real);
    auto init = init_x0_w0(real, spec);
    // Perturb the starting point so every entry is distinct.
    OptVector x0 = init.x0;
    for (double& v : x0.stacked()) v += unit(rng);
    std::vector<double> q(k_users);
    for (double& v : q) v = real.sys.max_power * unit(rng) / static_cast<double>(k_users);
    const Beamformers bf0 = mmse_beamformer(q, real);
    const UsrmNet model = UsrmNet::make_default(k_users, 2, kOrder, rng());
    UsrmNet single;
    single.layers.push_back(model.layers[0]);

    const auto perm = random_permutation(k_users, rng);
    const Realization preal = permute_realization(real, perm);
    const C1Spec pspec = C1Spec::build(preal);
    const OptVector px0 = permute_users(x0, perm);
    const Beamformers pbf0{permute_rows(bf0.W, perm)};

    const Tensor a = adjacency(real.H, bf0);
    const Tensor pa = adjacency(preal.H, pbf0);
    record(rep, "adjacency", max_abs_diff(pa, permute_both(a, perm)));

    const Tensor g = gamma_reshape(x0);
    record(rep, "gamma", max_abs_diff(gamma_reshape(px0), permute_rows(g, perm)));

    const auto& filt = model.layers[0].perturb_net.layers[0];
    Tensor z(k_users, filt.in_dim());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = unit(rng) - 0.5;
    record(rep, "gconv",
           max_abs_diff(gconv_forward(filt, pa, permute_rows(z, perm)), permute_rows(gconv_forward(filt, a, z), perm)));

    const auto eta = eta_net_forward(model.layers[0].eta_net, a, x0);
    const auto peta = eta_net_forward(model.layers[0].eta_net, pa, px0);
    record(rep, "eta_net", max_abs_diff(Tensor::column(eta), Tensor::column(peta)));

    record(rep, "perturb_net",
           max_abs_diff(perturb_net_forward(model.layers[0].perturb_net, pa, px0),
                        permute_users(perturb_net_forward(model.layers[0].perturb_net, a, x0), perm)));

    record(rep, "layer_forward",
           max_abs_diff(layer_forward(model.layers[0], px0, preal, pbf0, pspec),
                        permute_users(layer_forward(model.layers[0], x0, real, bf0, spec), perm)));

    for (const UsrmNet* m : std::initializer_list<const UsrmNet*>{&single, &model}) {
      const auto out = usrmnet_forward(*m, x0, bf0, real, spec);
      const auto pout = usrmnet_forward(*m, px0, pbf0, preal, pspec);
      const std::string name = "usrmnet_L" + std::to_string(m->num_layers());
      record(rep, name + "_x", max_abs_diff(pout.x, permute_users(out.x, perm)));
      record(rep, name + "_w", max_abs_diff(pout.bf.W, permute_rows(out.bf.W, perm)));
    }
  }
  return rep;
}

}  // namespace upgd
