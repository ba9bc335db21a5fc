#include "upgd/proj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "upgd/errors.hpp"

namespace upgd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ScalarConstraint affine_constraint(std::vector<double> a, double b) {
  ScalarConstraint c;
  c.value = [a, b](std::span<const double> x) {
    if (x.size() != a.size()) throw ContractError("affine constraint: dimension mismatch");
    double s = b;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
    return s;
  };
  c.gradient = [a](std::span<const double>) { return a; };
  return c;
}

std::vector<double> pocs(std::span<const double> x, const ScalarConstraint& c, double xi) {
  std::vector<double> out(x.begin(), x.end());
  const double h = c.value(x);
  if (h <= xi) return out;
  const auto g = c.gradient(x);
  if (g.size() != x.size()) throw ContractError("pocs: gradient dimension mismatch");
  double g2 = 0.0;
  for (double v : g) g2 += v * v;
  if (g2 == 0.0) throw DomainError("pocs: degenerate constraint (zero gradient while violated)");
  const double step = (xi - h) / g2;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += step * g[i];
  return out;
}

C1Spec C1Spec::build(const Realization& real, double nu3_value) {
  C1Spec s;
  s.nu3 = nu3_value;
  s.gamma_tilde = upgd::gamma_tilde(real);
  s.max_power = real.sys.max_power;
  s.infeasible.resize(s.gamma_tilde.size());
  for (std::size_t k = 0; k < s.gamma_tilde.size(); ++k) s.infeasible[k] = nu3_value > s.gamma_tilde[k];
  return s;
}

C1Spec C1Spec::build(const Realization& real) { return build(real, upgd::nu3(real.sys)); }

bool C1Spec::any_infeasible() const {
  return std::any_of(infeasible.begin(), infeasible.end(), [](bool b) { return b; });
}

Tensor C1Spec::lower_bounds() const {
  const std::size_t k_users = num_users();
  Tensor lo(kNumBlocks * k_users, 1, -kInf);
  const double v_floor = dispersion(nu3);
  for (std::size_t k = 0; k < k_users; ++k) {
    lo[1 * k_users + k] = nu3;
    lo[2 * k_users + k] = infeasible[k] ? gamma_tilde[k] : -kInf;
    lo[3 * k_users + k] = v_floor;
  }
  return lo;
}

Tensor C1Spec::upper_bounds() const {
  const std::size_t k_users = num_users();
  Tensor hi(kNumBlocks * k_users, 1, kInf);
  for (std::size_t k = 0; k < k_users; ++k) {
    hi[2 * k_users + k] = gamma_tilde[k];
    hi[3 * k_users + k] = dispersion(gamma_tilde[k]);
  }
  return hi;
}

OptVector project_c1(const OptVector& x, const C1Spec& spec) {
  const std::size_t k_users = x.num_users();
  if (k_users != spec.num_users()) throw ContractError("project_c1: user count mismatch");
  const Tensor lo = spec.lower_bounds();
  const Tensor hi = spec.upper_bounds();
  std::vector<double> out(x.stacked().begin(), x.stacked().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(out[i], lo[i]), hi[i]);
  const auto q = project_capped_simplex(std::span<const double>(out).first(k_users), spec.max_power);
  std::copy(q.begin(), q.end(), out.begin());
  return OptVector(k_users, std::move(out));
}

Var project_c1(Var x, const C1Spec& spec) {
  const std::size_t k_users = spec.num_users();
  if (x.rows() != kNumBlocks * k_users || x.cols() != 1) {
    throw ContractError("project_c1: expected a 5K x 1 column");
  }
  Var boxed = clip(x, spec.lower_bounds(), spec.upper_bounds());
  return capped_simplex(boxed, 0, k_users, spec.max_power);
}

double c1_max_violation(const OptVector& x, const C1Spec& spec) {
  double worst = 0.0;
  double total_power = 0.0;
  for (std::size_t k = 0; k < x.num_users(); ++k) {
    const double q = x.at(Block::kPower, k);
    total_power += q;
    worst = std::max(worst, -q);
    worst = std::max(worst, spec.nu3 - x.at(Block::kSinrLower, k));
    worst = std::max(worst, x.at(Block::kSinrUpper, k) - spec.gamma_tilde[k]);
    worst = std::max(worst, dispersion(spec.nu3) - x.at(Block::kDisp, k));
    worst = std::max(worst, x.at(Block::kDisp, k) - dispersion(spec.gamma_tilde[k]));
  }
  worst = std::max(worst, total_power - spec.max_power);
  return worst;
}

C2Evaluator::C2Evaluator(const Realization& real, Beamformers bf)
    : real_(&real), bf_(std::move(bf)), gains_(gain_matrix(bf_, real)) {}

std::vector<double> C2Evaluator::sinr(std::span<const double> q) const {
  const std::size_t k_users = real_->num_users();
  if (q.size() != k_users) throw ContractError("sinr: power vector length differs from K");
  std::vector<double> out(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    double denom = 1.0;
    for (std::size_t l = 0; l < k_users; ++l) {
      if (l != k) denom += q[l] * gains_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
    }
    out[k] = q[k] * gains_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) / denom;
  }
  return out;
}

std::vector<double> C2Evaluator::raw_residuals(const OptVector& x) const {
  const std::size_t k_users = x.num_users();
  const auto gam = sinr(x.block(Block::kPower));
  std::vector<double> r(4 * k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    const double psi = x.at(Block::kDisp, k);
    if (psi < 0.0) throw DomainError("violation_c2: negative dispersion auxiliary for user " + std::to_string(k));
    r[k] = x.at(Block::kSinrLower, k) - gam[k];
    r[k_users + k] = gam[k] - x.at(Block::kSinrUpper, k);
    const double a = 1.0 + x.at(Block::kSinrUpper, k);
    r[2 * k_users + k] = 1.0 - 1.0 / (a * a) - psi;
    r[3 * k_users + k] = std::sqrt(psi) - x.at(Block::kSqrtDisp, k);
  }
  return r;
}

Var C2Evaluator::sinr(Var q) const {
  const std::size_t k_users = real_->num_users();
  Tape& tape = *q.tape;
  Tensor diag(k_users, 1);
  Tensor cross_t(k_users, k_users);  // cross_t(k, l) = G(l, k), l != k
  for (std::size_t k = 0; k < k_users; ++k) {
    diag[k] = gains_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t l = 0; l < k_users; ++l) {
      if (l != k) cross_t(k, l) = gains_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
    }
  }
  Var num = q * tape.constant(std::move(diag));
  Var den = matmul(tape.constant(std::move(cross_t)), q) + 1.0;
  return num / den;
}

namespace {
std::vector<std::size_t> block_index(Block b, std::size_t k_users) {
  std::vector<std::size_t> idx(k_users);
  for (std::size_t k = 0; k < k_users; ++k) idx[k] = static_cast<std::size_t>(b) * k_users + k;
  return idx;
}
}  // namespace

Var C2Evaluator::hinge_residuals(Var x) const {
  const std::size_t k_users = real_->num_users();
  for (double psi : std::span<const double>(x.value().data()).subspan(3 * k_users, k_users)) {
    if (psi < 0.0) throw DomainError("violation_c2: negative dispersion auxiliary");
  }
  Var q = gather(x, block_index(Block::kPower, k_users), k_users, 1);
  Var lo = gather(x, block_index(Block::kSinrLower, k_users), k_users, 1);
  Var hi = gather(x, block_index(Block::kSinrUpper, k_users), k_users, 1);
  Var disp = gather(x, block_index(Block::kDisp, k_users), k_users, 1);
  Var sq = gather(x, block_index(Block::kSqrtDisp, k_users), k_users, 1);
  Var gam = sinr(q);
  Var one_plus = hi + 1.0;
  Var v_hi = 1.0 - x.tape->constant(Tensor(k_users, 1, 1.0)) / (one_plus * one_plus);
  Var r = concat_rows(concat_rows(relu(lo - gam), relu(gam - hi)),
                      concat_rows(relu(v_hi - disp), relu(sqrt(disp) - sq)));
  return r;
}

Violation violation_c2(const OptVector& x, const C2Evaluator& ev) {
  Violation v;
  v.residuals = ev.raw_residuals(x);
  double total = 0.0;
  for (double& r : v.residuals) {
    r = std::max(r, 0.0);
    total += r;
  }
  v.mean = v.residuals.empty() ? 0.0 : total / static_cast<double>(v.residuals.size());
  return v;
}

}  // namespace upgd
