#include "upgd/fbl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "upgd/errors.hpp"

namespace upgd {

double SystemParams::vartheta() const {
  return qfunc_inv(error_prob) / std::sqrt(static_cast<double>(blocklength));
}

double SystemParams::rate_target() const {
  return payload_bits / static_cast<double>(blocklength) * std::numbers::ln2;
}

void SystemParams::validate() const {
  if (num_users < 1) throw ContractError("K must be >= 1");
  if (num_antennas < 1) throw ContractError("N_t must be >= 1");
  if (blocklength < 1) throw ContractError("blocklength must be >= 1");
  if (!(max_power > 0.0)) throw DomainError("max power must be positive");
  if (!(sigma > 0.0)) throw DomainError("noise standard deviation must be positive");
  if (!(error_prob > 0.0 && error_prob < 0.5)) throw DomainError("error probability must lie in (0, 0.5)");
  if (!(payload_bits >= 0.0)) throw DomainError("payload must be nonnegative");
  if (weights.size() != num_users) {
    throw ContractError("weight vector has length " + std::to_string(weights.size()) + ", expected K");
  }
  for (double a : weights) {
    if (!(a >= 0.0)) throw DomainError("weights must be nonnegative");
  }
}

SystemParams SystemParams::with_uniform_weights(SystemParams p) {
  if (p.weights.empty()) p.weights.assign(p.num_users, 1.0 / static_cast<double>(p.num_users));
  return p;
}

double power_from_snr_db(double snr_db, double sigma) {
  return sigma * sigma * std::pow(10.0, snr_db / 10.0);
}

void Geometry::validate() const {
  if (!(ref_distance > 0.0)) throw DomainError("reference distance must be positive");
  if (!(min_distance > 0.0 && min_distance <= max_distance)) {
    throw DomainError("distances must satisfy 0 < d_min <= d_max");
  }
}

Realization make_realization(CMatrix H, SystemParams sys, std::uint64_t seed) {
  if (static_cast<std::size_t>(H.rows()) != sys.num_users ||
      static_cast<std::size_t>(H.cols()) != sys.num_antennas) {
    throw ContractError("channel matrix shape does not match K x N_t");
  }
  Realization r;
  r.Hbar = H / sys.sigma;
  r.H = std::move(H);
  r.sys = std::move(sys);
  r.seed = seed;
  if (!r.H.allFinite()) throw NumericError("channel matrix has non-finite entries");
  return r;
}

double qfunc(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double qfunc_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("qfunc_inv: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -qfunc_inv(1.0 - p);

  // Q is decreasing; bracket then bisect, finish with Newton on log Q.
  double lo = 0.0;
  double hi = 1.0;
  while (qfunc(hi) > p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (qfunc(mid) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double z = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double q = qfunc(z);
    if (pdf <= 0.0) break;
    z += (q - p) / pdf;
  }
  return z;
}

double dispersion(double gamma) {
  if (gamma < 0.0) throw DomainError("dispersion: negative SINR");
  const double a = 1.0 + gamma;
  return 1.0 - 1.0 / (a * a);
}

double fbl_rate(double gamma, double vartheta) {
  return std::log1p(gamma) - vartheta * std::sqrt(dispersion(gamma));
}

double nu3(const SystemParams& sys) { return nu3(sys.rate_target(), sys.vartheta()); }

double nu3(double target, double vt) {
  if (!(vt >= 0.0)) throw DomainError("nu3: dispersion weight must be nonnegative");
  if (vt == 0.0) return std::expm1(target);

  // Locate the interior minimum of R on a log grid; R is unimodal.
  constexpr double kMaxGamma = 1e9;
  double g_min = 0.0;
  double r_min = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double g = std::pow(10.0, -12.0 + 21.0 * i / 2000.0);
    const double r = fbl_rate(g, vt);
    if (r < r_min) {
      r_min = r;
      g_min = g;
    }
  }
  double lo = g_min;
  double hi = std::max(1.0, 2.0 * g_min);
  while (fbl_rate(hi, vt) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > kMaxGamma) {
      throw InfeasibleError("rate target " + std::to_string(target) + " unreachable for SINR <= 1e9");
    }
  }
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (fbl_rate(mid, vt) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double r_lo = std::abs(fbl_rate(lo, vt) - target);
  const double r_hi = std::abs(fbl_rate(hi, vt) - target);
  return r_lo <= r_hi ? lo : hi;
}

std::vector<double> gamma_tilde(const Realization& real) {
  const double s2 = real.sys.sigma * real.sys.sigma;
  std::vector<double> out(real.num_users());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = real.sys.max_power * real.H.row(static_cast<Eigen::Index>(k)).squaredNorm() / s2;
  }
  return out;
}

RMatrix gain_matrix(const Beamformers& bf, const Realization& real) {
  // (Hbar W^T)(l, k) = hbar_l^H w_k
  const CMatrix inner = real.Hbar * bf.W.transpose();
  return inner.cwiseAbs2();
}

std::vector<double> sinr(std::span<const double> q, const Beamformers& bf, const Realization& real) {
  const std::size_t k_users = real.num_users();
  if (q.size() != k_users) throw ContractError("power vector length differs from K");
  const RMatrix g = gain_matrix(bf, real);
  std::vector<double> out(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    double interference = 1.0;
    for (std::size_t l = 0; l < k_users; ++l) {
      if (l != k) interference += q[l] * g(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
    }
    out[k] = q[k] * g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) / interference;
  }
  return out;
}

Beamformers mmse_beamformer(std::span<const double> q, const Realization& real) {
  const auto k_users = static_cast<Eigen::Index>(real.num_users());
  const auto nt = static_cast<Eigen::Index>(real.num_antennas());
  if (static_cast<Eigen::Index>(q.size()) != k_users) throw ContractError("power vector length differs from K");
  // Columns are hbar_k.
  const CMatrix hcols = real.Hbar.adjoint();
  CMatrix m = CMatrix::Identity(nt, nt);
  for (Eigen::Index l = 0; l < k_users; ++l) {
    if (q[static_cast<std::size_t>(l)] < 0.0) throw DomainError("mmse_beamformer: negative power");
    m.noalias() += q[static_cast<std::size_t>(l)] * hcols.col(l) * hcols.col(l).adjoint();
  }
  const CMatrix x = m.llt().solve(hcols);
  Beamformers bf;
  bf.W.resize(k_users, nt);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const double norm = x.col(k).norm();
    if (!(norm > 1e-300) || !std::isfinite(norm)) {
      throw NumericError("mmse_beamformer: receiver norm underflow for user " + std::to_string(k));
    }
    bf.W.row(k) = (x.col(k) / norm).transpose();
  }
  return bf;
}

double path_gain(double distance, const Geometry& geo) {
  return 1.0 / (1.0 + std::pow(distance / geo.ref_distance, geo.exponent));
}

Realization channel_gen(std::uint64_t seed, const SystemParams& sys, const Geometry& geo) {
  sys.validate();
  geo.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> half_normal(0.0, std::sqrt(0.5));

  const auto k_users = static_cast<Eigen::Index>(sys.num_users);
  const auto nt = static_cast<Eigen::Index>(sys.num_antennas);
  const double r0 = geo.min_distance * geo.min_distance;
  const double r1 = geo.max_distance * geo.max_distance;
  CMatrix h(k_users, nt);
  for (Eigen::Index k = 0; k < k_users; ++k) {
    const double d = std::sqrt(r0 + unit(rng) * (r1 - r0));
    const double amp = std::sqrt(path_gain(d, geo));
    for (Eigen::Index m = 0; m < nt; ++m) {
      const double re = half_normal(rng);
      const double im = half_normal(rng);
      h(k, m) = amp * std::complex<double>(re, im);
    }
  }
  return make_realization(std::move(h), sys, seed);
}

double wsr(const OptVector& x, const SystemParams& sys) {
  const double vt = sys.vartheta();
  double total = 0.0;
  for (std::size_t k = 0; k < x.num_users(); ++k) {
    const double phi = x.at(Block::kSinrLower, k);
    if (!(phi > -1.0)) throw DomainError("wsr: SINR auxiliary must exceed -1");
    total += sys.weights.at(k) * (std::log1p(phi) - vt * x.at(Block::kSqrtDisp, k));
  }
  return total;
}

double weighted_rate(std::span<const double> gammas, const SystemParams& sys) {
  const double vt = sys.vartheta();
  double total = 0.0;
  for (std::size_t k = 0; k < gammas.size(); ++k) total += sys.weights.at(k) * fbl_rate(gammas[k], vt);
  return total;
}

}  // namespace upgd
