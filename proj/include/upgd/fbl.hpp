#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "upgd/opt_vector.hpp"

namespace upgd {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

/// Downlink system constants. `sigma` is the common per-UE noise standard
/// deviation, `payload_bits` the packet size D and `blocklength` n.
struct SystemParams {
  std::size_t num_users = 2;     // K
  std::size_t num_antennas = 4;  // N_t
  double max_power = 31.6227766016838;  // P, linear
  double sigma = 1.0;
  std::size_t blocklength = 128;
  double payload_bits = 256.0;
  double error_prob = 1e-5;
  std::vector<double> weights;  // alpha, length K

  /// Q^{-1}(error_prob) / sqrt(blocklength).
  double vartheta() const;
  /// (D / n) ln 2, the per-symbol rate target in nats.
  double rate_target() const;
  /// Throws ContractError / DomainError on invalid fields.
  void validate() const;

  /// Uniform weights 1/K when `weights` is empty.
  static SystemParams with_uniform_weights(SystemParams p);
};

/// P such that 10 log10(P / sigma^2) = snr_db.
double power_from_snr_db(double snr_db, double sigma = 1.0);

/// Cell layout for channel generation: path loss 1 / (1 + (d / d0)^exponent)
/// with users placed uniformly over the annulus area d_min <= d <= d_max.
struct Geometry {
  double ref_distance = 50.0;
  double exponent = 3.0;
  double min_distance = 120.0;
  double max_distance = 140.0;

  void validate() const;
};

/// One problem instance: rows of `H` are h_k^H, rows of `Hbar` are h_k^H / sigma.
struct Realization {
  CMatrix H;
  CMatrix Hbar;
  SystemParams sys;
  std::uint64_t seed = 0;

  std::size_t num_users() const { return static_cast<std::size_t>(H.rows()); }
  std::size_t num_antennas() const { return static_cast<std::size_t>(H.cols()); }
};

Realization make_realization(CMatrix H, SystemParams sys, std::uint64_t seed = 0);

/// Normalized beamformers; row k is w_k^T and has unit norm.
struct Beamformers {
  CMatrix W;
};

/// Gaussian tail probability Q(z) = P(N(0,1) > z).
double qfunc(double z);
/// Inverse of qfunc on (0, 1), accurate to 1e-10. DomainError outside (0, 1).
double qfunc_inv(double p);

/// V(gamma) = 1 - (1 + gamma)^-2. DomainError for gamma < 0.
double dispersion(double gamma);
/// ln(1 + gamma) - vartheta * sqrt(V(gamma)), in nats per symbol.
double fbl_rate(double gamma, double vartheta);

/// Smallest SINR on the increasing branch of the rate curve that meets the
/// rate target (D/n) ln 2. InfeasibleError when unreachable below 1e9.
double nu3(const SystemParams& sys);
/// Same for an explicit rate target (nats) and dispersion weight.
double nu3(double rate_target, double vartheta);

/// Single-user SNR bound P ||h_k||^2 / sigma^2 per user.
std::vector<double> gamma_tilde(const Realization& real);

/// G(l, k) = |hbar_l^H w_k|^2.
RMatrix gain_matrix(const Beamformers& bf, const Realization& real);

/// Uplink-dual SINR of every user for powers q and receivers W.
std::vector<double> sinr(std::span<const double> q, const Beamformers& bf, const Realization& real);

/// MMSE receivers w_k ~ (I + sum_l q_l hbar_l hbar_l^H)^{-1} hbar_k, normalized.
Beamformers mmse_beamformer(std::span<const double> q, const Realization& real);

/// Seeded channel draw: h_k = sqrt(rho_k) * CN(0, I) with area-uniform distances.
Realization channel_gen(std::uint64_t seed, const SystemParams& sys, const Geometry& geo);

/// Path-loss gain 1 / (1 + (d / d0)^exponent).
double path_gain(double distance, const Geometry& geo);

/// sum_k alpha_k (ln(1 + sinr_lo_k) - vartheta * sqrt_disp_k).
double wsr(const OptVector& x, const SystemParams& sys);

/// sum_k alpha_k R(gamma_k): the true weighted finite-blocklength rate.
double weighted_rate(std::span<const double> gammas, const SystemParams& sys);

}  // namespace upgd
