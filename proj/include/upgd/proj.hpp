#pragma once

#include <functional>
#include <span>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/opt_vector.hpp"
#include "upgd/tape.hpp"

namespace upgd {

/// Scalar constraint hbar(x) <= xi with a gradient oracle.
struct ScalarConstraint {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

/// hbar(x) = a^T x + b.
ScalarConstraint affine_constraint(std::vector<double> a, double b = 0.0);

/// Single projection step onto {x : hbar(x) <= xi}:
///   x                                          if hbar(x) <= xi
///   x + (xi - hbar(x)) / |grad|^2 * grad       otherwise.
/// Throws DomainError when infeasible with a zero gradient.
std::vector<double> pocs(std::span<const double> x, const ScalarConstraint& c, double xi);

/// Constants of the decoupled convex constraints: the SINR floor nu3, the
/// per-user SNR ceilings gamma_tilde, and the power budget.
struct C1Spec {
  double nu3 = 0.0;
  std::vector<double> gamma_tilde;
  double max_power = 0.0;
  /// Users with nu3 > gamma_tilde; their upper SINR auxiliary is pinned to gamma_tilde.
  std::vector<bool> infeasible;

  static C1Spec build(const Realization& real, double nu3);
  static C1Spec build(const Realization& real);

  std::size_t num_users() const { return gamma_tilde.size(); }
  bool any_infeasible() const;
  /// Per-entry lower/upper bounds of the coordinate boxes (q rows unbounded).
  Tensor lower_bounds() const;
  Tensor upper_bounds() const;
};

/// Exact projection onto the decoupled constraints: box clips on the
/// auxiliary blocks and Euclidean projection of q onto {q >= 0, sum q <= P}.
OptVector project_c1(const OptVector& x, const C1Spec& spec);
/// Same map recorded on a tape (x is a 5K x 1 column).
Var project_c1(Var x, const C1Spec& spec);

/// Largest violation of the decoupled constraints (0 when feasible).
double c1_max_violation(const OptVector& x, const C1Spec& spec);

/// Evaluates the coupled constraints for a fixed realization and receiver set.
class C2Evaluator {
 public:
  C2Evaluator(const Realization& real, Beamformers bf);

  const Realization& realization() const { return *real_; }
  const Beamformers& beamformers() const { return bf_; }
  /// G(l, k) = |hbar_l^H w_k|^2.
  const RMatrix& gains() const { return gains_; }

  std::vector<double> sinr(std::span<const double> q) const;
  /// Raw constraint values g_j (positive means violated), length 4K in the
  /// order [sinr_lo - sinr; sinr - sinr_hi; V(sinr_hi) - disp; sqrt(disp) - sqrt_disp].
  std::vector<double> raw_residuals(const OptVector& x) const;

  /// SINR of every user on a tape, q is K x 1.
  Var sinr(Var q) const;
  /// Hinged residuals [g_j]^+ as a 4K x 1 column on a tape.
  Var hinge_residuals(Var x) const;

 private:
  const Realization* real_;
  Beamformers bf_;
  RMatrix gains_;
};

struct Violation {
  double mean = 0.0;               // V_g of one sample
  std::vector<double> residuals;   // 4K hinged residuals
};

/// Hinged residuals of the coupled constraints and their mean.
/// DomainError when a dispersion auxiliary is negative.
Violation violation_c2(const OptVector& x, const C2Evaluator& ev);

}  // namespace upgd
