#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/hwgcn.hpp"
#include "upgd/opt_vector.hpp"

namespace upgd {

/// out row i = in row perm[i].
CMatrix permute_rows(const CMatrix& m, std::span<const std::size_t> perm);
Tensor permute_rows(const Tensor& m, std::span<const std::size_t> perm);
/// out(i, j) = a(perm[i], perm[j]).
Tensor permute_both(const Tensor& a, std::span<const std::size_t> perm);
/// Relabels users: channel rows and weights.
Realization permute_realization(const Realization& real, std::span<const std::size_t> perm);

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng);

/// Largest deviation from exact relabeling symmetry, per component.
struct EquivarianceReport {
  std::map<std::string, double> max_deviation;
  std::size_t trials = 0;

  double overall() const;
};

/// Random channels, starting points, nets (filter order 2) and
/// permutations; compares f(permuted input) against permuted f(input) for
/// Gamma, the adjacency, one filter layer, both nets, one layer and 1- and
/// 2-layer models.
EquivarianceReport equivariance_suite(const SystemParams& sys, const Geometry& geo, std::uint64_t seed,
                                      std::size_t trials);

}  // namespace upgd
