#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "upgd/tape.hpp"
#include "upgd/tensor.hpp"

namespace upgd::testing {

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

/// Scalar function of one tensor input, built on a fresh tape.
using TapeFn = std::function<Var(Var)>;

inline double eval_plain(const TapeFn& f, const Tensor& x) {
  Tape tape;
  return f(tape.constant(x)).value().item();
}

/// Largest |analytic - central difference| / max(1, |analytic|, |numeric|)
/// over all entries of x.
inline double gradient_error(const TapeFn& f, const Tensor& x, double h = 1e-6) {
  Tape tape;
  Var leaf = tape.leaf(x);
  const Gradients g = tape.backward(f(leaf));
  const Tensor& analytic = g[leaf];
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x;
    Tensor xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double numeric = (eval_plain(f, xp) - eval_plain(f, xm)) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

}  // namespace upgd::testing
