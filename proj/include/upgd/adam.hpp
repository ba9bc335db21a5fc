#pragma once

#include <cstddef>
#include <vector>

#include "upgd/tensor.hpp"

namespace upgd {

/// Moment accumulators for one group of parameters updated with Adam.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One bias-corrected Adam update, in place:
///   p -= lr * m_hat / (sqrt(v_hat) + epsilon)
/// The accumulators are sized lazily on the first call; afterwards params,
/// grads and accumulators must agree in count and shape (ContractError).
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr);

}  // namespace upgd
