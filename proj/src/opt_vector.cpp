#include "upgd/opt_vector.hpp"

#include <string>

#include "upgd/errors.hpp"

namespace upgd {

OptVector::OptVector(std::size_t num_users) : k_(num_users), data_(kNumBlocks * num_users, 0.0) {}

OptVector::OptVector(std::size_t num_users, std::vector<double> stacked)
    : k_(num_users), data_(std::move(stacked)) {
  if (data_.size() != kNumBlocks * k_) {
    throw ContractError("decision vector has length " + std::to_string(data_.size()) +
                        ", expected 5K = " + std::to_string(kNumBlocks * k_));
  }
}

OptVector OptVector::from_column(const Tensor& column) {
  if (column.cols() != 1 || column.rows() % kNumBlocks != 0) {
    throw ContractError("decision vector column must be 5K x 1");
  }
  return OptVector(column.rows() / kNumBlocks, column.values());
}

std::span<double> OptVector::block(Block b) { return std::span<double>(data_).subspan(offset(b), k_); }

std::span<const double> OptVector::block(Block b) const {
  return std::span<const double>(data_).subspan(offset(b), k_);
}

OptVector permute_users(const OptVector& x, std::span<const std::size_t> perm) {
  const std::size_t k = x.num_users();
  if (perm.size() != k) throw ContractError("permutation length differs from user count");
  OptVector out(k);
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const auto blk = static_cast<Block>(b);
    for (std::size_t i = 0; i < k; ++i) out.at(blk, i) = x.at(blk, perm[i]);
  }
  return out;
}

}  // namespace upgd
