#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "upgd/tensor.hpp"

namespace upgd {

/// Blocks of the stacked decision vector, in storage order.
enum class Block : std::size_t {
  kPower = 0,     // q: uplink powers
  kSinrLower = 1, // lower auxiliary on the SINR
  kSinrUpper = 2, // upper auxiliary on the SINR
  kDisp = 3,      // auxiliary bounding the dispersion V
  kSqrtDisp = 4,  // auxiliary bounding sqrt of the dispersion auxiliary
};

inline constexpr std::size_t kNumBlocks = 5;

/// Decision vector x = [q; sinr_lo; sinr_hi; disp; sqrt_disp] of length 5K.
class OptVector {
 public:
  OptVector() = default;
  explicit OptVector(std::size_t num_users);
  OptVector(std::size_t num_users, std::vector<double> stacked);

  static OptVector from_column(const Tensor& column);

  std::size_t num_users() const noexcept { return k_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> block(Block b);
  std::span<const double> block(Block b) const;
  double& at(Block b, std::size_t user) { return data_[offset(b) + user]; }
  double at(Block b, std::size_t user) const { return data_[offset(b) + user]; }

  std::size_t offset(Block b) const noexcept { return static_cast<std::size_t>(b) * k_; }

  std::span<double> stacked() noexcept { return data_; }
  std::span<const double> stacked() const noexcept { return data_; }
  Tensor as_column() const { return Tensor::column(data_); }

  friend bool operator==(const OptVector&, const OptVector&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<double> data_;
};

/// Apply a user permutation to every block: out.block[b][i] = x.block[b][perm[i]].
OptVector permute_users(const OptVector& x, std::span<const std::size_t> perm);

}  // namespace upgd
