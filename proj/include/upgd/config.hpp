#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "upgd/dataset.hpp"
#include "upgd/fbl.hpp"
#include "upgd/learn.hpp"

namespace upgd {

/// All knobs of an experiment run.
struct RunConfig {
  SystemParams sys;  // empty weights become uniform in finalize()
  Geometry geo;
  TrainConfig train;
  double snr_db = 15.0;
  std::size_t num_train = 512;
  std::size_t num_test = 200;
  std::size_t num_layers = 2;
  std::size_t filter_order = 1;
  std::uint64_t seed = 1;

  /// Dataset seeds and the model initialization seed, derived from `seed`.
  std::uint64_t train_data_seed() const;
  std::uint64_t test_data_seed() const;
  std::uint64_t model_seed() const;

  DatasetHeader train_header() const;
  DatasetHeader test_header() const;

  /// Fills derived fields (power from SNR unless given, uniform weights,
  /// shuffle seed) and validates.
  void finalize();
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and malformed values raise ContractError naming the line.
///
/// Keys: num_users num_antennas snr_db max_power sigma blocklength
/// payload_bits error_prob weights ref_distance path_loss_exponent
/// min_distance max_distance num_train num_test num_layers filter_order
/// lr_theta lr_scale lr_dual batch_size epochs init_scale seed.
/// List values (weights, init_scale) are comma separated.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// Inverse of parse_config (all keys, full precision).
std::string format_config(const RunConfig& cfg);

}  // namespace upgd
