#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "upgd/config.hpp"
#include "upgd/learn.hpp"
#include "upgd/unroll.hpp"

namespace upgd {

inline constexpr int kCheckpointVersion = 1;

/// Trained model plus the multipliers and scales of every layer and the
/// configuration that produced it.
struct Checkpoint {
  UsrmNet model;
  std::vector<DualState> duals;
  RunConfig config;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
/// ContractError on a missing/unknown version or malformed content.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace upgd
