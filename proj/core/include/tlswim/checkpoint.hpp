#pragma once

#include "tlswim/network.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace tlswim {

// Everything needed to resume training or to evaluate a trained policy.
// Stored as a self-describing JSON document; doubles round-trip exactly.
struct Checkpoint {
  nn::GaussianPolicy policy;
  nn::ValueFunction critic;
  nn::Adam actor_optimizer;
  nn::Adam critic_optimizer;
  std::uint64_t seed = 0;
  long long episodes = 0;
  long long updates = 0;
  std::map<std::string, double> scalars;       // e.g. measured max speed
  std::map<std::string, std::string> strings;  // e.g. reward mode, resolved config
};

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws CheckpointError on a missing, malformed or incompatible file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tlswim
