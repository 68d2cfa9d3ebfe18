#pragma once

// Command dispatch behind the tlswim executable. Every command writes its
// artifacts plus a manifest.json (resolved config, seed, version, wall time)
// into the output directory.

#include "tlswim/checkpoint.hpp"
#include "tlswim/config.hpp"

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tlswim {

enum class ExitCode : int {
  ok = 0,
  failure = 1,
  usage = 2,       // bad flags or config
  checkpoint = 3,  // missing or incompatible checkpoint
  numerical = 4,   // singular system or diverged update
};

ExitCode exit_code_for(const std::exception& e);

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"simulate-gait", "train",   "evaluate",
                                              "navigate",      "pursue",  "sweep"};
  return names;
}

struct RunRequest {
  std::string command;
  std::optional<std::filesystem::path> config;
  ConfigOverrides overrides;
  std::optional<std::filesystem::path> checkpoint;
  EnvLookup env = process_environment();
  std::ostream* log = nullptr;
};

// Runs one command. Errors are reported on `log` and mapped to exit codes.
int run(const RunRequest& request);

std::string version();

// Translation-stage speed of the policy from the straight start used for
// v_m (theta = pi/3 on every link, 1500 steps); nullopt if the policy never
// settles into translation.
std::optional<double> measure_translation_speed(const nn::GaussianPolicy& policy,
                                                const EpisodeConfig& env);

}  // namespace tlswim
