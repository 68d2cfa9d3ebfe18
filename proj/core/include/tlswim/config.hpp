#pragma once

// Run configuration. Values are layered: built-in defaults, then a JSON
// config file, then TLSWIM_<SECTION>_<KEY> environment variables, then
// command-line overrides.

#include "tlswim/analysis.hpp"
#include "tlswim/gait.hpp"
#include "tlswim/navigation.hpp"
#include "tlswim/ppo.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tlswim {

struct GaitRunConfig {
  GaitKind kind = GaitKind::purcell_symmetric;
  double alpha_min = -std::numbers::pi / 3;  // custom gaits only
  double alpha_max = std::numbers::pi / 3;
  double period = 0.0;  // <= 0 selects unit joint rate
  int cycles = 5;
  double dt = 0.1;
  double theta2 = 0.0;

  GaitSpec spec() const;
};

struct EvaluateConfig {
  SuccessConfig success;
  // Straight starts used for the translation-stage traces.
  std::vector<double> start_headings{0.0, std::numbers::pi / 3, std::numbers::pi / 2};
};

struct NavigateConfig {
  WaypointCourse course = star_course();
  SwimmerState start{{1.0, 0.0}, {0.0, 0.0, 0.0}};
};

struct PursueConfig {
  Vec2 target_position{1.5, 0.5};
  double target_angle = std::numbers::pi / 6;
  std::optional<double> speed;        // absolute target speed
  double speed_ratio = 0.0;           // v_T / v_m, used when speed is unset
  double diffusivity = 5e-5;
  PursuitConfig pursuit;
  SwimmerState start{{1.0, 0.0}, {0.0, 0.0, 0.0}};
};

struct SweepConfig {
  std::string parameter = "c";  // "c" or "N_s"
  std::vector<double> values{0.0, 1.0, 2.0, 3.0, 4.0};
  long long vfs_episodes = 30000;
  long long eas_episodes = 60000;
};

struct AppConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "runs/latest";
  EpisodeConfig episode;
  RewardConfig reward = RewardConfig::vfs();
  TrainConfig train;
  GaitRunConfig gait;
  EvaluateConfig evaluate;
  NavigateConfig navigate;
  PursueConfig pursue;
  SweepConfig sweep;

  // Fully resolved configuration as pretty-printed JSON.
  std::string resolved_json;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<long long> episodes;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_environment();

// Throws ConfigError naming the offending field and, when the value came
// from the file, its line.
AppConfig load_config(const std::optional<std::filesystem::path>& file,
                      const ConfigOverrides& overrides = {},
                      const EnvLookup& env = process_environment());

AppConfig parse_config(const std::string& text, const ConfigOverrides& overrides = {},
                       const EnvLookup& env = {});

// The built-in defaults as JSON.
std::string default_config_json();

}  // namespace tlswim
