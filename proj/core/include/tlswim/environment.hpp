#pragma once

// Episodic navigation environment: the swimmer senses its heading relative
// to a target direction and its joint angles, and acts by setting joint rates.

#include "tlswim/dynamics.hpp"
#include "tlswim/rng.hpp"

#include <array>
#include <string>

namespace tlswim {

struct Observation {
  double cos_theta_d = 1.0;
  double sin_theta_d = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  std::array<double, 4> as_array() const { return {cos_theta_d, sin_theta_d, alpha1, alpha2}; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class RewardMode { vfs, eas };

std::string to_string(RewardMode mode);
RewardMode reward_mode_from_string(const std::string& name);

// VFS: b * (centroid displacement . p).  EAS: the same minus c * W_k.
struct RewardConfig {
  RewardMode mode = RewardMode::eas;
  double b = 6.0;
  double c = 3.0;

  static RewardConfig vfs(double b = 6.0) { return {RewardMode::vfs, b, 0.0}; }
  static RewardConfig eas(double b = 6.0, double c = 3.0) { return {RewardMode::eas, b, c}; }

  void validate() const;
};

struct EpisodeConfig {
  int steps = 200;  // N_s
  double theta_target = 0.0;
  double dt = 0.1;
  int substeps = 4;
  double rate_cap = kDefaultRateCap;
  double gamma = kDefaultGamma;
  bool randomize_init = true;
  Vec2 x1{1.0, 0.0};
  // Used when randomize_init is false.
  std::array<double, 3> fixed_theta{std::numbers::pi / 3, std::numbers::pi / 3,
                                    std::numbers::pi / 3};

  IntegratorOptions integrator() const { return {gamma, substeps, kJointLimit}; }
  void validate() const;
};

struct StepOutcome {
  SwimmerState state;
  Observation observation;
  double reward = 0.0;
  double work = 0.0;
  Vec2 displacement;
  JointRates applied_rates;
};

Observation observe(const SwimmerState& state, double theta_target);

// x1 from the config; with randomization on, theta2 ~ U(-pi, pi) and both
// joint angles ~ U(-2pi/3, 2pi/3).
SwimmerState initial_state(const EpisodeConfig& config, Rng& rng);

struct ResetResult {
  SwimmerState state;
  Observation observation;
};
ResetResult reset(const EpisodeConfig& config, Rng& rng);

JointRates clamp_action(const JointRates& action, double cap);

double step_reward(const Vec2& displacement, double work, double theta_target,
                   const RewardConfig& reward);

// One action step of duration config.dt. The action must already respect the
// rate cap (see clamp_action).
StepOutcome env_step(const SwimmerState& state, const JointRates& action,
                     const EpisodeConfig& config, const RewardConfig& reward);

// Stateful wrapper used by rollout workers; one instance per thread.
class SwimmerEnv {
 public:
  SwimmerEnv(EpisodeConfig config, RewardConfig reward);

  const Observation& reset(Rng& rng);
  const Observation& reset_to(const SwimmerState& state);
  StepOutcome step(const JointRates& action);

  const SwimmerState& state() const { return state_; }
  const Observation& observation() const { return observation_; }
  int step_count() const { return steps_; }
  bool done() const { return steps_ >= config_.steps; }
  const EpisodeConfig& config() const { return config_; }
  const RewardConfig& reward_config() const { return reward_; }

 private:
  EpisodeConfig config_;
  RewardConfig reward_;
  SwimmerState state_;
  Observation observation_;
  int steps_ = 0;
};

}  // namespace tlswim
