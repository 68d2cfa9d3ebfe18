#include "tlswim/environment.hpp"

#include "tlswim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tlswim {

std::string to_string(RewardMode mode) { return mode == RewardMode::vfs ? "VFS" : "EAS"; }

RewardMode reward_mode_from_string(const std::string& name) {
  if (name == "VFS" || name == "vfs") return RewardMode::vfs;
  if (name == "EAS" || name == "eas") return RewardMode::eas;
  throw InvalidArgumentError("unknown reward mode '" + name + "' (expected VFS or EAS)");
}

void RewardConfig::validate() const {
  if (!(b > 0.0)) throw InvalidArgumentError("reward scale b must be positive");
  if (!(c >= 0.0)) throw InvalidArgumentError("energy penalty c must be non-negative");
  if (mode == RewardMode::vfs && c != 0.0)
    throw InvalidArgumentError("VFS reward requires c = 0");
}

void EpisodeConfig::validate() const {
  if (steps < 1) throw InvalidArgumentError("episode length N_s must be at least 1");
  if (!(dt > 0.0)) throw InvalidArgumentError("dt must be positive");
  if (substeps < 1) throw InvalidArgumentError("substeps must be at least 1");
  if (!(rate_cap > 0.0)) throw InvalidArgumentError("rate cap must be positive");
  if (!(gamma > 0.0)) throw InvalidArgumentError("drag ratio must be positive");
}

Observation observe(const SwimmerState& state, double theta_target) {
  const double d = state.theta[1] - theta_target;
  return {std::cos(d), std::sin(d), state.alpha1(), state.alpha2()};
}

SwimmerState initial_state(const EpisodeConfig& config, Rng& rng) {
  if (!config.randomize_init) return {config.x1, config.fixed_theta};
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> joint(-kJointLimit, kJointLimit);
  const double theta2 = heading(rng);
  const double a1 = joint(rng);
  const double a2 = joint(rng);
  return SwimmerState::from_joints(config.x1, theta2, a1, a2);
}

ResetResult reset(const EpisodeConfig& config, Rng& rng) {
  const SwimmerState s = initial_state(config, rng);
  return {s, observe(s, config.theta_target)};
}

JointRates clamp_action(const JointRates& action, double cap) {
  return {std::clamp(action.alpha1_dot, -cap, cap), std::clamp(action.alpha2_dot, -cap, cap)};
}

double step_reward(const Vec2& displacement, double work, double theta_target,
                   const RewardConfig& reward) {
  const double along = displacement.dot(Vec2::polar(theta_target));
  double r = reward.b * along;
  if (reward.mode == RewardMode::eas) r -= reward.c * work;
  return r;
}

StepOutcome env_step(const SwimmerState& state, const JointRates& action,
                     const EpisodeConfig& config, const RewardConfig& reward) {
  const double cap = config.rate_cap * (1.0 + 1e-12);
  if (std::abs(action.alpha1_dot) > cap || std::abs(action.alpha2_dot) > cap)
    throw InvalidArgumentError("action exceeds the joint-rate cap");
  const StepResult r = integrate_step(state, action, config.dt, config.integrator());
  StepOutcome out;
  out.state = r.state;
  out.observation = observe(r.state, config.theta_target);
  out.work = r.work;
  out.displacement = centroid(r.state) - centroid(state);
  out.reward = step_reward(out.displacement, r.work, config.theta_target, reward);
  out.applied_rates = r.applied_rates;
  return out;
}

SwimmerEnv::SwimmerEnv(EpisodeConfig config, RewardConfig reward)
    : config_(std::move(config)), reward_(reward) {
  config_.validate();
  reward_.validate();
  state_ = {config_.x1, config_.fixed_theta};
  observation_ = observe(state_, config_.theta_target);
}

const Observation& SwimmerEnv::reset(Rng& rng) {
  return reset_to(initial_state(config_, rng));
}

const Observation& SwimmerEnv::reset_to(const SwimmerState& state) {
  state_ = state;
  observation_ = observe(state_, config_.theta_target);
  steps_ = 0;
  return observation_;
}

StepOutcome SwimmerEnv::step(const JointRates& action) {
  StepOutcome out = env_step(state_, action, config_, reward_);
  state_ = out.state;
  observation_ = out.observation;
  ++steps_;
  return out;
}

}  // namespace tlswim
