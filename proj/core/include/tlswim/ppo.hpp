#pragma once

// Clipped-surrogate PPO with an actor-critic pair, plain reward-to-go
// advantages (no GAE) and K epochs of shuffled minibatch Adam updates.

#include "tlswim/checkpoint.hpp"
#include "tlswim/environment.hpp"
#include "tlswim/network.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tlswim {

struct TrainConfig {
  long long episodes = 100000;   // N_E
  int episodes_per_update = 40;  // M
  double discount = 0.99;        // Gamma
  double clip = 0.2;             // epsilon
  double entropy_weight = 0.01;  // chi
  int epochs = 10;               // K
  int minibatch = 256;
  double learning_rate = 3e-4;
  std::vector<int> hidden{64, 64};
  bool normalize_advantages = true;
  int checkpoint_every = 1000;  // episodes
  int workers = 1;

  void validate() const;
};

struct TrajectoryBuffer {
  std::vector<SwimmerState> states;            // S_k
  std::vector<Observation> observations;       // O_k, the input the action was drawn from
  std::vector<std::array<double, 2>> actions;  // raw (unclamped) A_k
  std::vector<double> rewards;                 // R_k
  std::vector<double> log_probs;               // log pi_old(A_k | O_k)
  std::vector<std::size_t> episode_starts;     // M + 1 entries, last == size()
  std::vector<double> episode_rewards;         // undiscounted per-episode sums
  std::vector<Vec2> start_centroids;
  std::vector<Vec2> end_centroids;

  std::size_t size() const { return rewards.size(); }
  std::size_t episodes() const { return episode_rewards.size(); }
  // Throws InvalidArgumentError if list lengths or boundaries are inconsistent.
  void validate() const;
};

// Runs `episodes` episodes with the stochastic policy. Episode e draws from
// its own stream derived from (seed, first_episode + e), so the buffer does
// not depend on the number of workers.
TrajectoryBuffer collect_rollouts(const nn::GaussianPolicy& policy, const EpisodeConfig& env,
                                  const RewardConfig& reward, int episodes, std::uint64_t seed,
                                  long long first_episode = 0, int workers = 1);

// Discounted suffix sums, never crossing an episode boundary.
std::vector<double> reward_to_go(std::span<const double> rewards,
                                 std::span<const std::size_t> episode_starts, double discount);

// returns - values, optionally normalized to zero mean and unit variance.
std::vector<double> advantages(std::span<const double> returns, std::span<const double> values,
                               bool normalize);

struct PpoLosses {
  double clip_objective = 0.0;  // L_clip
  double value_loss = 0.0;      // L_er
  double entropy_term = 0.0;    // L_s = chi * S
  double total = 0.0;           // -L_clip + L_er - L_s
  double mean_ratio = 0.0;
  double max_ratio_deviation = 0.0;
  double clip_fraction = 0.0;
  double entropy = 0.0;
};

// Prepared training batch: buffer contents plus returns and advantages.
struct PpoBatch {
  Eigen::MatrixXd observations;  // 4 x N
  Eigen::MatrixXd actions;       // 2 x N
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd returns;
  Eigen::VectorXd advantages;

  Eigen::Index size() const { return returns.size(); }
};

PpoBatch make_batch(const TrajectoryBuffer& buffer, const nn::ValueFunction& critic,
                    const TrainConfig& config);

// Evaluates the losses over the given sample indices (all samples if empty).
// When gradients are requested they are the gradients of `total` with respect
// to the actor parameters (including log_std) and the critic parameters.
PpoLosses ppo_losses(const PpoBatch& batch, const nn::GaussianPolicy& policy,
                     const nn::ValueFunction& critic, const TrainConfig& config,
                     std::span<const Eigen::Index> indices = {},
                     Eigen::VectorXd* actor_grad = nullptr,
                     Eigen::VectorXd* critic_grad = nullptr);

struct EpochDiagnostics {
  PpoLosses losses;  // averaged over minibatches
};

struct UpdateDiagnostics {
  std::vector<EpochDiagnostics> epochs;
};

struct Learner {
  nn::GaussianPolicy policy;
  nn::ValueFunction critic;
  nn::Adam actor_optimizer;
  nn::Adam critic_optimizer;

  static Learner create(const TrainConfig& config, std::uint64_t seed);
};

// K epochs over shuffled minibatches. On a non-finite loss the learner is
// restored to its pre-update state and DivergedUpdateError is thrown.
UpdateDiagnostics update(Learner& learner, const TrajectoryBuffer& buffer,
                         const TrainConfig& config, Rng& shuffle_rng);

struct LearningCurvePoint {
  long long episode = 0;  // 1-based
  double reward = 0.0;
};

struct TrainCallbacks {
  // Called after each update with the running state.
  std::function<void(const Checkpoint&, const UpdateDiagnostics&)> on_update;
  // Called every config.checkpoint_every episodes and once at the end.
  std::function<void(const Checkpoint&)> on_checkpoint;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LearningCurvePoint> curve;
};

// Runs config.episodes episodes, updating after every M. Resumes from
// `resume` when given; the learning curve then covers only new episodes.
TrainResult train(const TrainConfig& config, const EpisodeConfig& env, const RewardConfig& reward,
                  std::uint64_t seed, const TrainCallbacks& callbacks = {},
                  const Checkpoint* resume = nullptr);

}  // namespace tlswim
