#include "tlswim/ppo.hpp"

#include "tlswim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace tlswim {
namespace {

struct EpisodeRecord {
  TrajectoryBuffer part;
};

void run_episode(const nn::GaussianPolicy& policy, const EpisodeConfig& env_cfg,
                 const RewardConfig& reward, std::uint64_t seed, long long episode_index,
                 TrajectoryBuffer& out) {
  Rng rng = make_rng(seed, Stream::rollout, static_cast<std::uint64_t>(episode_index));
  SwimmerEnv env(env_cfg, reward);
  env.reset(rng);
  const std::size_t n = static_cast<std::size_t>(env_cfg.steps);
  out.states.reserve(n);
  out.observations.reserve(n);
  out.actions.reserve(n);
  out.rewards.reserve(n);
  out.log_probs.reserve(n);
  out.start_centroids.push_back(centroid(env.state()));
  double total = 0.0;
  while (!env.done()) {
    const Observation obs = env.observation();
    const auto head = policy.forward(obs);
    const nn::ActionSample sample = nn::sample_action(head.mean, head.std, rng, env_cfg.rate_cap);
    out.states.push_back(env.state());
    const StepOutcome step = env.step(sample.action);
    out.observations.push_back(obs);
    out.actions.push_back({sample.raw[0], sample.raw[1]});
    out.rewards.push_back(step.reward);
    out.log_probs.push_back(sample.log_prob);
    total += step.reward;
  }
  out.end_centroids.push_back(centroid(env.state()));
  out.episode_rewards.push_back(total);
}

template <typename T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const Eigen::Index> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

void TrainConfig::validate() const {
  if (episodes < 1) throw InvalidArgumentError("episodes must be at least 1");
  if (episodes_per_update < 1) throw InvalidArgumentError("episodes_per_update must be at least 1");
  if (!(discount >= 0.0 && discount <= 1.0)) throw InvalidArgumentError("discount must lie in [0, 1]");
  if (!(clip > 0.0)) throw InvalidArgumentError("clip must be positive");
  if (!(entropy_weight >= 0.0)) throw InvalidArgumentError("entropy weight must be non-negative");
  if (epochs < 0) throw InvalidArgumentError("epochs must be non-negative");
  if (minibatch < 1) throw InvalidArgumentError("minibatch must be at least 1");
  if (!(learning_rate > 0.0)) throw InvalidArgumentError("learning rate must be positive");
  if (workers < 1) throw InvalidArgumentError("workers must be at least 1");
  for (int w : hidden)
    if (w < 1) throw InvalidArgumentError("hidden widths must be at least 1");
}

void TrajectoryBuffer::validate() const {
  const std::size_t n = rewards.size();
  if (states.size() != n || observations.size() != n || actions.size() != n ||
      log_probs.size() != n)
    throw InvalidArgumentError("trajectory buffer lists differ in length");
  if (episode_starts.empty() || episode_starts.front() != 0 || episode_starts.back() != n)
    throw InvalidArgumentError("episode boundaries do not cover the buffer");
  for (std::size_t i = 1; i < episode_starts.size(); ++i)
    if (episode_starts[i] <= episode_starts[i - 1])
      throw InvalidArgumentError("episode boundaries are not increasing");
  if (episode_starts.size() != episode_rewards.size() + 1)
    throw InvalidArgumentError("episode boundary count does not match episode count");
}

TrajectoryBuffer collect_rollouts(const nn::GaussianPolicy& policy, const EpisodeConfig& env,
                                  const RewardConfig& reward, int episodes, std::uint64_t seed,
                                  long long first_episode, int workers) {
  if (episodes < 1) throw InvalidArgumentError("collect_rollouts needs at least one episode");
  env.validate();
  reward.validate();
  std::vector<TrajectoryBuffer> parts(static_cast<std::size_t>(episodes));
  const int nthreads = std::clamp(workers, 1, episodes);
  if (nthreads == 1) {
    for (int e = 0; e < episodes; ++e)
      run_episode(policy, env, reward, seed, first_episode + e, parts[static_cast<std::size_t>(e)]);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
    {
      std::vector<std::jthread> pool;
      for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (int e = t; e < episodes; e += nthreads)
              run_episode(policy, env, reward, seed, first_episode + e,
                          parts[static_cast<std::size_t>(e)]);
          } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
          }
        });
      }
    }
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  TrajectoryBuffer buf;
  buf.episode_starts.push_back(0);
  for (const auto& p : parts) {
    append(buf.states, p.states);
    append(buf.observations, p.observations);
    append(buf.actions, p.actions);
    append(buf.rewards, p.rewards);
    append(buf.log_probs, p.log_probs);
    append(buf.episode_rewards, p.episode_rewards);
    append(buf.start_centroids, p.start_centroids);
    append(buf.end_centroids, p.end_centroids);
    buf.episode_starts.push_back(buf.rewards.size());
  }
  return buf;
}

std::vector<double> reward_to_go(std::span<const double> rewards,
                                 std::span<const std::size_t> episode_starts, double discount) {
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t e = 0; e + 1 < episode_starts.size(); ++e) {
    const std::size_t begin = episode_starts[e], end = episode_starts[e + 1];
    if (begin > end || end > rewards.size()) throw InvalidArgumentError("invalid episode boundaries");
    double acc = 0.0;
    for (std::size_t k = end; k-- > begin;) {
      acc = rewards[k] + discount * acc;
      out[k] = acc;
    }
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const double> values,
                               bool normalize) {
  if (returns.size() != values.size())
    throw InvalidArgumentError("returns and values differ in length");
  std::vector<double> a(returns.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = returns[i] - values[i];
  if (!normalize || a.empty()) return a;
  const double n = static_cast<double>(a.size());
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double var = 0.0;
  for (double& x : a) {
    x -= mean;
    var += x * x;
  }
  var /= n;
  if (var > 0.0) {
    const double inv = 1.0 / std::sqrt(var);
    for (double& x : a) x *= inv;
  }
  return a;
}

PpoBatch make_batch(const TrajectoryBuffer& buffer, const nn::ValueFunction& critic,
                    const TrainConfig& config) {
  buffer.validate();
  const auto n = static_cast<Eigen::Index>(buffer.size());
  PpoBatch b;
  b.observations = nn::observations_to_matrix(buffer.observations);
  b.actions.resize(nn::kActionWidth, n);
  b.old_log_probs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = buffer.actions[static_cast<std::size_t>(i)];
    b.actions(0, i) = a[0];
    b.actions(1, i) = a[1];
    b.old_log_probs[i] = buffer.log_probs[static_cast<std::size_t>(i)];
  }
  const std::vector<double> returns =
      reward_to_go(buffer.rewards, buffer.episode_starts, config.discount);
  const Eigen::VectorXd v = critic.values(b.observations);
  const std::vector<double> values(v.data(), v.data() + v.size());
  const std::vector<double> adv = advantages(returns, values, config.normalize_advantages);
  b.returns = Eigen::Map<const Eigen::VectorXd>(returns.data(), n);
  b.advantages = Eigen::Map<const Eigen::VectorXd>(adv.data(), n);
  return b;
}

PpoLosses ppo_losses(const PpoBatch& batch, const nn::GaussianPolicy& policy,
                     const nn::ValueFunction& critic, const TrainConfig& config,
                     std::span<const Eigen::Index> indices, Eigen::VectorXd* actor_grad,
                     Eigen::VectorXd* critic_grad) {
  std::vector<Eigen::Index> all;
  if (indices.empty()) {
    all.resize(static_cast<std::size_t>(batch.size()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    indices = all;
  }
  const auto n = static_cast<Eigen::Index>(indices.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  const Eigen::MatrixXd obs = gather_columns(batch.observations, indices);
  const Eigen::MatrixXd act = gather_columns(batch.actions, indices);
  const Eigen::VectorXd old_lp = gather(batch.old_log_probs, indices);
  const Eigen::VectorXd adv = gather(batch.advantages, indices);
  const Eigen::VectorXd ret = gather(batch.returns, indices);

  nn::Mlp::Tape actor_tape;
  const Eigen::MatrixXd mean =
      policy.net.forward(policy.net_params(), obs, actor_grad ? &actor_tape : nullptr);
  const Eigen::Vector2d log_std = policy.log_std();
  const Eigen::Vector2d inv_std = (-log_std).array().exp();

  PpoLosses L;
  L.entropy = nn::gaussian_entropy(log_std);
  L.entropy_term = config.entropy_weight * L.entropy;

  Eigen::MatrixXd d_mean(nn::kActionWidth, n);
  Eigen::Vector2d d_log_std = Eigen::Vector2d::Zero();
  const double lo = 1.0 - config.clip, hi = 1.0 + config.clip;
  for (Eigen::Index i = 0; i < n; ++i) {
    double lp = 0.0;
    Eigen::Vector2d z;
    for (int j = 0; j < nn::kActionWidth; ++j) {
      z[j] = (act(j, i) - mean(j, i)) * inv_std[j];
      lp += -0.5 * z[j] * z[j] - log_std[j];
    }
    lp -= nn::kActionWidth * 0.5 * std::log(2.0 * std::numbers::pi);
    const double r = std::exp(lp - old_lp[i]);
    const double rc = std::clamp(r, lo, hi);
    const double unclipped = r * adv[i], clipped = rc * adv[i];
    L.clip_objective += std::min(unclipped, clipped) * inv_n;
    L.mean_ratio += r * inv_n;
    L.max_ratio_deviation = std::max(L.max_ratio_deviation, std::abs(r - 1.0));
    if (r < lo || r > hi) L.clip_fraction += inv_n;

    // d(-L_clip)/d(log pi) for this sample.
    const double d_lp = unclipped <= clipped ? -adv[i] * r * inv_n : 0.0;
    for (int j = 0; j < nn::kActionWidth; ++j) {
      d_mean(j, i) = d_lp * z[j] * inv_std[j];
      d_log_std[j] += d_lp * (z[j] * z[j] - 1.0);
    }
  }

  nn::Mlp::Tape critic_tape;
  const Eigen::MatrixXd v = critic.net.forward(
      {critic.params.data(), critic.net.parameter_count()}, obs, critic_grad ? &critic_tape : nullptr);
  Eigen::MatrixXd d_v(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double err = ret[i] - v(0, i);
    L.value_loss += 0.5 * err * err * inv_n;
    d_v(0, i) = -err * inv_n;
  }

  L.total = -L.clip_objective + L.value_loss - L.entropy_term;
  if (!std::isfinite(L.total) || !std::isfinite(L.mean_ratio))
    throw DivergedUpdateError("PPO loss is not finite");

  if (actor_grad) {
    actor_grad->setZero(policy.params.size());
    policy.net.backward(policy.net_params(), actor_tape, d_mean,
                        {actor_grad->data(), policy.net.parameter_count()});
    // -chi * S contributes -chi to every log_std gradient.
    actor_grad->tail<nn::kActionWidth>() = d_log_std.array() - config.entropy_weight;
  }
  if (critic_grad) {
    critic_grad->setZero(critic.params.size());
    critic.net.backward({critic.params.data(), critic.net.parameter_count()}, critic_tape, d_v,
                        {critic_grad->data(), critic.net.parameter_count()});
  }
  return L;
}

Learner Learner::create(const TrainConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::init);
  Learner l{nn::GaussianPolicy::create(config.hidden, rng), nn::ValueFunction::create(config.hidden, rng),
            {}, {}};
  l.actor_optimizer = nn::Adam(static_cast<std::size_t>(l.policy.params.size()), config.learning_rate);
  l.critic_optimizer = nn::Adam(static_cast<std::size_t>(l.critic.params.size()), config.learning_rate);
  return l;
}

UpdateDiagnostics update(Learner& learner, const TrajectoryBuffer& buffer,
                         const TrainConfig& config, Rng& shuffle_rng) {
  UpdateDiagnostics diag;
  if (config.epochs == 0) return diag;
  const Learner backup = learner;
  try {
    const PpoBatch batch = make_batch(buffer, learner.critic, config);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(batch.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Eigen::VectorXd g_actor, g_critic;
    const std::size_t mb = static_cast<std::size_t>(config.minibatch);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      EpochDiagnostics ed;
      int count = 0;
      for (std::size_t start = 0; start < order.size(); start += mb) {
        const std::size_t len = std::min(mb, order.size() - start);
        const std::span<const Eigen::Index> idx(order.data() + start, len);
        const PpoLosses L = ppo_losses(batch, learner.policy, learner.critic, config, idx,
                                       &g_actor, &g_critic);
        if (!all_finite(g_actor) || !all_finite(g_critic))
          throw DivergedUpdateError("PPO gradient is not finite");
        learner.actor_optimizer.step({learner.policy.params.data(),
                                      static_cast<std::size_t>(learner.policy.params.size())},
                                     {g_actor.data(), static_cast<std::size_t>(g_actor.size())});
        learner.policy.clamp_log_std();
        learner.critic_optimizer.step({learner.critic.params.data(),
                                       static_cast<std::size_t>(learner.critic.params.size())},
                                      {g_critic.data(), static_cast<std::size_t>(g_critic.size())});
        ed.losses.clip_objective += L.clip_objective;
        ed.losses.value_loss += L.value_loss;
        ed.losses.entropy_term += L.entropy_term;
        ed.losses.total += L.total;
        ed.losses.mean_ratio += L.mean_ratio;
        ed.losses.clip_fraction += L.clip_fraction;
        ed.losses.entropy += L.entropy;
        ed.losses.max_ratio_deviation = std::max(ed.losses.max_ratio_deviation, L.max_ratio_deviation);
        ++count;
      }
      const double inv = 1.0 / count;
      ed.losses.clip_objective *= inv;
      ed.losses.value_loss *= inv;
      ed.losses.entropy_term *= inv;
      ed.losses.total *= inv;
      ed.losses.mean_ratio *= inv;
      ed.losses.clip_fraction *= inv;
      ed.losses.entropy *= inv;
      diag.epochs.push_back(ed);
    }
    if (!all_finite(learner.policy.params) || !all_finite(learner.critic.params))
      throw DivergedUpdateError("PPO update produced non-finite parameters");
  } catch (const DivergedUpdateError&) {
    learner = backup;
    throw;
  }
  return diag;
}

TrainResult train(const TrainConfig& config, const EpisodeConfig& env, const RewardConfig& reward,
                  std::uint64_t seed, const TrainCallbacks& callbacks, const Checkpoint* resume) {
  config.validate();
  env.validate();
  reward.validate();

  TrainResult result;
  Checkpoint& ckpt = result.checkpoint;
  if (resume) {
    if (resume->seed != seed)
      throw CheckpointError("resume checkpoint was trained with a different seed");
    ckpt = *resume;
  } else {
    Learner l = Learner::create(config, seed);
    ckpt.policy = std::move(l.policy);
    ckpt.critic = std::move(l.critic);
    ckpt.actor_optimizer = std::move(l.actor_optimizer);
    ckpt.critic_optimizer = std::move(l.critic_optimizer);
    ckpt.seed = seed;
  }
  ckpt.strings["reward_mode"] = to_string(reward.mode);

  Learner learner{ckpt.policy, ckpt.critic, ckpt.actor_optimizer, ckpt.critic_optimizer};
  auto sync = [&] {
    ckpt.policy = learner.policy;
    ckpt.critic = learner.critic;
    ckpt.actor_optimizer = learner.actor_optimizer;
    ckpt.critic_optimizer = learner.critic_optimizer;
  };

  while (ckpt.episodes < config.episodes) {
    const int m = static_cast<int>(
        std::min<long long>(config.episodes_per_update, config.episodes - ckpt.episodes));
    const TrajectoryBuffer buffer =
        collect_rollouts(learner.policy, env, reward, m, seed, ckpt.episodes, config.workers);
    for (std::size_t e = 0; e < buffer.episode_rewards.size(); ++e)
      result.curve.push_back({ckpt.episodes + static_cast<long long>(e) + 1, buffer.episode_rewards[e]});

    Rng shuffle = make_rng(seed, Stream::shuffle, static_cast<std::uint64_t>(ckpt.updates));
    const UpdateDiagnostics diag = update(learner, buffer, config, shuffle);
    const long long before = ckpt.episodes;
    ckpt.episodes += m;
    ckpt.updates += 1;
    sync();
    if (callbacks.on_update) callbacks.on_update(ckpt, diag);
    if (callbacks.on_checkpoint && config.checkpoint_every > 0 &&
        ckpt.episodes / config.checkpoint_every > before / config.checkpoint_every &&
        ckpt.episodes < config.episodes)
      callbacks.on_checkpoint(ckpt);
  }
  if (callbacks.on_checkpoint) callbacks.on_checkpoint(ckpt);
  return result;
}

}  // namespace tlswim
