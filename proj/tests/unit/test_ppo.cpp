#include "doctest.h"

#include "oracles.hpp"

#include "tlswim/error.hpp"
#include "tlswim/ppo.hpp"

#include <cmath>
#include <limits>
#include <numeric>

using namespace tlswim;

namespace {

// One-step episodes with a constant observation and reward -(a - 0.5)^2 per
// action component: the optimal mean action is (0.5, 0.5). Without an entropy
// bonus the policy should collapse onto it.
TrajectoryBuffer bandit_buffer(const nn::GaussianPolicy& policy, Rng& rng, int n) {
  TrajectoryBuffer b;
  const Observation obs{1.0, 0.0, 0.0, 0.0};
  const auto head = policy.forward(obs);
  b.episode_starts.push_back(0);
  for (int i = 0; i < n; ++i) {
    const nn::ActionSample s = nn::sample_action(head.mean, head.std, rng, 1e9);
    const double r = -(std::pow(s.raw[0] - 0.5, 2) + std::pow(s.raw[1] - 0.5, 2));
    b.states.push_back({});
    b.observations.push_back(obs);
    b.actions.push_back({s.raw[0], s.raw[1]});
    b.rewards.push_back(r);
    b.log_probs.push_back(s.log_prob);
    b.episode_rewards.push_back(r);
    b.start_centroids.push_back({});
    b.end_centroids.push_back({});
    b.episode_starts.push_back(b.rewards.size());
  }
  return b;
}

TrainConfig small_config() {
  TrainConfig c;
  c.hidden = {8, 8};
  c.episodes = 12;
  c.episodes_per_update = 4;
  c.minibatch = 16;
  c.epochs = 3;
  return c;
}

EpisodeConfig short_episodes(int steps = 10) {
  EpisodeConfig e;
  e.steps = steps;
  return e;
}

}  // namespace

TEST_CASE("reward to go") {
  SUBCASE("worked example") {
    const std::vector<double> r{1.0, 2.0, 3.0};
    const std::vector<std::size_t> starts{0, 3};
    const auto g = reward_to_go(r, starts, 0.5);
    CHECK(g[0] == doctest::Approx(1.0 + 0.5 * 2.0 + 0.25 * 3.0));
    CHECK(g[1] == doctest::Approx(2.0 + 0.5 * 3.0));
    CHECK(g[2] == doctest::Approx(3.0));
  }
  SUBCASE("does not cross episode boundaries") {
    const std::vector<double> r{1.0, 1.0, 1.0, 1.0};
    const std::vector<std::size_t> starts{0, 2, 4};
    const auto g = reward_to_go(r, starts, 1.0);
    CHECK(g == std::vector<double>{2.0, 1.0, 2.0, 1.0});
  }
  SUBCASE("matches the quadratic oracle") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> r(600);
    for (double& x : r) x = n(rng);
    const std::vector<std::size_t> starts{0, 1, 200, 201, 450, 600};
    for (double d : {0.0, 0.9, 0.99, 1.0}) {
      const auto fast = reward_to_go(r, starts, d);
      const auto slow = oracle::brute_reward_to_go(r, starts, d);
      for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-12);
    }
  }
}

TEST_CASE("advantages") {
  const std::vector<double> ret{1.0, 2.0, 6.0, -1.0}, val{0.5, 0.5, 0.5, 0.5};
  SUBCASE("raw") {
    const auto a = advantages(ret, val, false);
    CHECK(a == std::vector<double>{0.5, 1.5, 5.5, -1.5});
  }
  SUBCASE("normalized to zero mean and unit population variance") {
    const auto a = advantages(ret, val, true);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / 4.0;
    double var = 0.0;
    for (double x : a) var += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var / 4.0 == doctest::Approx(1.0));
  }
  SUBCASE("constant advantages normalize to zero") {
    const auto a = advantages(std::vector<double>{2.0, 2.0}, std::vector<double>{1.0, 1.0}, true);
    CHECK(a == std::vector<double>{0.0, 0.0});
  }
  CHECK_THROWS_AS(advantages(ret, std::vector<double>{1.0}, false), InvalidArgumentError);
}

TEST_CASE("surrogate losses") {
  const TrainConfig cfg = small_config();
  const Learner learner = Learner::create(cfg, 3);
  const TrajectoryBuffer buf =
      collect_rollouts(learner.policy, short_episodes(), RewardConfig::eas(), 4, 3);
  const PpoBatch batch = make_batch(buf, learner.critic, cfg);

  SUBCASE("ratio is one for the policy that collected the data") {
    const PpoLosses L = ppo_losses(batch, learner.policy, learner.critic, cfg);
    CHECK(L.max_ratio_deviation < 1e-10);
    CHECK(L.mean_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(L.clip_fraction == 0.0);
    // Normalized advantages have zero mean, so the surrogate is zero too.
    CHECK(std::abs(L.clip_objective) < 1e-10);
    CHECK(L.entropy == doctest::Approx(nn::gaussian_entropy(learner.policy.log_std())));
  }
  SUBCASE("clipping caps the gain from a positive advantage") {
    PpoBatch one;
    one.observations = batch.observations.leftCols(1);
    one.actions = batch.actions.leftCols(1);
    one.returns = Eigen::VectorXd::Zero(1);
    one.advantages = Eigen::VectorXd::Constant(1, 2.0);
    one.old_log_probs = batch.old_log_probs.head(1).array() - std::log(1.5);
    TrainConfig c = cfg;
    c.entropy_weight = 0.0;
    const PpoLosses L = ppo_losses(one, learner.policy, learner.critic, c);
    CHECK(L.mean_ratio == doctest::Approx(1.5));
    CHECK(L.clip_objective == doctest::Approx(1.2 * 2.0));
    CHECK(L.clip_fraction == 1.0);
    // Negative advantage: the unclipped term is already the pessimistic one.
    one.advantages[0] = -2.0;
    CHECK(ppo_losses(one, learner.policy, learner.critic, c).clip_objective ==
          doctest::Approx(-1.5 * 2.0));
  }
  SUBCASE("clipped objective never exceeds the unclipped one") {
    nn::GaussianPolicy moved = learner.policy;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& p : moved.params) p += n(rng);
    moved.clamp_log_std();
    const PpoLosses L = ppo_losses(batch, moved, learner.critic, cfg);
    double unclipped = 0.0;
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      const auto head = moved.net.forward(moved.net_params(), Eigen::MatrixXd(batch.observations.col(i)));
      const double lp = nn::gaussian_log_prob(batch.actions.col(i), head.col(0), moved.log_std());
      unclipped += std::exp(lp - batch.old_log_probs[i]) * batch.advantages[i];
    }
    CHECK(L.clip_objective <= unclipped / batch.size() + 1e-12);
  }
  SUBCASE("value loss vanishes when the critic matches the returns") {
    PpoBatch b = batch;
    b.returns = learner.critic.values(b.observations);
    CHECK(ppo_losses(b, learner.policy, learner.critic, cfg).value_loss == 0.0);
  }
  SUBCASE("analytic gradients match finite differences") {
    nn::GaussianPolicy pol = learner.policy;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 0.05);
    for (auto& p : pol.params) p += n(rng);
    nn::ValueFunction critic = learner.critic;
    Eigen::VectorXd ga, gc;
    ppo_losses(batch, pol, critic, cfg, {}, &ga, &gc);
    const double h = 1e-6;
    auto total = [&](const nn::GaussianPolicy& p, const nn::ValueFunction& v) {
      return ppo_losses(batch, p, v, cfg).total;
    };
    double worst = 0.0;
    for (Eigen::Index i = 0; i < pol.params.size(); ++i) {
      nn::GaussianPolicy up = pol, down = pol;
      up.params[i] += h;
      down.params[i] -= h;
      const double fd = (total(up, critic) - total(down, critic)) / (2 * h);
      worst = std::max(worst, std::abs(fd - ga[i]) / std::max({std::abs(fd), std::abs(ga[i]), 1e-3}));
    }
    for (Eigen::Index i = 0; i < critic.params.size(); ++i) {
      nn::ValueFunction up = critic, down = critic;
      up.params[i] += h;
      down.params[i] -= h;
      const double fd = (total(pol, up) - total(pol, down)) / (2 * h);
      worst = std::max(worst, std::abs(fd - gc[i]) / std::max({std::abs(fd), std::abs(gc[i]), 1e-3}));
    }
    CHECK(worst < 1e-5);
  }
  SUBCASE("non-finite losses are reported") {
    PpoBatch b = batch;
    b.advantages[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ppo_losses(b, learner.policy, learner.critic, cfg), DivergedUpdateError);
  }
}

TEST_CASE("updates") {
  TrainConfig cfg = small_config();
  const TrajectoryBuffer buf =
      collect_rollouts(Learner::create(cfg, 5).policy, short_episodes(), RewardConfig::eas(), 4, 5);

  SUBCASE("zero epochs change nothing") {
    cfg.epochs = 0;
    Learner l = Learner::create(cfg, 5);
    const Learner before = l;
    Rng rng(1);
    update(l, buf, cfg, rng);
    CHECK(l.policy.params == before.policy.params);
    CHECK(l.critic.params == before.critic.params);
  }
  SUBCASE("no advantage and no entropy bonus leaves the actor alone") {
    cfg.entropy_weight = 0.0;
    TrajectoryBuffer flat = buf;
    std::fill(flat.rewards.begin(), flat.rewards.end(), 0.0);
    Learner l = Learner::create(cfg, 5);
    const Learner before = l;
    Rng rng(1);
    // Constant returns normalize to zero advantages.
    cfg.normalize_advantages = true;
    l.critic.params.setZero();
    update(l, flat, cfg, rng);
    CHECK(l.policy.params == before.policy.params);
  }
  SUBCASE("diverged update restores the learner") {
    TrajectoryBuffer bad = buf;
    bad.rewards[3] = std::numeric_limits<double>::infinity();
    Learner l = Learner::create(cfg, 5);
    const Learner before = l;
    Rng rng(1);
    CHECK_THROWS_AS(update(l, bad, cfg, rng), DivergedUpdateError);
    CHECK(l.policy.params == before.policy.params);
    CHECK(l.critic.params == before.critic.params);
    CHECK(l.actor_optimizer.steps == 0);
  }
  SUBCASE("diagnostics cover every epoch") {
    Learner l = Learner::create(cfg, 5);
    Rng rng(1);
    const UpdateDiagnostics d = update(l, buf, cfg, rng);
    CHECK(d.epochs.size() == 3);
    // 40 samples in minibatches of 16 -> 3 steps per epoch.
    CHECK(l.actor_optimizer.steps == 9);
  }
}

TEST_CASE("ppo solves a one-dimensional bandit") {
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.minibatch = 64;
  cfg.learning_rate = 1e-3;
  cfg.entropy_weight = 0.0;
  Learner l = Learner::create(cfg, 21);
  Rng data(2);
  for (int u = 0; u < 200; ++u) {
    const TrajectoryBuffer b = bandit_buffer(l.policy, data, 256);
    Rng shuffle(100 + u);
    update(l, b, cfg, shuffle);
  }
  const auto head = l.policy.forward({1.0, 0.0, 0.0, 0.0});
  CHECK(std::abs(head.mean[0] - 0.5) < 0.05);
  CHECK(std::abs(head.mean[1] - 0.5) < 0.05);
}

TEST_CASE("rollout collection") {
  const TrainConfig cfg = small_config();
  const Learner l = Learner::create(cfg, 9);

  SUBCASE("buffer layout for a single short episode") {
    const TrajectoryBuffer b = collect_rollouts(l.policy, short_episodes(3), RewardConfig::eas(), 1, 9);
    CHECK(b.size() == 3);
    CHECK(b.episodes() == 1);
    CHECK(b.episode_starts == std::vector<std::size_t>{0, 3});
    CHECK(b.episode_rewards[0] == doctest::Approx(b.rewards[0] + b.rewards[1] + b.rewards[2]));
    CHECK_NOTHROW(b.validate());
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(b.observations[k] == observe(b.states[k], 0.0));
      const auto head = l.policy.forward(b.observations[k]);
      CHECK(b.log_probs[k] ==
            doctest::Approx(nn::gaussian_log_prob({b.actions[k][0], b.actions[k][1]}, head.mean,
                                                  l.policy.log_std())));
    }
  }
  SUBCASE("worker count does not change the buffer") {
    const auto a = collect_rollouts(l.policy, short_episodes(), RewardConfig::eas(), 7, 9, 0, 1);
    const auto b = collect_rollouts(l.policy, short_episodes(), RewardConfig::eas(), 7, 9, 0, 3);
    CHECK(a.states == b.states);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);
    CHECK(a.log_probs == b.log_probs);
  }
  SUBCASE("episode streams are indexed globally") {
    const auto whole = collect_rollouts(l.policy, short_episodes(), RewardConfig::eas(), 4, 9, 0);
    const auto tail = collect_rollouts(l.policy, short_episodes(), RewardConfig::eas(), 2, 9, 2);
    CHECK(tail.rewards ==
          std::vector<double>(whole.rewards.begin() + 20, whole.rewards.end()));
  }
  SUBCASE("inconsistent buffers are rejected") {
    TrajectoryBuffer b = collect_rollouts(l.policy, short_episodes(3), RewardConfig::eas(), 1, 9);
    b.episode_starts = {0, 2};
    CHECK_THROWS_AS(b.validate(), InvalidArgumentError);
  }
}

TEST_CASE("training runs") {
  const TrainConfig cfg = small_config();
  const EpisodeConfig env = short_episodes();

  SUBCASE("same seed, same result") {
    const TrainResult a = train(cfg, env, RewardConfig::eas(), 4);
    const TrainResult b = train(cfg, env, RewardConfig::eas(), 4);
    REQUIRE(a.curve.size() == 12);
    CHECK(a.curve.front().episode == 1);
    CHECK(a.curve.back().episode == 12);
    for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].reward == b.curve[i].reward);
    CHECK(a.checkpoint.policy.params == b.checkpoint.policy.params);
    CHECK(a.checkpoint.updates == 3);
    CHECK(a.checkpoint.strings.at("reward_mode") == "EAS");
  }
  SUBCASE("resuming continues the same run") {
    const TrainResult whole = train(cfg, env, RewardConfig::vfs(), 4);
    TrainConfig first = cfg;
    first.episodes = 8;
    const TrainResult part = train(first, env, RewardConfig::vfs(), 4);
    const TrainResult rest = train(cfg, env, RewardConfig::vfs(), 4, {}, &part.checkpoint);
    REQUIRE(rest.curve.size() == 4);
    CHECK(rest.curve.front().episode == 9);
    CHECK(rest.curve.back().reward == whole.curve.back().reward);
    CHECK(rest.checkpoint.policy.params == whole.checkpoint.policy.params);
    CHECK_THROWS_AS(train(cfg, env, RewardConfig::vfs(), 5, {}, &part.checkpoint), CheckpointError);
  }
  SUBCASE("workers do not change the result") {
    TrainConfig threaded = cfg;
    threaded.workers = 3;
    const TrainResult a = train(cfg, env, RewardConfig::eas(), 6);
    const TrainResult b = train(threaded, env, RewardConfig::eas(), 6);
    CHECK(a.checkpoint.policy.params == b.checkpoint.policy.params);
  }
  SUBCASE("checkpoint callbacks") {
    TrainConfig c = cfg;
    c.checkpoint_every = 4;
    std::vector<long long> seen;
    int updates = 0;
    TrainCallbacks cb;
    cb.on_checkpoint = [&](const Checkpoint& k) { seen.push_back(k.episodes); };
    cb.on_update = [&](const Checkpoint&, const UpdateDiagnostics&) { ++updates; };
    train(c, env, RewardConfig::eas(), 4, cb);
    CHECK(updates == 3);
    CHECK(seen == std::vector<long long>{4, 8, 12});
  }
  SUBCASE("invalid configuration") {
    TrainConfig c = cfg;
    c.clip = 0.0;
    CHECK_THROWS_AS(train(c, env, RewardConfig::eas(), 1), InvalidArgumentError);
  }
}
