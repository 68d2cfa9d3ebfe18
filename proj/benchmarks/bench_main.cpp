#include "tlswim/dynamics.hpp"
#include "tlswim/network.hpp"
#include "tlswim/ppo.hpp"

#include <benchmark/benchmark.h>

using namespace tlswim;

namespace {

void BM_BodyRates(benchmark::State& st) {
  const SwimmerState s = SwimmerState::from_joints({1.0, 0.0}, 0.3, 0.8, -0.5);
  for (auto _ : st) benchmark::DoNotOptimize(body_rates(s, {0.7, -0.4}));
}
BENCHMARK(BM_BodyRates);

void BM_IntegrateStep(benchmark::State& st) {
  SwimmerState s = SwimmerState::from_joints({1.0, 0.0}, 0.3, 0.8, -0.5);
  IntegratorOptions opt;
  opt.substeps = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(integrate_step(s, {0.7, -0.4}, 0.1, opt));
}
BENCHMARK(BM_IntegrateStep)->Arg(4)->Arg(16);

void BM_ActorForward(benchmark::State& st) {
  Rng rng(1);
  const auto policy = nn::GaussianPolicy::create({64, 64}, rng);
  const Observation o{0.5, 0.8, 0.2, -0.3};
  for (auto _ : st) benchmark::DoNotOptimize(policy.forward(o));
}
BENCHMARK(BM_ActorForward);

void BM_CollectRollouts(benchmark::State& st) {
  TrainConfig tc;
  Rng rng(1);
  const auto policy = nn::GaussianPolicy::create(tc.hidden, rng);
  long long first = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        collect_rollouts(policy, EpisodeConfig{}, RewardConfig::eas(), 1, 7, first++));
  }
  st.SetItemsProcessed(st.iterations() * EpisodeConfig{}.steps);
}
BENCHMARK(BM_CollectRollouts)->Unit(benchmark::kMillisecond);

void BM_PpoUpdate(benchmark::State& st) {
  TrainConfig tc;
  const Learner fresh = Learner::create(tc, 3);
  const TrajectoryBuffer buffer =
      collect_rollouts(fresh.policy, EpisodeConfig{}, RewardConfig::eas(), tc.episodes_per_update, 3);
  for (auto _ : st) {
    st.PauseTiming();
    Learner l = fresh;
    Rng shuffle(5);
    st.ResumeTiming();
    benchmark::DoNotOptimize(update(l, buffer, tc, shuffle));
  }
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
