#include "tlswim/analysis.hpp"

#include "tlswim/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace tlswim {

Controller deterministic_controller(const nn::GaussianPolicy& policy, double rate_cap) {
  return [&policy, rate_cap](const Observation& obs) {
    const Eigen::Vector2d mean = policy.forward(obs).mean;
    return clamp_action({mean[0], mean[1]}, rate_cap);
  };
}

Controller zero_controller() {
  return [](const Observation&) { return JointRates{}; };
}

Rollout rollout(const Controller& controller, const SwimmerState& start, const EpisodeConfig& env,
                int steps) {
  if (steps < 0) throw InvalidArgumentError("rollout length must be non-negative");
  env.validate();
  const RewardConfig reward = RewardConfig::vfs();
  Rollout run;
  run.dt = env.dt;
  run.states.reserve(static_cast<std::size_t>(steps) + 1);
  run.states.push_back(start);
  run.centroids.push_back(centroid(start));
  SwimmerState s = start;
  for (int k = 0; k < steps; ++k) {
    const JointRates a = clamp_action(controller(observe(s, env.theta_target)), env.rate_cap);
    const StepOutcome out = env_step(s, a, env, reward);
    s = out.state;
    run.states.push_back(s);
    run.centroids.push_back(centroid(s));
    run.work.push_back(out.work);
    run.actions.push_back(out.applied_rates);
  }
  return run;
}

SmoothedPath smooth_path(std::span<const Vec2> raw, int half_window) {
  if (half_window < 0) throw InvalidArgumentError("smoothing half-window must be non-negative");
  const std::size_t w = 2 * static_cast<std::size_t>(half_window) + 1;
  if (raw.size() <= w - 1)
    throw InvalidArgumentError("trajectory too short for the smoothing window");
  SmoothedPath out;
  out.half_window = half_window;
  const std::size_t n = raw.size() - (w - 1);
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 acc;
    for (std::size_t j = i; j < i + w; ++j) acc = acc + raw[j];
    out.points.push_back(acc * (1.0 / static_cast<double>(w)));
  }
  return out;
}

std::vector<std::optional<double>> slope_angle(const SmoothedPath& path, double theta_target) {
  if (path.points.size() < 2) throw InvalidArgumentError("slope needs at least two points");
  std::vector<std::optional<double>> out;
  out.reserve(path.points.size() - 1);
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i) {
    const Vec2 d = path.points[i + 1] - path.points[i];
    if (d.x == 0.0 && d.y == 0.0) {
      out.emplace_back();
    } else {
      out.emplace_back(wrap_angle(std::atan2(d.y, d.x) - theta_target));
    }
  }
  return out;
}

StageLabels classify_stages(std::span<const std::optional<double>> theta_s, double threshold) {
  StageLabels out;
  out.labels.reserve(theta_s.size());
  for (const auto& t : theta_s)
    out.labels.push_back(t && std::abs(*t) <= threshold ? Stage::translation : Stage::steering);
  std::size_t b = out.labels.size();
  while (b > 0 && out.labels[b - 1] == Stage::translation) --b;
  if (b < out.labels.size()) out.boundary = b;
  return out;
}

namespace {

struct StageView {
  std::vector<std::optional<double>> theta_s;
  StageLabels stages;
  SmoothedPath path;
};

StageView stage_view(const Rollout& run, double theta_target, int half_window, double threshold) {
  StageView v;
  v.path = smooth_path(run.centroids, half_window);
  v.theta_s = slope_angle(v.path, theta_target);
  v.stages = classify_stages(v.theta_s, threshold);
  return v;
}

double mean_abs_translation(const StageView& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.theta_s.size(); ++i) {
    if (v.stages.labels[i] != Stage::translation) continue;
    sum += std::abs(*v.theta_s[i]);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

TranslationMetrics translation_metrics(const Rollout& run, double theta_target, double gamma,
                                       int half_window, double threshold) {
  const StageView v = stage_view(run, theta_target, half_window, threshold);
  if (!v.stages.boundary) throw InvalidArgumentError("trajectory never reaches a translation stage");
  const std::size_t b = *v.stages.boundary;
  const std::size_t e = v.path.points.size() - 1;  // slope i joins points i and i + 1
  if (e <= b) throw InvalidArgumentError("translation stage is empty");

  TranslationMetrics m;
  m.boundary = b;
  m.points = e - b + 1;
  const double duration = static_cast<double>(e - b) * run.dt;
  m.speed = (v.path.points[e] - v.path.points[b]).dot(Vec2::polar(theta_target)) / duration;

  // Smoothed point i is centred on raw state i + h, so steps [b + h, e + h)
  // span the same interval.
  const auto h = static_cast<std::size_t>(half_window);
  double work = 0.0;
  for (std::size_t k = b + h; k < e + h; ++k) work += run.work[k];
  m.mean_power = work / duration;
  m.efficiency = m.mean_power > 0.0 ? gamma * m.speed * m.speed / m.mean_power : 0.0;
  double sum = 0.0;
  for (std::size_t i = b; i < e; ++i) sum += std::abs(*v.theta_s[i]);
  m.mean_abs_theta_s = sum / static_cast<double>(e - b);
  return m;
}

TrialResult judge_trial(const Rollout& run, double theta_target, int half_window,
                        double threshold) {
  const StageView v = stage_view(run, theta_target, half_window, threshold);
  TrialResult r;
  r.boundary = v.stages.boundary;
  r.mean_abs_theta_s = mean_abs_translation(v);
  r.success = r.boundary.has_value() && r.mean_abs_theta_s < threshold;
  return r;
}

SuccessReport success_rate(const Controller& controller, const EpisodeConfig& env,
                           const SuccessConfig& config, std::uint64_t seed, int workers) {
  if (config.trials < 1) throw InvalidArgumentError("success rate needs at least one trial");
  env.validate();
  SuccessReport report;
  report.trials.resize(static_cast<std::size_t>(config.trials));
  auto run_trial = [&](int t) {
    Rng rng = make_rng(seed, Stream::evaluation, static_cast<std::uint64_t>(t));
    EpisodeConfig cfg = env;
    cfg.randomize_init = true;
    const SwimmerState start = initial_state(cfg, rng);
    const Rollout run = rollout(controller, start, cfg, config.steps);
    report.trials[static_cast<std::size_t>(t)] =
        judge_trial(run, cfg.theta_target, config.half_window, config.threshold);
  };

  const int nthreads = std::clamp(workers, 1, config.trials);
  if (nthreads == 1) {
    for (int t = 0; t < config.trials; ++t) run_trial(t);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < nthreads; ++w)
        pool.emplace_back([&, w] {
          try {
            for (int t = w; t < config.trials; t += nthreads) run_trial(t);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  const auto wins = std::count_if(report.trials.begin(), report.trials.end(),
                                  [](const TrialResult& r) { return r.success; });
  report.rate = static_cast<double>(wins) / config.trials;
  return report;
}

int estimate_period(std::span<const double> signal, int min_period) {
  const auto n = static_cast<int>(signal.size());
  if (n < 2 * min_period) return 0;
  double mean = 0.0;
  for (double x : signal) mean += x;
  mean /= n;
  auto corr = [&](int lag) {
    double s = 0.0;
    for (int i = 0; i + lag < n; ++i) s += (signal[i] - mean) * (signal[i + lag] - mean);
    return s / (n - lag);
  };
  const double c0 = corr(0);
  if (!(c0 > 0.0)) return 0;
  int lag = 1;
  while (lag <= n / 2 && corr(lag) > 0.0) ++lag;
  if (lag > n / 2) return 0;
  int best = 0;
  double best_c = 0.0;
  for (int l = std::max(lag, min_period); l <= n / 2; ++l) {
    const double c = corr(l);
    if (c > best_c) {
      best_c = c;
      best = l;
    } else if (best && c < 0.0) {
      break;  // past the first positive lobe
    }
  }
  return best_c > 0.5 * c0 ? best : 0;
}

StrokeLoop stroke_loop(const Rollout& run, std::size_t first) {
  if (first >= run.states.size()) throw InvalidArgumentError("stroke window is empty");
  std::vector<double> a1, a2;
  for (std::size_t i = first; i < run.states.size(); ++i) {
    a1.push_back(run.states[i].alpha1());
    a2.push_back(run.states[i].alpha2());
  }
  const int p1 = estimate_period(a1);
  const int p2 = estimate_period(a2);
  const int period = p1 ? p1 : p2;
  if (period == 0) throw InvalidArgumentError("no periodic stroke found");

  StrokeLoop loop;
  loop.period_steps = period;
  const std::size_t end = a1.size();
  const std::size_t begin = end - static_cast<std::size_t>(period) - 1;
  double twice_area = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    loop.points.push_back({a1[i], a2[i]});
    const std::size_t j = i + 1 < end ? i + 1 : begin;
    twice_area += a1[i] * a2[j] - a1[j] * a2[i];
  }
  loop.area = 0.5 * std::abs(twice_area);
  return loop;
}

SwimmerState straight_start(double theta2, Vec2 x1) { return {x1, {theta2, theta2, theta2}}; }

PolicyEvaluation evaluate_policy(const Controller& controller, const EpisodeConfig& env,
                                 const SuccessConfig& config,
                                 std::span<const double> start_headings, std::uint64_t seed,
                                 int workers) {
  PolicyEvaluation ev;
  ev.success = success_rate(controller, env, config, seed, workers);
  for (double h : start_headings) {
    StartEvaluation se;
    se.theta2 = h;
    se.run = rollout(controller, straight_start(h, env.x1), env, config.steps);
    try {
      se.metrics = translation_metrics(se.run, env.theta_target, env.gamma, config.half_window,
                                       config.threshold);
      ev.mean_speed += se.metrics->speed;
      ev.mean_efficiency += se.metrics->efficiency;
      ++ev.measured;
    } catch (const InvalidArgumentError&) {
    }
    ev.starts.push_back(std::move(se));
  }
  if (ev.measured) {
    ev.mean_speed /= ev.measured;
    ev.mean_efficiency /= ev.measured;
  }
  return ev;
}

}  // namespace tlswim
