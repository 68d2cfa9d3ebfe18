#include "tlswim/navigation.hpp"

#include "tlswim/error.hpp"

#include <algorithm>
#include <cmath>

namespace tlswim {
namespace {

struct Stepper {
  EpisodeConfig env;
  RewardConfig reward = RewardConfig::vfs();
  Rollout run;
  SwimmerState state;

  Stepper(const EpisodeConfig& cfg, const SwimmerState& start) : env(cfg), state(start) {
    env.validate();
    run.dt = env.dt;
    run.states.push_back(start);
    run.centroids.push_back(centroid(start));
  }

  void step(const Controller& controller, double theta_target) {
    env.theta_target = theta_target;
    const JointRates a = clamp_action(controller(observe(state, theta_target)), env.rate_cap);
    const StepOutcome out = env_step(state, a, env, reward);
    state = out.state;
    run.states.push_back(state);
    run.centroids.push_back(centroid(state));
    run.work.push_back(out.work);
    run.actions.push_back(out.applied_rates);
  }

  Vec2 position() const { return run.centroids.back(); }
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

double retarget(const Vec2& centroid, const Vec2& target, double previous) {
  const Vec2 d = target - centroid;
  if (d.x == 0.0 && d.y == 0.0) return previous;
  return std::atan2(d.y, d.x);
}

void WaypointCourse::validate() const {
  if (points.empty()) throw InvalidArgumentError("a course needs at least one waypoint");
  if (!(threshold > 0.0)) throw InvalidArgumentError("arrival threshold must be positive");
  if (budget_per_waypoint < 1) throw InvalidArgumentError("waypoint budget must be at least 1");
  for (const auto& p : points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InvalidArgumentError("waypoints must be finite");
}

WaypointCourse star_course(Vec2 center, double circumradius, double start_angle) {
  if (!(circumradius > 0.0)) throw InvalidArgumentError("star circumradius must be positive");
  const double pi = std::numbers::pi;
  const double inner = circumradius * std::cos(2 * pi / 5) / std::cos(pi / 5);
  WaypointCourse course;
  for (int i = 0; i < 10; ++i) {
    const double r = i % 2 ? inner : circumradius;
    course.points.push_back(center + r * Vec2::polar(start_angle + i * pi / 5));
  }
  return course;
}

CourseResult trace_course(const Controller& controller, const WaypointCourse& course,
                          const SwimmerState& start, const EpisodeConfig& env) {
  course.validate();
  Stepper stepper(env, start);
  CourseResult result;
  std::size_t index = 0;
  int since_arrival = 0;
  int step = 0;
  double theta_target = retarget(stepper.position(), course.points[0], env.theta_target);
  while (index < course.points.size()) {
    const Vec2 c = stepper.position();
    if ((course.points[index] - c).norm() < course.threshold) {
      result.arrival_steps.push_back(step);
      ++index;
      since_arrival = 0;
      continue;
    }
    if (since_arrival >= course.budget_per_waypoint) {
      result.exhausted_at = index;
      break;
    }
    theta_target = retarget(c, course.points[index], theta_target);
    result.theta_targets.push_back(theta_target);
    stepper.step(controller, theta_target);
    ++since_arrival;
    ++step;
  }
  result.completed = index == course.points.size();
  const std::size_t last = std::min(index, course.points.size() - 1);
  result.final_distance = (course.points[last] - stepper.position()).norm();
  result.run = std::move(stepper.run);
  return result;
}

void MovingTarget::validate() const {
  if (std::abs(orientation.norm() - 1.0) > 1e-9)
    throw InvalidArgumentError("target orientation must be a unit vector");
  if (!(speed >= 0.0)) throw InvalidArgumentError("target speed must be non-negative");
  if (!(diffusivity >= 0.0)) throw InvalidArgumentError("target diffusivity must be non-negative");
  if (!std::isfinite(position.x) || !std::isfinite(position.y))
    throw InvalidArgumentError("target position must be finite");
}

NoiseSource gaussian_noise(Rng& rng) {
  return [&rng] {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double x = normal(rng);
    const double y = normal(rng);
    return Vec2{x, y};
  };
}

MovingTarget advance_target(const MovingTarget& target, double dt, const Vec2& unit_noise) {
  if (!(dt > 0.0)) throw InvalidArgumentError("dt must be positive");
  MovingTarget next = target;
  const double sigma = std::sqrt(2.0 * target.diffusivity * dt);
  next.position = target.position + (target.speed * dt) * target.orientation + sigma * unit_noise;
  return next;
}

MovingTarget advance_target(const MovingTarget& target, double dt, Rng& rng) {
  return advance_target(target, dt, gaussian_noise(rng)());
}

PursuitResult pursue(const Controller& controller, const MovingTarget& target,
                     const SwimmerState& start, const EpisodeConfig& env,
                     const PursuitConfig& config, const NoiseSource& noise) {
  target.validate();
  if (config.budget < 1) throw InvalidArgumentError("pursuit budget must be at least 1");
  if (!(config.capture_threshold > 0.0))
    throw InvalidArgumentError("capture threshold must be positive");

  Stepper stepper(env, start);
  PursuitResult result;
  MovingTarget t = target;
  result.target_path.push_back(t.position);
  result.distance.push_back((t.position - stepper.position()).norm());
  result.initial_distance = result.distance.back();
  double theta_target = retarget(stepper.position(), t.position, env.theta_target);
  for (int k = 1; k <= config.budget; ++k) {
    theta_target = retarget(stepper.position(), t.position, theta_target);
    stepper.step(controller, theta_target);
    t = advance_target(t, env.dt, noise());
    result.target_path.push_back(t.position);
    result.distance.push_back((t.position - stepper.position()).norm());
    if (result.distance.back() < config.capture_threshold) {
      result.captured = true;
      result.capture_step = k;
      break;
    }
  }
  result.min_distance = *std::min_element(result.distance.begin(), result.distance.end());
  result.final_distance = result.distance.back();
  const std::size_t n = result.distance.size();
  const std::size_t from = n - std::max<std::size_t>(1, n / 4);
  result.final_quarter_median =
      median({result.distance.begin() + static_cast<std::ptrdiff_t>(from), result.distance.end()});
  result.run = std::move(stepper.run);
  return result;
}

}  // namespace tlswim
