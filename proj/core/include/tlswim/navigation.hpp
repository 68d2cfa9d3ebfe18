#pragma once

// Closed-loop navigation scenarios for a trained controller: tracing a
// sequence of waypoints and pursuing a moving, diffusing target. The target
// direction is recomputed from the current centroid before every step.

#include "tlswim/analysis.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace tlswim {

inline constexpr double kCaptureThreshold = 0.001;

// Direction from centroid to target; `previous` when the two coincide.
double retarget(const Vec2& centroid, const Vec2& target, double previous = 0.0);

struct WaypointCourse {
  std::vector<Vec2> points;
  double threshold = kCaptureThreshold;
  int budget_per_waypoint = 20000;

  void validate() const;
};

// Regular five-pointed star visiting outer and inner vertices alternately,
// starting from the outer vertex at `start_angle` and going counter-clockwise.
WaypointCourse star_course(Vec2 center = {1.5, 0.5}, double circumradius = 1.0,
                           double start_angle = std::numbers::pi / 2);

struct CourseResult {
  Rollout run;
  std::vector<double> theta_targets;  // per step
  std::vector<int> arrival_steps;     // one per reached waypoint
  bool completed = false;
  // Index of the waypoint being chased when the budget ran out.
  std::optional<std::size_t> exhausted_at;
  double final_distance = 0.0;  // to the last waypoint chased
};

CourseResult trace_course(const Controller& controller, const WaypointCourse& course,
                          const SwimmerState& start, const EpisodeConfig& env);

struct MovingTarget {
  Vec2 position;
  Vec2 orientation{1.0, 0.0};  // unit vector
  double speed = 0.0;
  double diffusivity = 0.0;

  void validate() const;
};

// Standard-normal pair used for one diffusion step.
using NoiseSource = std::function<Vec2()>;
NoiseSource gaussian_noise(Rng& rng);

// Drift along the orientation plus translational diffusion with per-axis
// variance 2 D dt. The orientation never changes.
MovingTarget advance_target(const MovingTarget& target, double dt, const Vec2& unit_noise);
MovingTarget advance_target(const MovingTarget& target, double dt, Rng& rng);

struct PursuitConfig {
  double capture_threshold = kCaptureThreshold;
  int budget = 50000;
};

struct PursuitResult {
  bool captured = false;
  std::optional<int> capture_step;
  double initial_distance = 0.0;
  double min_distance = 0.0;
  double final_distance = 0.0;
  double final_quarter_median = 0.0;  // median distance over the last quarter of steps
  Rollout run;
  std::vector<Vec2> target_path;  // steps + 1 entries
  std::vector<double> distance;   // steps + 1 entries
};

PursuitResult pursue(const Controller& controller, const MovingTarget& target,
                     const SwimmerState& start, const EpisodeConfig& env,
                     const PursuitConfig& config, const NoiseSource& noise);

}  // namespace tlswim
