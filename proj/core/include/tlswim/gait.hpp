#pragma once

// Prescribed open-loop strokes. A gait is a closed polygon in the
// (alpha1, alpha2) joint plane traversed one joint at a time at a uniform
// rate per segment.

#include "tlswim/dynamics.hpp"

#include <string>
#include <vector>

namespace tlswim {

enum class GaitKind { purcell_symmetric, asymmetric_cw, asymmetric_ccw, custom };

std::string to_string(GaitKind kind);
GaitKind gait_kind_from_string(const std::string& name);

struct GaitSegment {
  int joint = 0;          // 0 -> alpha1, 1 -> alpha2
  double target = 0.0;    // joint angle at the end of the segment
  double fraction = 0.0;  // share of the period spent on this segment
};

struct GaitSpec {
  GaitKind kind = GaitKind::custom;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  double period = 1.0;
  double start_alpha1 = 0.0;
  double start_alpha2 = 0.0;
  std::vector<GaitSegment> segments;

  // Throws InvalidArgumentError if angles leave the joint range, fractions do
  // not sum to one, or the loop does not close.
  void validate() const;
};

// Square loop over [lo, hi] x [lo, hi], traversed clockwise in the
// (alpha1, alpha2) plane starting at the diagonal corner (lo, lo) with joint 2
// moving first. Starting on the diagonal makes the symmetric stroke swim
// along the middle link's initial heading. A non-positive period selects unit
// joint rate.
GaitSpec rectangular_gait(double lo, double hi, double period = 0.0,
                          GaitKind kind = GaitKind::custom);
GaitSpec purcell_gait(double period = 0.0);          // [-pi/3, pi/3]
GaitSpec asymmetric_cw_gait(double period = 0.0);    // [-pi/2, pi/6]
GaitSpec asymmetric_ccw_gait(double period = 0.0);   // [-pi/6, pi/2]
GaitSpec make_gait(GaitKind kind, double period = 0.0);

// Swaps the two joints and reverses the traversal order.
GaitSpec mirrored_gait(const GaitSpec& spec);

// Piecewise-constant joint rates at phase in [0, 1).
JointRates gait_rates(const GaitSpec& spec, double phase);

// State on the loop start with the middle link at heading theta2.
SwimmerState gait_start_state(const GaitSpec& spec, Vec2 x1 = {}, double theta2 = 0.0);

struct CycleMetrics {
  Vec2 displacement;         // net centroid displacement over the cycle
  double rotation = 0.0;     // net body rotation over the cycle
  double speed = 0.0;        // |displacement| / period
  double speed_x = 0.0;      // displacement.x / period
  double work = 0.0;
  double mean_power = 0.0;
  double efficiency = 0.0;
};

struct GaitRun {
  std::vector<double> times;
  std::vector<SwimmerState> trajectory;  // one sample per integration step
  std::vector<double> step_work;         // work done over each step
  std::vector<CycleMetrics> cycles;      // one entry per cycle
  CycleMetrics metrics;                  // averaged over cycles 2..n
};

// Integrates `cycles` periods from `start`, which must sit on the loop start.
// Each segment is split into ceil(duration / dt) equal steps. Metrics are
// averaged after discarding the first cycle (unless only one was run).
GaitRun run_gait(const GaitSpec& spec, const SwimmerState& start, int cycles, double dt,
                 const IntegratorOptions& options = {});

// gamma * speed^2 / mean_power. Throws for non-positive power.
double cycle_efficiency(double mean_speed, double mean_power, double gamma = kDefaultGamma);

}  // namespace tlswim
