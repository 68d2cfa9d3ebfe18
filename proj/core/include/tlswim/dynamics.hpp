#pragma once

// Resistive-force-theory dynamics of the planar three-link swimmer.
//
// All quantities are dimensionless: lengths are scaled by the total swimmer
// length (each link is 1/3 long), time by the joint actuation time scale and
// forces by the perpendicular drag coefficient. The only physical parameter
// left is the drag ratio gamma = C_parallel / C_perp.

#include "tlswim/vec2.hpp"

#include <Eigen/Core>

#include <array>
#include <numbers>
#include <vector>

namespace tlswim {

inline constexpr double kLinkLength = 1.0 / 3.0;
inline constexpr double kDefaultGamma = 0.5;
inline constexpr double kJointLimit = 2.0 * std::numbers::pi / 3.0;
inline constexpr double kDefaultRateCap = 1.5;

// Reduced 5-DOF state: left end of link 1 plus the three link orientations.
// Angles are never wrapped, so continuity across +-pi is preserved.
struct SwimmerState {
  Vec2 x1;
  std::array<double, 3> theta{};

  double alpha1() const { return theta[1] - theta[0]; }
  double alpha2() const { return theta[2] - theta[1]; }

  // Builds a state from the middle-link heading and the two joint angles.
  static SwimmerState from_joints(Vec2 x1, double theta2, double alpha1, double alpha2) {
    return {x1, {theta2 - alpha1, theta2, theta2 + alpha2}};
  }

  friend bool operator==(const SwimmerState&, const SwimmerState&) = default;
};

// All nine generalized coordinates (left ends of the links and orientations).
struct FullConfiguration {
  std::array<double, 3> x{};
  std::array<double, 3> y{};
  std::array<double, 3> theta{};
};

struct JointRates {
  double alpha1_dot = 0.0;
  double alpha2_dot = 0.0;

  friend bool operator==(const JointRates&, const JointRates&) = default;
};

// H * (Xdot, Ydot, Thetadot) = q. Rows 0-2 are force-x, force-y and torque
// balance; rows 3-8 are the kinematic chain constraints.
struct MobilitySystem {
  Eigen::Matrix<double, 9, 9> H = Eigen::Matrix<double, 9, 9>::Zero();
  Eigen::Matrix<double, 9, 1> q = Eigen::Matrix<double, 9, 1>::Zero();
  double gamma = kDefaultGamma;
};

struct BodyRates {
  std::array<double, 3> x_dot{};
  std::array<double, 3> y_dot{};
  std::array<double, 3> theta_dot{};

  Eigen::Matrix<double, 9, 1> as_vector() const;
  static BodyRates from_vector(const Eigen::Matrix<double, 9, 1>& v);
};

// Condition estimates above this are reported as singular.
inline constexpr double kMaxConditionEstimate = 1e12;

FullConfiguration reconstruct_full_configuration(const SwimmerState& state);

MobilitySystem assemble_mobility_system(const FullConfiguration& config,
                                        const JointRates& rates,
                                        double gamma = kDefaultGamma);

// Partial-pivot LU solve. Throws SingularSystemError (carrying the condition
// estimate) when H is singular or its condition estimate exceeds the limit.
BodyRates solve_body_rates(const MobilitySystem& system,
                           double max_condition = kMaxConditionEstimate);

// Convenience: reconstruct, assemble and solve in one go.
BodyRates body_rates(const SwimmerState& state, const JointRates& rates,
                     double gamma = kDefaultGamma);

// Rate of work done on the fluid, sum over links of the integral of -f.u,
// evaluated in closed form.
double instantaneous_power(const FullConfiguration& config, const BodyRates& rates,
                           double gamma = kDefaultGamma);

// Mean of the three link midpoints.
Vec2 centroid(const FullConfiguration& config);
Vec2 centroid(const SwimmerState& state);

struct IntegratorOptions {
  double gamma = kDefaultGamma;
  int substeps = 4;
  double joint_limit = kJointLimit;
};

// Power samples of one RK4 sub-interval, used for Simpson accumulation.
struct PowerSample {
  double duration = 0.0;
  double start = 0.0;
  double mid = 0.0;
  double end = 0.0;
};

struct StepSegment {
  std::vector<PowerSample> samples;
};

// Simpson-rule work over a recorded segment.
double step_work(const StepSegment& segment);

struct StepResult {
  SwimmerState state;
  double work = 0.0;
  // Joint rates actually applied at the end of the step (zeroed when pinned).
  JointRates applied_rates;
  std::array<bool, 2> pinned{false, false};
  StepSegment segment;
};

// Advances the reduced state by dt with classical RK4 split into
// options.substeps sub-intervals. A joint that would leave
// [-joint_limit, joint_limit] is pinned at the limit and its rate zeroed for
// the remainder of the step.
StepResult integrate_step(const SwimmerState& state, const JointRates& rates, double dt,
                          const IntegratorOptions& options = {});

}  // namespace tlswim
