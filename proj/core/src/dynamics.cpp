#include "tlswim/dynamics.hpp"

#include "tlswim/error.hpp"
#include "tlswim/linear_solve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tlswim {
namespace {

bool finite(const SwimmerState& s) {
  return std::isfinite(s.x1.x) && std::isfinite(s.x1.y) && std::isfinite(s.theta[0]) &&
         std::isfinite(s.theta[1]) && std::isfinite(s.theta[2]);
}

bool finite(const JointRates& r) {
  return std::isfinite(r.alpha1_dot) && std::isfinite(r.alpha2_dot);
}

// Time derivative of the reduced state together with the dissipated power.
struct ReducedRate {
  double x1_dot = 0.0;
  double y1_dot = 0.0;
  std::array<double, 3> theta_dot{};
  double power = 0.0;
};

ReducedRate reduced_rate(const SwimmerState& s, const JointRates& rates, double gamma) {
  const FullConfiguration config = reconstruct_full_configuration(s);
  const BodyRates br = solve_body_rates(assemble_mobility_system(config, rates, gamma));
  return {br.x_dot[0], br.y_dot[0], br.theta_dot, instantaneous_power(config, br, gamma)};
}

SwimmerState advance(const SwimmerState& s, const ReducedRate& k, double h) {
  SwimmerState out = s;
  out.x1.x += h * k.x1_dot;
  out.x1.y += h * k.y1_dot;
  for (int i = 0; i < 3; ++i) out.theta[i] += h * k.theta_dot[i];
  return out;
}

// One classical RK4 step. Power is integrated alongside the state as an extra
// quadrature component, which is Simpson's rule with the two midpoint stages
// averaged.
SwimmerState rk4(const SwimmerState& s, const JointRates& rates, double h, double gamma,
                 PowerSample& sample) {
  const ReducedRate k1 = reduced_rate(s, rates, gamma);
  const ReducedRate k2 = reduced_rate(advance(s, k1, h / 2), rates, gamma);
  const ReducedRate k3 = reduced_rate(advance(s, k2, h / 2), rates, gamma);
  const ReducedRate k4 = reduced_rate(advance(s, k3, h), rates, gamma);

  SwimmerState out = s;
  out.x1.x += h / 6 * (k1.x1_dot + 2 * k2.x1_dot + 2 * k3.x1_dot + k4.x1_dot);
  out.x1.y += h / 6 * (k1.y1_dot + 2 * k2.y1_dot + 2 * k3.y1_dot + k4.y1_dot);
  for (int i = 0; i < 3; ++i)
    out.theta[i] +=
        h / 6 * (k1.theta_dot[i] + 2 * k2.theta_dot[i] + 2 * k3.theta_dot[i] + k4.theta_dot[i]);

  sample = {h, k1.power, 0.5 * (k2.power + k3.power), k4.power};
  return out;
}

double joint_angle(const SwimmerState& s, int j) { return j == 0 ? s.alpha1() : s.alpha2(); }

double& joint_rate(JointRates& r, int j) { return j == 0 ? r.alpha1_dot : r.alpha2_dot; }

// Sets joint j exactly to the given angle by moving the outer link.
void snap_joint(SwimmerState& s, int j, double angle) {
  if (j == 0)
    s.theta[0] = s.theta[1] - angle;
  else
    s.theta[2] = s.theta[1] + angle;
}

}  // namespace

Eigen::Matrix<double, 9, 1> BodyRates::as_vector() const {
  Eigen::Matrix<double, 9, 1> v;
  for (int i = 0; i < 3; ++i) {
    v[i] = x_dot[i];
    v[i + 3] = y_dot[i];
    v[i + 6] = theta_dot[i];
  }
  return v;
}

BodyRates BodyRates::from_vector(const Eigen::Matrix<double, 9, 1>& v) {
  BodyRates r;
  for (int i = 0; i < 3; ++i) {
    r.x_dot[i] = v[i];
    r.y_dot[i] = v[i + 3];
    r.theta_dot[i] = v[i + 6];
  }
  return r;
}

FullConfiguration reconstruct_full_configuration(const SwimmerState& state) {
  if (!finite(state)) throw InvalidStateError("swimmer state contains non-finite values");
  FullConfiguration c;
  c.theta = state.theta;
  c.x[0] = state.x1.x;
  c.y[0] = state.x1.y;
  for (int i = 0; i < 2; ++i) {
    c.x[i + 1] = c.x[i] + kLinkLength * std::cos(state.theta[i]);
    c.y[i + 1] = c.y[i] + kLinkLength * std::sin(state.theta[i]);
  }
  return c;
}

MobilitySystem assemble_mobility_system(const FullConfiguration& config, const JointRates& rates,
                                        double gamma) {
  if (!finite(rates) || !std::isfinite(gamma))
    throw InvalidStateError("mobility system inputs contain non-finite values");
  MobilitySystem sys;
  sys.gamma = gamma;
  auto& H = sys.H;
  const double g = gamma;

  for (int i = 0; i < 3; ++i) {
    const double th = config.theta[i];
    const double s = std::sin(th), c = std::cos(th);
    const double s2 = std::sin(2 * th), c2 = std::cos(2 * th);
    const double xi = config.x[i], yi = config.y[i];

    // Force balance along x.
    H(0, i) = -(g * c * c + s * s) / 3.0;
    H(0, i + 3) = (1.0 - g) * s2 / 6.0;
    H(0, i + 6) = s / 18.0;
    // Force balance along y.
    H(1, i) = (1.0 - g) * s2 / 6.0;
    H(1, i + 3) = -(c * c + g * s * s) / 3.0;
    H(1, i + 6) = -c / 18.0;
    // Torque balance about the origin.
    H(2, i) = s / 18.0 + (1.0 - g) * xi * s2 / 6.0 + (1.0 + g) * yi / 6.0 -
              (1.0 - g) * yi * c2 / 6.0;
    H(2, i + 3) = -(c / 18.0 + (1.0 - g) * yi * s2 / 6.0 + (1.0 + g) * xi / 6.0 +
                    (1.0 - g) * xi * c2 / 6.0);
    H(2, i + 6) = -(1.0 / 81.0 + xi * c / 18.0 + yi * s / 18.0);
  }

  // Kinematic chain constraints.
  H(3, 0) = -1.0; H(3, 1) = 1.0; H(3, 6) = std::sin(config.theta[0]) / 3.0;
  H(4, 1) = -1.0; H(4, 2) = 1.0; H(4, 7) = std::sin(config.theta[1]) / 3.0;
  H(5, 3) = -1.0; H(5, 4) = 1.0; H(5, 6) = -std::cos(config.theta[0]) / 3.0;
  H(6, 4) = -1.0; H(6, 5) = 1.0; H(6, 7) = -std::cos(config.theta[1]) / 3.0;
  H(7, 6) = -1.0; H(7, 7) = 1.0;
  H(8, 7) = -1.0; H(8, 8) = 1.0;

  sys.q[7] = rates.alpha1_dot;
  sys.q[8] = rates.alpha2_dot;
  return sys;
}

BodyRates solve_body_rates(const MobilitySystem& system, double max_condition) {
  const linalg::PivotedLu<9> lu(system.H);
  const double cond = lu.condition_estimate();
  if (lu.exactly_singular() || !(cond <= max_condition)) {
    std::ostringstream msg;
    msg << "mobility matrix is singular or ill-conditioned (condition estimate " << cond << ")";
    throw SingularSystemError(msg.str(), cond);
  }
  return BodyRates::from_vector(lu.solve(system.q));
}

BodyRates body_rates(const SwimmerState& state, const JointRates& rates, double gamma) {
  return solve_body_rates(
      assemble_mobility_system(reconstruct_full_configuration(state), rates, gamma));
}

double instantaneous_power(const FullConfiguration& config, const BodyRates& rates,
                           double gamma) {
  constexpr double l = kLinkLength;
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double c = std::cos(config.theta[i]), s = std::sin(config.theta[i]);
    const double ut = rates.x_dot[i] * c + rates.y_dot[i] * s;
    const double un = -rates.x_dot[i] * s + rates.y_dot[i] * c;
    const double w = rates.theta_dot[i];
    // integral over s in [0, l] of gamma*ut^2 + (un + s*w)^2
    total += gamma * l * ut * ut + l * un * un + l * l * un * w + l * l * l * w * w / 3.0;
  }
  return total;
}

Vec2 centroid(const FullConfiguration& config) {
  Vec2 sum;
  for (int i = 0; i < 3; ++i) {
    sum.x += config.x[i] + 0.5 * kLinkLength * std::cos(config.theta[i]);
    sum.y += config.y[i] + 0.5 * kLinkLength * std::sin(config.theta[i]);
  }
  return sum * (1.0 / 3.0);
}

Vec2 centroid(const SwimmerState& state) {
  return centroid(reconstruct_full_configuration(state));
}

double step_work(const StepSegment& segment) {
  double w = 0.0;
  for (const auto& p : segment.samples) w += p.duration / 6.0 * (p.start + 4.0 * p.mid + p.end);
  return w;
}

StepResult integrate_step(const SwimmerState& state, const JointRates& rates, double dt,
                          const IntegratorOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgumentError("time step must be positive");
  if (options.substeps < 1) throw InvalidArgumentError("substeps must be at least 1");
  if (!finite(rates)) throw InvalidStateError("joint rates contain non-finite values");
  if (!finite(state)) throw InvalidStateError("swimmer state contains non-finite values");

  const double limit = options.joint_limit;
  StepResult result;
  result.state = state;
  JointRates active = rates;

  auto pin_if_blocked = [&](int j) {
    double& r = joint_rate(active, j);
    const double a = joint_angle(result.state, j);
    if ((r > 0.0 && a >= limit) || (r < 0.0 && a <= -limit)) {
      r = 0.0;
      result.pinned[j] = true;
    }
  };

  const double h_nominal = dt / options.substeps;
  for (int sub = 0; sub < options.substeps; ++sub) {
    double remaining = h_nominal;
    while (remaining > 1e-14 * h_nominal) {
      pin_if_blocked(0);
      pin_if_blocked(1);

      double h = remaining;
      std::array<bool, 2> hits{false, false};
      for (int j = 0; j < 2; ++j) {
        const double r = joint_rate(active, j);
        if (r == 0.0) continue;
        const double bound = r > 0.0 ? limit : -limit;
        const double tau = (bound - joint_angle(result.state, j)) / r;
        if (tau <= h) {
          if (tau < h) hits = {false, false};
          h = tau;
          hits[j] = true;
        }
      }

      PowerSample sample;
      if (h > 0.0) {
        result.state = rk4(result.state, active, h, options.gamma, sample);
        result.segment.samples.push_back(sample);
      }
      for (int j = 0; j < 2; ++j) {
        if (!hits[j]) continue;
        snap_joint(result.state, j, joint_rate(active, j) > 0.0 ? limit : -limit);
        joint_rate(active, j) = 0.0;
        result.pinned[j] = true;
      }
      remaining -= h;
    }
  }

  result.applied_rates = active;
  result.work = step_work(result.segment);
  return result;
}

}  // namespace tlswim
