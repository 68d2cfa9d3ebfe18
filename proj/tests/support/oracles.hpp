#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the mobility matrix or the closed-form power: forces, torques and power are
// integrated numerically from the local drag law, and reference trajectories
// come from brute-force refinement.

#include "tlswim/dynamics.hpp"
#include "tlswim/network.hpp"

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using tlswim::BodyRates;
using tlswim::FullConfiguration;

struct LinkLoads {
  double fx = 0.0;
  double fy = 0.0;
  double torque = 0.0;  // about the origin
  double power = 0.0;   // integral of -f.u
};

// Composite Simpson integration over s in [0, l] of the drag force density
// f = -(gamma (u.t) t + (u.n) n) on link i, with u(s) = xdot_i + s thetadot_i n.
inline LinkLoads link_loads(const FullConfiguration& c, const BodyRates& r, int i, double gamma,
                            int intervals = 10000) {
  const double l = tlswim::kLinkLength;
  const double ct = std::cos(c.theta[i]), st = std::sin(c.theta[i]);
  const double tx = ct, ty = st, nx = -st, ny = ct;
  LinkLoads out;
  const double h = l / intervals;
  for (int k = 0; k <= intervals; ++k) {
    const double s = k * h;
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const double ux = r.x_dot[i] + s * r.theta_dot[i] * nx;
    const double uy = r.y_dot[i] + s * r.theta_dot[i] * ny;
    const double ut = ux * tx + uy * ty;
    const double un = ux * nx + uy * ny;
    const double fx = -(gamma * ut * tx + un * nx);
    const double fy = -(gamma * ut * ty + un * ny);
    const double px = c.x[i] + s * tx, py = c.y[i] + s * ty;
    out.fx += w * fx;
    out.fy += w * fy;
    out.torque += w * (px * fy - py * fx);
    out.power += w * -(fx * ux + fy * uy);
  }
  const double scale = h / 3.0;
  out.fx *= scale;
  out.fy *= scale;
  out.torque *= scale;
  out.power *= scale;
  return out;
}

inline LinkLoads total_loads(const FullConfiguration& c, const BodyRates& r, double gamma,
                             int intervals = 10000) {
  LinkLoads t;
  for (int i = 0; i < 3; ++i) {
    const LinkLoads li = link_loads(c, r, i, gamma, intervals);
    t.fx += li.fx;
    t.fy += li.fy;
    t.torque += li.torque;
    t.power += li.power;
  }
  return t;
}

// Random state with both joints inside the limits.
inline tlswim::SwimmerState random_state(std::mt19937_64& rng, double joint_span = 2.0) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  std::uniform_real_distribution<double> head(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> joint(-joint_span, joint_span);
  return tlswim::SwimmerState::from_joints({pos(rng), pos(rng)}, head(rng), joint(rng), joint(rng));
}

inline tlswim::JointRates random_rates(std::mt19937_64& rng, double cap = tlswim::kDefaultRateCap) {
  std::uniform_real_distribution<double> u(-cap, cap);
  return {u(rng), u(rng)};
}

// Integrates with many more RK4 sub-steps than the production default.
inline tlswim::SwimmerState refined_step(const tlswim::SwimmerState& s, const tlswim::JointRates& r,
                                         double dt, int factor = 100) {
  tlswim::IntegratorOptions opt;
  opt.substeps = 4 * factor;
  return tlswim::integrate_step(s, r, dt, opt).state;
}

inline double state_distance(const tlswim::SwimmerState& a, const tlswim::SwimmerState& b) {
  double d = std::max(std::abs(a.x1.x - b.x1.x), std::abs(a.x1.y - b.x1.y));
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a.theta[i] - b.theta[i]));
  return d;
}

// O(N^2) discounted suffix sums.
inline std::vector<double> brute_reward_to_go(std::span<const double> rewards,
                                              std::span<const std::size_t> starts, double discount) {
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t e = 0; e + 1 < starts.size(); ++e)
    for (std::size_t k = starts[e]; k < starts[e + 1]; ++k) {
      double acc = 0.0;
      for (std::size_t j = k; j < starts[e + 1]; ++j) acc += std::pow(discount, double(j - k)) * rewards[j];
      out[k] = acc;
    }
  return out;
}

// Largest relative error between analytic and central-difference gradients of
// L = sum(W .* output) for a random upstream weighting W.
inline double mlp_gradient_error(const tlswim::nn::Mlp& net, std::mt19937_64& rng, int batch = 5,
                                 double step = 1e-5) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd params(static_cast<Eigen::Index>(net.parameter_count()));
  for (auto& p : params) p = 0.5 * n(rng);
  Eigen::MatrixXd x(net.input_width(), batch), w(net.output_width(), batch);
  for (auto& v : x.reshaped()) v = n(rng);
  for (auto& v : w.reshaped()) v = n(rng);

  auto loss = [&](const Eigen::VectorXd& p) {
    return (net.forward({p.data(), net.parameter_count()}, x).array() * w.array()).sum();
  };
  tlswim::nn::Mlp::Tape tape;
  net.forward({params.data(), net.parameter_count()}, x, &tape);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  net.backward({params.data(), net.parameter_count()}, tape, w, {grad.data(), net.parameter_count()});

  double worst = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Eigen::VectorXd p = params;
    p[i] += step;
    const double up = loss(p);
    p[i] -= 2 * step;
    const double down = loss(p);
    const double fd = (up - down) / (2 * step);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-4});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

}  // namespace oracle
