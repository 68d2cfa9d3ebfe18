#include "doctest.h"

#include "oracles.hpp"

#include "tlswim/dynamics.hpp"

#include <Eigen/LU>
#include "tlswim/error.hpp"
#include "tlswim/linear_solve.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace tlswim;

namespace {

constexpr double pi = std::numbers::pi;

SwimmerState rotated(const SwimmerState& s, double phi) {
  SwimmerState r = s;
  r.x1 = rotate(s.x1, phi);
  for (auto& t : r.theta) t += phi;
  return r;
}

SwimmerState translated(const SwimmerState& s, Vec2 d) {
  SwimmerState r = s;
  r.x1 = s.x1 + d;
  return r;
}

}  // namespace

TEST_CASE("reconstruction of the full configuration") {
  SUBCASE("straight swimmer at the origin") {
    const FullConfiguration c = reconstruct_full_configuration({{0, 0}, {0, 0, 0}});
    CHECK(c.x[0] == doctest::Approx(0.0));
    CHECK(c.x[1] == doctest::Approx(1.0 / 3));
    CHECK(c.x[2] == doctest::Approx(2.0 / 3));
    for (double y : c.y) CHECK(y == 0.0);
  }
  SUBCASE("tilted swimmer") {
    const FullConfiguration c = reconstruct_full_configuration({{1, 0}, {pi / 3, pi / 3, pi / 3}});
    CHECK(c.x[1] == doctest::Approx(1 + std::cos(pi / 3) / 3));
    CHECK(c.y[1] == doctest::Approx(std::sin(pi / 3) / 3));
    CHECK(c.x[2] == doctest::Approx(1 + 2 * std::cos(pi / 3) / 3));
  }
  SUBCASE("chain constraints hold for random states") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 200; ++k) {
      const SwimmerState s = oracle::random_state(rng);
      const FullConfiguration c = reconstruct_full_configuration(s);
      for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(c.x[i + 1] - c.x[i] - std::cos(s.theta[i]) / 3) < 1e-15);
        CHECK(std::abs(c.y[i + 1] - c.y[i] - std::sin(s.theta[i]) / 3) < 1e-15);
      }
      CHECK(c.theta == s.theta);
    }
  }
  SUBCASE("non-finite input") {
    SwimmerState s{{std::numeric_limits<double>::quiet_NaN(), 0}, {0, 0, 0}};
    CHECK_THROWS_AS(reconstruct_full_configuration(s), InvalidStateError);
  }
}

TEST_CASE("mobility system entries") {
  const FullConfiguration c = reconstruct_full_configuration({{0, 0}, {0, 0, 0}});
  const MobilitySystem m = assemble_mobility_system(c, {0, 0});
  CHECK(m.H(0, 0) == doctest::Approx(-kDefaultGamma / 3));
  CHECK(m.H(0, 3) == 0.0);
  CHECK(m.H(0, 6) == 0.0);
  CHECK(m.H(1, 3) == doctest::Approx(-1.0 / 3));
  CHECK(m.H(7, 6) == -1.0);
  CHECK(m.H(7, 7) == 1.0);
  CHECK(m.q.isZero());

  const MobilitySystem r = assemble_mobility_system(c, {0.4, -0.7});
  CHECK(r.q[7] == 0.4);
  CHECK(r.q[8] == -0.7);
  for (int i = 0; i < 7; ++i) CHECK(r.q[i] == 0.0);
}

TEST_CASE("balance rows reproduce the drag law for arbitrary velocities") {
  // Rows 0-2 of H applied to any velocity vector equal the summed drag force
  // and torque (with the sign convention of the assembled matrix: +F, +M).
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const FullConfiguration c = reconstruct_full_configuration(oracle::random_state(rng));
    BodyRates v;
    for (int i = 0; i < 3; ++i) {
      v.x_dot[i] = n(rng);
      v.y_dot[i] = n(rng);
      v.theta_dot[i] = n(rng);
    }
    const auto hv = (assemble_mobility_system(c, {0, 0}).H * v.as_vector()).eval();
    const oracle::LinkLoads loads = oracle::total_loads(c, v, kDefaultGamma, 200);
    CHECK(hv[0] == doctest::Approx(loads.fx).epsilon(1e-10));
    CHECK(hv[1] == doctest::Approx(loads.fy).epsilon(1e-10));
    CHECK(hv[2] == doctest::Approx(loads.torque).epsilon(1e-10));
  }
}

TEST_CASE("solving for body rates") {
  std::mt19937_64 rng(7);
  SUBCASE("zero joint rates give zero motion") {
    const BodyRates r = body_rates(oracle::random_state(rng), {0, 0});
    CHECK(r.as_vector().isZero());
  }
  SUBCASE("residual, closure and invariances on random configurations") {
    double residual = 0, closure = 0, trans = 0, rot = 0;
    std::uniform_real_distribution<double> u(-pi, pi);
    for (int k = 0; k < 1000; ++k) {
      const SwimmerState s = oracle::random_state(rng);
      const JointRates q = oracle::random_rates(rng);
      const FullConfiguration c = reconstruct_full_configuration(s);
      const MobilitySystem sys = assemble_mobility_system(c, q);
      const BodyRates r = solve_body_rates(sys);
      residual = std::max(residual, (sys.H * r.as_vector() - sys.q).lpNorm<Eigen::Infinity>());
      const oracle::LinkLoads loads = oracle::total_loads(c, r, kDefaultGamma, 64);
      closure = std::max({closure, std::abs(loads.fx), std::abs(loads.fy), std::abs(loads.torque)});

      const BodyRates rt = body_rates(translated(s, {u(rng), u(rng)}), q);
      trans = std::max(trans, (rt.as_vector() - r.as_vector()).lpNorm<Eigen::Infinity>());

      const double phi = u(rng);
      const BodyRates rr = body_rates(rotated(s, phi), q);
      for (int i = 0; i < 3; ++i) {
        const Vec2 v = rotate({r.x_dot[i], r.y_dot[i]}, phi);
        rot = std::max({rot, std::abs(rr.x_dot[i] - v.x), std::abs(rr.y_dot[i] - v.y),
                        std::abs(rr.theta_dot[i] - r.theta_dot[i])});
      }
    }
    CHECK(residual < 1e-10);
    CHECK(closure < 1e-9);
    CHECK(trans < 1e-10);
    CHECK(rot < 1e-10);
  }
  SUBCASE("a singular matrix is reported with its condition estimate") {
    MobilitySystem sys;
    sys.H.setIdentity();
    sys.H.row(4).setZero();
    try {
      solve_body_rates(sys);
      FAIL("expected SingularSystemError");
    } catch (const SingularSystemError& e) {
      CHECK(e.condition_estimate() > kMaxConditionEstimate);
    }
  }
}

TEST_CASE("pivoted LU against a known system") {
  Eigen::Matrix<double, 9, 9> a = Eigen::Matrix<double, 9, 9>::Identity() * 2.0;
  a(0, 8) = 1.0;
  a(8, 0) = 3.0;
  const linalg::PivotedLu<9> lu(a);
  Eigen::Matrix<double, 9, 1> x = Eigen::Matrix<double, 9, 1>::LinSpaced(1.0, 9.0);
  const Eigen::Matrix<double, 9, 1> b = a * x;
  CHECK((lu.solve(b) - x).norm() < 1e-13);
  const double exact = a.cwiseAbs().colwise().sum().maxCoeff() *
                       a.inverse().cwiseAbs().colwise().sum().maxCoeff();
  CHECK(lu.condition_estimate() <= exact * (1 + 1e-12));
  CHECK(lu.condition_estimate() >= exact / 3);
}

TEST_CASE("instantaneous power") {
  std::mt19937_64 rng(3);
  SUBCASE("no motion dissipates nothing") {
    const FullConfiguration c = reconstruct_full_configuration(oracle::random_state(rng));
    CHECK(instantaneous_power(c, BodyRates{}) == 0.0);
  }
  SUBCASE("closed form matches dense quadrature and is positive") {
    for (int k = 0; k < 100; ++k) {
      const SwimmerState s = oracle::random_state(rng);
      const FullConfiguration c = reconstruct_full_configuration(s);
      const BodyRates r = body_rates(s, oracle::random_rates(rng));
      const double p = instantaneous_power(c, r);
      CHECK(p > 0.0);
      CHECK(std::abs(p - oracle::total_loads(c, r, kDefaultGamma, 10000).power) < 1e-9);
    }
  }
}

TEST_CASE("centroid") {
  CHECK(centroid(SwimmerState{{0, 0}, {0, 0, 0}}).x == doctest::Approx(0.5));
  CHECK(centroid(SwimmerState{{0, 0}, {0, 0, 0}}).y == doctest::Approx(0.0));
  const SwimmerState s{{0.2, -1.0}, {0.3, 1.1, -0.4}};
  const Vec2 a = centroid(s), b = centroid(translated(s, {1.5, 2.5}));
  CHECK(b.x - a.x == doctest::Approx(1.5));
  CHECK(b.y - a.y == doctest::Approx(2.5));
  // Cup shape, mirror-symmetric about the y-axis.
  const SwimmerState v{{-1.0 / 6 - std::cos(pi / 4) / 3, std::sin(pi / 4) / 3}, {-pi / 4, 0, pi / 4}};
  CHECK(centroid(v).x == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("single step integration") {
  std::mt19937_64 rng(21);
  SUBCASE("zero rates leave the state unchanged") {
    const SwimmerState s = oracle::random_state(rng);
    const StepResult r = integrate_step(s, {0, 0}, 0.37);
    CHECK(oracle::state_distance(r.state, s) < 1e-12);
    CHECK(r.work == 0.0);
  }
  SUBCASE("matches the refined oracle") {
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
      const SwimmerState s = oracle::random_state(rng, 1.5);
      const JointRates q = oracle::random_rates(rng);
      worst = std::max(worst, oracle::state_distance(integrate_step(s, q, 0.1).state,
                                                     oracle::refined_step(s, q, 0.1)));
    }
    CHECK(worst < 1e-8);
  }
  SUBCASE("rotation equivariance of a trajectory") {
    SwimmerState a = oracle::random_state(rng, 1.0);
    const double phi = 1.234;
    SwimmerState b = rotated(a, phi);
    double worst = 0;
    for (int k = 0; k < 30; ++k) {
      const JointRates q{std::sin(0.3 * k), std::cos(0.2 * k)};
      a = integrate_step(a, q, 0.1).state;
      b = integrate_step(b, q, 0.1).state;
      worst = std::max(worst, oracle::state_distance(rotated(a, phi), b));
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("joints are pinned at the limit") {
    const SwimmerState s = SwimmerState::from_joints({0, 0}, 0.2, kJointLimit - 0.01, -kJointLimit + 0.05);
    const StepResult r = integrate_step(s, {1.5, -1.5}, 0.1);
    CHECK(r.state.alpha1() == doctest::Approx(kJointLimit).epsilon(1e-14));
    CHECK(r.state.alpha2() == doctest::Approx(-kJointLimit).epsilon(1e-14));
    CHECK(r.pinned[0]);
    CHECK(r.pinned[1]);
    CHECK(r.applied_rates.alpha1_dot == 0.0);
    CHECK(r.applied_rates.alpha2_dot == 0.0);
    const StepResult again = integrate_step(r.state, {1.5, -1.5}, 0.1);
    CHECK(oracle::state_distance(again.state, r.state) < 1e-15);
  }
  SUBCASE("non-finite rates are rejected") {
    CHECK_THROWS_AS(integrate_step({}, {std::nan(""), 0}, 0.1), InvalidStateError);
    CHECK_THROWS_AS(integrate_step({}, {0, 0}, 0.0), InvalidArgumentError);
  }
}

TEST_CASE("step work") {
  std::mt19937_64 rng(8);
  SUBCASE("Simpson accumulation matches the refined quadrature") {
    for (int k = 0; k < 20; ++k) {
      const SwimmerState s = oracle::random_state(rng, 1.2);
      const JointRates q = oracle::random_rates(rng);
      IntegratorOptions fine;
      fine.substeps = 400;
      const double w = integrate_step(s, q, 0.1).work;
      CHECK(w > 0.0);
      CHECK(w == doctest::Approx(integrate_step(s, q, 0.1, fine).work).epsilon(1e-8));
      CHECK(w == doctest::Approx(step_work(integrate_step(s, q, 0.1).segment)));
    }
  }
  SUBCASE("the same path traversed half as fast costs half the work") {
    const SwimmerState s = oracle::random_state(rng, 1.0);
    const double fast = integrate_step(s, {1.0, -0.6}, 0.1).work;
    const double slow = integrate_step(s, {0.5, -0.3}, 0.2).work;
    CHECK(slow == doctest::Approx(fast / 2).epsilon(0.01));
  }
}

TEST_CASE("scallop theorem for reciprocal strokes") {
  struct Stroke {
    int joint;
    double amplitude;
    double other;
    double offset;
  };
  const Stroke strokes[] = {{0, 1.0, 0.0, 0.0}, {1, 0.8, 0.5, 0.3}, {0, 0.6, -1.0, -0.5}};
  for (const auto& st : strokes) {
    const double period = 8.0, dt = 0.05;
    const int steps = static_cast<int>(std::lround(period / dt));
    const double w = 2 * pi / period;
    SwimmerState s = st.joint == 0 ? SwimmerState::from_joints({0, 0}, 0.4, st.offset, st.other)
                                   : SwimmerState::from_joints({0, 0}, 0.4, st.other, st.offset);
    const Vec2 start = centroid(s);
    for (int k = 0; k < steps; ++k) {
      const double rate = st.amplitude * w * std::cos(w * (k + 0.5) * dt);
      const JointRates q = st.joint == 0 ? JointRates{rate, 0} : JointRates{0, rate};
      s = integrate_step(s, q, dt).state;
    }
    CHECK((centroid(s) - start).norm() < 1e-5);
  }
}
