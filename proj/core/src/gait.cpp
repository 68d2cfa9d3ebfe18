#include "tlswim/gait.hpp"

#include "tlswim/error.hpp"

#include <cmath>
#include <numbers>

namespace tlswim {
namespace {

constexpr double kPi = std::numbers::pi;

struct Corner {
  double a1;
  double a2;
};

std::vector<Corner> corners(const GaitSpec& spec) {
  std::vector<Corner> out{{spec.start_alpha1, spec.start_alpha2}};
  for (const auto& seg : spec.segments) {
    Corner c = out.back();
    (seg.joint == 0 ? c.a1 : c.a2) = seg.target;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string to_string(GaitKind kind) {
  switch (kind) {
    case GaitKind::purcell_symmetric: return "purcell";
    case GaitKind::asymmetric_cw: return "asymmetric_cw";
    case GaitKind::asymmetric_ccw: return "asymmetric_ccw";
    case GaitKind::custom: return "custom";
  }
  return "custom";
}

GaitKind gait_kind_from_string(const std::string& name) {
  if (name == "purcell" || name == "purcell_symmetric") return GaitKind::purcell_symmetric;
  if (name == "asymmetric_cw") return GaitKind::asymmetric_cw;
  if (name == "asymmetric_ccw") return GaitKind::asymmetric_ccw;
  if (name == "custom") return GaitKind::custom;
  throw InvalidArgumentError("unknown gait kind '" + name + "'");
}

void GaitSpec::validate() const {
  if (segments.empty()) throw InvalidArgumentError("gait has no segments");
  if (!(period > 0.0)) throw InvalidArgumentError("gait period must be positive");
  double total = 0.0;
  for (const auto& seg : segments) {
    if (seg.joint != 0 && seg.joint != 1) throw InvalidArgumentError("gait joint index must be 0 or 1");
    if (!(seg.fraction > 0.0)) throw InvalidArgumentError("gait segment fraction must be positive");
    if (std::abs(seg.target) > kJointLimit + 1e-12)
      throw InvalidArgumentError("gait target angle outside the joint range");
    total += seg.fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgumentError("gait segment fractions must sum to 1");
  if (std::abs(start_alpha1) > kJointLimit + 1e-12 || std::abs(start_alpha2) > kJointLimit + 1e-12)
    throw InvalidArgumentError("gait start angle outside the joint range");
  const auto c = corners(*this);
  if (std::abs(c.back().a1 - c.front().a1) > 1e-12 || std::abs(c.back().a2 - c.front().a2) > 1e-12)
    throw InvalidArgumentError("gait loop is not closed");
}

GaitSpec rectangular_gait(double lo, double hi, double period, GaitKind kind) {
  GaitSpec g;
  g.kind = kind;
  g.alpha_min = lo;
  g.alpha_max = hi;
  g.period = period > 0.0 ? period : 4.0 * (hi - lo);
  g.start_alpha1 = lo;
  g.start_alpha2 = lo;
  g.segments = {{1, hi, 0.25}, {0, hi, 0.25}, {1, lo, 0.25}, {0, lo, 0.25}};
  g.validate();
  return g;
}

GaitSpec purcell_gait(double period) {
  return rectangular_gait(-kPi / 3, kPi / 3, period, GaitKind::purcell_symmetric);
}

GaitSpec asymmetric_cw_gait(double period) {
  return rectangular_gait(-kPi / 2, kPi / 6, period, GaitKind::asymmetric_cw);
}

GaitSpec asymmetric_ccw_gait(double period) {
  return rectangular_gait(-kPi / 6, kPi / 2, period, GaitKind::asymmetric_ccw);
}

GaitSpec make_gait(GaitKind kind, double period) {
  switch (kind) {
    case GaitKind::purcell_symmetric: return purcell_gait(period);
    case GaitKind::asymmetric_cw: return asymmetric_cw_gait(period);
    case GaitKind::asymmetric_ccw: return asymmetric_ccw_gait(period);
    case GaitKind::custom: break;
  }
  throw InvalidArgumentError("custom gaits need explicit bounds");
}

GaitSpec mirrored_gait(const GaitSpec& spec) {
  const auto c = corners(spec);
  GaitSpec m = spec;
  m.kind = GaitKind::custom;
  m.start_alpha1 = spec.start_alpha2;
  m.start_alpha2 = spec.start_alpha1;
  m.segments.clear();
  for (std::size_t k = spec.segments.size(); k-- > 0;) {
    const auto& seg = spec.segments[k];
    const Corner& to = c[k];
    const int joint = 1 - seg.joint;
    // After the swap, joint `joint` carries the angle of original joint seg.joint.
    m.segments.push_back({joint, seg.joint == 0 ? to.a1 : to.a2, seg.fraction});
  }
  m.validate();
  return m;
}

JointRates gait_rates(const GaitSpec& spec, double phase) {
  if (!(phase >= 0.0 && phase < 1.0)) throw InvalidArgumentError("gait phase must lie in [0, 1)");
  const auto c = corners(spec);
  double acc = 0.0;
  for (std::size_t k = 0; k < spec.segments.size(); ++k) {
    const auto& seg = spec.segments[k];
    if (phase < acc + seg.fraction || k + 1 == spec.segments.size()) {
      const double from = seg.joint == 0 ? c[k].a1 : c[k].a2;
      const double rate = (seg.target - from) / (seg.fraction * spec.period);
      return seg.joint == 0 ? JointRates{rate, 0.0} : JointRates{0.0, rate};
    }
    acc += seg.fraction;
  }
  return {};
}

SwimmerState gait_start_state(const GaitSpec& spec, Vec2 x1, double theta2) {
  return SwimmerState::from_joints(x1, theta2, spec.start_alpha1, spec.start_alpha2);
}

double cycle_efficiency(double mean_speed, double mean_power, double gamma) {
  if (!(mean_power > 0.0)) throw InvalidArgumentError("efficiency needs positive mean power");
  return gamma * mean_speed * mean_speed / mean_power;
}

GaitRun run_gait(const GaitSpec& spec, const SwimmerState& start, int cycles, double dt,
                 const IntegratorOptions& options) {
  spec.validate();
  if (cycles < 1) throw InvalidArgumentError("run_gait needs at least one cycle");
  if (!(dt > 0.0)) throw InvalidArgumentError("time step must be positive");
  if (std::abs(start.alpha1() - spec.start_alpha1) > 1e-9 ||
      std::abs(start.alpha2() - spec.start_alpha2) > 1e-9)
    throw InvalidArgumentError("start state is not on the gait loop start");

  const auto c = corners(spec);
  GaitRun run;
  SwimmerState state = start;
  double t = 0.0;
  run.times.push_back(t);
  run.trajectory.push_back(state);

  for (int cycle = 0; cycle < cycles; ++cycle) {
    const SwimmerState cycle_start = state;
    double cycle_work = 0.0;
    for (std::size_t k = 0; k < spec.segments.size(); ++k) {
      const auto& seg = spec.segments[k];
      const double duration = seg.fraction * spec.period;
      const int n = std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
      const double h = duration / n;
      const double from = seg.joint == 0 ? c[k].a1 : c[k].a2;
      const double rate = (seg.target - from) / duration;
      const JointRates rates = seg.joint == 0 ? JointRates{rate, 0.0} : JointRates{0.0, rate};
      for (int i = 0; i < n; ++i) {
        const StepResult r = integrate_step(state, rates, h, options);
        state = r.state;
        t += h;
        cycle_work += r.work;
        run.times.push_back(t);
        run.trajectory.push_back(state);
        run.step_work.push_back(r.work);
      }
    }
    CycleMetrics m;
    m.displacement = centroid(state) - centroid(cycle_start);
    m.rotation = state.theta[1] - cycle_start.theta[1];
    m.speed = m.displacement.norm() / spec.period;
    m.speed_x = m.displacement.x / spec.period;
    m.work = cycle_work;
    m.mean_power = cycle_work / spec.period;
    m.efficiency = m.mean_power > 0.0 ? cycle_efficiency(m.speed, m.mean_power, options.gamma) : 0.0;
    run.cycles.push_back(m);
  }

  const std::size_t first = run.cycles.size() > 1 ? 1 : 0;
  const double n = static_cast<double>(run.cycles.size() - first);
  CycleMetrics avg;
  for (std::size_t i = first; i < run.cycles.size(); ++i) {
    const auto& m = run.cycles[i];
    avg.displacement += m.displacement * (1.0 / n);
    avg.rotation += m.rotation / n;
    avg.speed += m.speed / n;
    avg.speed_x += m.speed_x / n;
    avg.work += m.work / n;
    avg.mean_power += m.mean_power / n;
  }
  avg.efficiency =
      avg.mean_power > 0.0 ? cycle_efficiency(avg.speed, avg.mean_power, options.gamma) : 0.0;
  run.metrics = avg;
  return run;
}

}  // namespace tlswim
