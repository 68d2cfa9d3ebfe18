#include "tlswim/runner.hpp"

#include "tlswim/error.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef TLSWIM_VERSION
#define TLSWIM_VERSION "unknown"
#endif

namespace tlswim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <typename... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ofstream out_;
};

struct Context {
  const AppConfig& cfg;
  fs::path out;
  std::ostream& log;
  std::optional<fs::path> checkpoint;
  std::vector<std::string> outputs;

  fs::path file(const std::string& name) {
    outputs.push_back(name);
    return out / name;
  }
};

void write_trajectory(Context& ctx, const std::string& name, const Rollout& run) {
  Csv csv(ctx.file(name), "step,x_c,y_c,alpha1,alpha2,power");
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    const double p = k < run.steps() ? run.power(k) : 0.0;
    csv.row(k, run.centroids[k].x, run.centroids[k].y, run.states[k].alpha1(),
            run.states[k].alpha2(), p);
  }
}

void write_smoothed(Context& ctx, const std::string& name, const Rollout& run,
                    double theta_target, const SuccessConfig& sc) {
  const SmoothedPath path = smooth_path(run.centroids, sc.half_window);
  const auto theta_s = slope_angle(path, theta_target);
  const StageLabels stages = classify_stages(theta_s, sc.threshold);
  Csv csv(ctx.file(name), "index,raw_step,x,y,theta_s,stage");
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const bool has = i < theta_s.size();
    const std::string ts = has && theta_s[i] ? num(*theta_s[i]) : "";
    const std::string st =
        has ? (stages.labels[i] == Stage::translation ? "translation" : "steering") : "";
    csv.row(i, i + static_cast<std::size_t>(sc.half_window), path.points[i].x, path.points[i].y, ts,
            st);
  }
}

Checkpoint require_checkpoint(const Context& ctx) {
  if (!ctx.checkpoint) throw CheckpointError("this command needs --checkpoint");
  return load_checkpoint(*ctx.checkpoint);
}

json metrics_json(const CycleMetrics& m) {
  return {{"displacement", {m.displacement.x, m.displacement.y}},
          {"rotation", m.rotation},
          {"speed", m.speed},
          {"speed_x", m.speed_x},
          {"work", m.work},
          {"mean_power", m.mean_power},
          {"efficiency", m.efficiency}};
}

json simulate_gait(Context& ctx) {
  const auto& g = ctx.cfg.gait;
  const GaitSpec spec = g.spec();
  IntegratorOptions opt{ctx.cfg.episode.gamma, ctx.cfg.episode.substeps, kJointLimit};
  const GaitRun run = run_gait(spec, gait_start_state(spec, {}, g.theta2), g.cycles, g.dt, opt);
  {
    Csv csv(ctx.file("trajectory.csv"), "step,time,x_c,y_c,alpha1,alpha2,power");
    for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
      const Vec2 c = centroid(run.trajectory[k]);
      double p = 0.0;
      if (k + 1 < run.times.size()) p = run.step_work[k] / (run.times[k + 1] - run.times[k]);
      csv.row(k, run.times[k], c.x, c.y, run.trajectory[k].alpha1(), run.trajectory[k].alpha2(), p);
    }
  }
  json cycles = json::array();
  for (const auto& c : run.cycles) cycles.push_back(metrics_json(c));
  const json summary{{"gait", to_string(spec.kind)},
                     {"alpha_min", spec.alpha_min},
                     {"alpha_max", spec.alpha_max},
                     {"period", spec.period},
                     {"cycles", cycles},
                     {"metrics", metrics_json(run.metrics)}};
  write_json(ctx.file("metrics.json"), summary);
  ctx.log << "gait " << to_string(spec.kind) << ": speed " << num(run.metrics.speed)
          << ", rotation/cycle " << num(run.metrics.rotation) << ", efficiency "
          << num(run.metrics.efficiency) << '\n';
  return summary;
}

struct TrainedCell {
  Checkpoint checkpoint;
  std::vector<LearningCurvePoint> curve;
};

TrainedCell train_into(Context& ctx, const fs::path& dir, const TrainConfig& tc,
                       const EpisodeConfig& env, const RewardConfig& reward,
                       const Checkpoint* resume) {
  fs::create_directories(dir / "checkpoints");
  TrainCallbacks cb;
  cb.on_checkpoint = [&](const Checkpoint& c) {
    char name[64];
    std::snprintf(name, sizeof name, "ckpt_%09lld.json", c.episodes);
    save_checkpoint(c, dir / "checkpoints" / name);
  };
  long long last_report = resume ? resume->episodes : 0;
  cb.on_update = [&](const Checkpoint& c, const UpdateDiagnostics& d) {
    if (c.episodes - last_report < 1000 && c.episodes < tc.episodes) return;
    last_report = c.episodes;
    const auto& L = d.epochs.empty() ? PpoLosses{} : d.epochs.back().losses;
    ctx.log << "episode " << c.episodes << "/" << tc.episodes << "  loss " << num(L.total)
            << "  entropy " << num(L.entropy) << "  clip " << num(L.clip_fraction) << '\n';
  };
  TrainResult r = train(tc, env, reward, ctx.cfg.seed, cb, resume);

  EpisodeConfig probe = env;
  probe.theta_target = 0.0;
  if (const auto v = measure_translation_speed(r.checkpoint.policy, probe))
    r.checkpoint.scalars["translation_speed"] = *v;
  r.checkpoint.scalars["rate_cap"] = env.rate_cap;
  r.checkpoint.strings["config"] = ctx.cfg.resolved_json;
  save_checkpoint(r.checkpoint, dir / "policy.json");

  Csv csv(dir / "learning_curve.csv", "episode,reward");
  for (const auto& p : r.curve) csv.row(p.episode, p.reward);
  return {std::move(r.checkpoint), std::move(r.curve)};
}

json train_command(Context& ctx) {
  std::optional<Checkpoint> resume;
  if (ctx.checkpoint) resume = load_checkpoint(*ctx.checkpoint);
  const TrainedCell cell = train_into(ctx, ctx.out, ctx.cfg.train, ctx.cfg.episode, ctx.cfg.reward,
                                      resume ? &*resume : nullptr);
  ctx.outputs.insert(ctx.outputs.end(), {"policy.json", "learning_curve.csv", "checkpoints/"});
  json summary{{"episodes", cell.checkpoint.episodes},
               {"updates", cell.checkpoint.updates},
               {"reward_mode", to_string(ctx.cfg.reward.mode)}};
  if (const auto it = cell.checkpoint.scalars.find("translation_speed");
      it != cell.checkpoint.scalars.end())
    summary["translation_speed"] = it->second;
  write_json(ctx.file("train_summary.json"), summary);
  return summary;
}

json evaluation_json(const PolicyEvaluation& ev, std::uint64_t seed) {
  json starts = json::array();
  for (const auto& s : ev.starts) {
    json j{{"theta2", s.theta2}};
    if (s.metrics) {
      j["speed"] = s.metrics->speed;
      j["efficiency"] = s.metrics->efficiency;
      j["mean_power"] = s.metrics->mean_power;
      j["boundary_index"] = s.metrics->boundary;
    } else {
      j["boundary_index"] = nullptr;
    }
    starts.push_back(j);
  }
  const auto wins = std::count_if(ev.success.trials.begin(), ev.success.trials.end(),
                                  [](const TrialResult& t) { return t.success; });
  json out{{"success_rate", ev.success.rate},
           {"trials", ev.success.trials.size()},
           {"successes", wins},
           {"seed", seed},
           {"starts", starts}};
  if (ev.measured) {
    out["speed"] = ev.mean_speed;
    out["efficiency"] = ev.mean_efficiency;
  }
  return out;
}

json evaluate_command(Context& ctx) {
  const Checkpoint ckpt = require_checkpoint(ctx);
  const auto& cfg = ctx.cfg;
  const Controller ctl = deterministic_controller(ckpt.policy, cfg.episode.rate_cap);
  const PolicyEvaluation ev = evaluate_policy(ctl, cfg.episode, cfg.evaluate.success,
                                              cfg.evaluate.start_headings, cfg.seed, cfg.workers);
  for (std::size_t i = 0; i < ev.starts.size(); ++i) {
    const std::string tag = std::to_string(i);
    write_trajectory(ctx, "trajectory_" + tag + ".csv", ev.starts[i].run);
    write_smoothed(ctx, "smoothed_" + tag + ".csv", ev.starts[i].run, cfg.episode.theta_target,
                   cfg.evaluate.success);
  }
  json summary = evaluation_json(ev, cfg.seed);
  if (!ev.starts.empty()) {
    try {
      const auto& first = ev.starts.front();
      const std::size_t from = first.metrics ? first.metrics->boundary : first.run.states.size() / 2;
      const StrokeLoop loop = stroke_loop(first.run, from);
      summary["stroke_period_steps"] = loop.period_steps;
      summary["stroke_area"] = loop.area;
    } catch (const InvalidArgumentError&) {
    }
  }
  write_json(ctx.file("summary.json"), summary);
  ctx.log << "success rate " << num(ev.success.rate) << " over " << ev.success.trials.size()
          << " trials\n";
  return summary;
}

json navigate_command(Context& ctx) {
  const Checkpoint ckpt = require_checkpoint(ctx);
  const auto& cfg = ctx.cfg;
  const Controller ctl = deterministic_controller(ckpt.policy, cfg.episode.rate_cap);
  const CourseResult r = trace_course(ctl, cfg.navigate.course, cfg.navigate.start, cfg.episode);
  write_trajectory(ctx, "swimmer.csv", r.run);
  {
    Csv csv(ctx.file("waypoints.csv"), "index,x,y,arrival_step");
    for (std::size_t i = 0; i < cfg.navigate.course.points.size(); ++i) {
      const auto& p = cfg.navigate.course.points[i];
      csv.row(i, p.x, p.y,
              i < r.arrival_steps.size() ? std::to_string(r.arrival_steps[i]) : std::string());
    }
  }
  json outcome{{"completed", r.completed},
               {"reached", r.arrival_steps.size()},
               {"waypoints", cfg.navigate.course.points.size()},
               {"arrival_steps", r.arrival_steps},
               {"steps", r.run.steps()},
               {"final_distance", r.final_distance}};
  outcome["budget_exhausted_at"] = r.exhausted_at ? json(*r.exhausted_at) : json(nullptr);
  write_json(ctx.file("outcome.json"), outcome);
  ctx.log << "reached " << r.arrival_steps.size() << "/" << cfg.navigate.course.points.size()
          << " waypoints\n";
  return outcome;
}

json pursue_command(Context& ctx) {
  const Checkpoint ckpt = require_checkpoint(ctx);
  const auto& cfg = ctx.cfg;
  const auto& pc = cfg.pursue;
  double speed = pc.speed.value_or(0.0);
  std::optional<double> v_m;
  if (!pc.speed && pc.speed_ratio > 0.0) {
    if (const auto it = ckpt.scalars.find("translation_speed"); it != ckpt.scalars.end()) {
      v_m = it->second;
    } else {
      EpisodeConfig probe = cfg.episode;
      probe.theta_target = 0.0;
      v_m = measure_translation_speed(ckpt.policy, probe);
    }
    if (!v_m) throw CheckpointError("checkpoint policy has no measurable translation speed");
    speed = pc.speed_ratio * *v_m;
  }
  MovingTarget target{pc.target_position, Vec2::polar(pc.target_angle), speed, pc.diffusivity};
  Rng rng = make_rng(cfg.seed, Stream::target);
  const Controller ctl = deterministic_controller(ckpt.policy, cfg.episode.rate_cap);
  const PursuitResult r = pursue(ctl, target, pc.start, cfg.episode, pc.pursuit, gaussian_noise(rng));
  {
    Csv csv(ctx.file("pursuit.csv"), "step,swimmer_x,swimmer_y,target_x,target_y,distance");
    for (std::size_t k = 0; k < r.distance.size(); ++k)
      csv.row(k, r.run.centroids[k].x, r.run.centroids[k].y, r.target_path[k].x,
              r.target_path[k].y, r.distance[k]);
  }
  json outcome{{"captured", r.captured},
               {"target_speed", speed},
               {"initial_distance", r.initial_distance},
               {"min_distance", r.min_distance},
               {"final_distance", r.final_distance},
               {"final_quarter_median_distance", r.final_quarter_median},
               {"steps", r.run.steps()}};
  outcome["capture_step"] = r.capture_step ? json(*r.capture_step) : json(nullptr);
  outcome["v_m"] = v_m ? json(*v_m) : json(nullptr);
  write_json(ctx.file("outcome.json"), outcome);
  ctx.log << (r.captured ? "captured at step " + std::to_string(*r.capture_step)
                         : "not captured; final distance " + num(r.final_distance))
          << '\n';
  return outcome;
}

json sweep_command(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& sw = cfg.sweep;
  json cells = json::array();
  Csv csv(ctx.file("sweep.csv"), "value,status,success_rate,speed,efficiency");
  for (double value : sw.values) {
    const std::string tag = sw.parameter + "_" + num(value);
    json cell{{"parameter", sw.parameter}, {"value", value}, {"directory", tag}};
    try {
      EpisodeConfig env = cfg.episode;
      RewardConfig reward = cfg.reward;
      TrainConfig tc = cfg.train;
      if (sw.parameter == "c") {
        reward = value == 0.0 ? RewardConfig::vfs(cfg.reward.b) : RewardConfig::eas(cfg.reward.b, value);
      } else {
        env.steps = static_cast<int>(value);
        if (env.steps != value) throw InvalidArgumentError("N_s values must be integers");
      }
      tc.episodes = reward.mode == RewardMode::vfs ? sw.vfs_episodes : sw.eas_episodes;
      cell["episodes"] = tc.episodes;
      cell["reward_mode"] = to_string(reward.mode);
      ctx.log << "sweep cell " << tag << ": training " << tc.episodes << " episodes\n";
      const TrainedCell trained = train_into(ctx, ctx.out / tag, tc, env, reward, nullptr);
      EpisodeConfig eval_env = cfg.episode;
      const Controller ctl = deterministic_controller(trained.checkpoint.policy, eval_env.rate_cap);
      const PolicyEvaluation ev = evaluate_policy(ctl, eval_env, cfg.evaluate.success,
                                                  cfg.evaluate.start_headings, cfg.seed, cfg.workers);
      const json summary = evaluation_json(ev, cfg.seed);
      write_json(ctx.out / tag / "summary.json", summary);
      cell["status"] = "ok";
      cell["success_rate"] = ev.success.rate;
      cell["speed"] = ev.measured ? json(ev.mean_speed) : json(nullptr);
      cell["efficiency"] = ev.measured ? json(ev.mean_efficiency) : json(nullptr);
      csv.row(value, "ok", ev.success.rate, ev.measured ? num(ev.mean_speed) : "",
              ev.measured ? num(ev.mean_efficiency) : "");
    } catch (const std::exception& e) {
      cell["status"] = "error";
      cell["error"] = e.what();
      csv.row(value, "error", std::string(), std::string(), std::string());
      ctx.log << "sweep cell " << tag << " failed: " << e.what() << '\n';
    }
    cells.push_back(cell);
  }
  const json summary{{"parameter", sw.parameter}, {"cells", cells}};
  write_json(ctx.file("sweep.json"), summary);
  return summary;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string version() { return TLSWIM_VERSION; }

ExitCode exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return ExitCode::usage;
  if (dynamic_cast<const CheckpointError*>(&e)) return ExitCode::checkpoint;
  if (dynamic_cast<const SingularSystemError*>(&e) || dynamic_cast<const DivergedUpdateError*>(&e))
    return ExitCode::numerical;
  return ExitCode::failure;
}

std::optional<double> measure_translation_speed(const nn::GaussianPolicy& policy,
                                                const EpisodeConfig& env) {
  const Controller ctl = deterministic_controller(policy, env.rate_cap);
  const SwimmerState start = straight_start(std::numbers::pi / 3, env.x1);
  const Rollout run = rollout(ctl, start, env, kEvaluationSteps);
  try {
    return translation_metrics(run, env.theta_target, env.gamma).speed;
  } catch (const InvalidArgumentError&) {
    return std::nullopt;
  }
}

int run(const RunRequest& request) {
  std::ostream& log = request.log ? *request.log : std::cerr;
  const auto& names = commands();
  if (std::find(names.begin(), names.end(), request.command) == names.end()) {
    log << "error: unknown command '" << request.command << "'\n";
    return static_cast<int>(ExitCode::usage);
  }

  AppConfig cfg;
  try {
    cfg = load_config(request.config, request.overrides, request.env);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what();
    if (e.line() > 0) log << " (line " << e.line() << ")";
    log << '\n';
    return static_cast<int>(ExitCode::usage);
  }

  const fs::path out = cfg.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    log << "error: cannot create output directory " << out << ": " << ec.message() << '\n';
    return static_cast<int>(ExitCode::usage);
  }

  Context ctx{cfg, out, log, request.checkpoint, {}};
  const auto started = std::chrono::steady_clock::now();
  json manifest{{"command", request.command},
                {"version", version()},
                {"seed", cfg.seed},
                {"workers", cfg.workers},
                {"started_at", utc_now()},
                {"config", json::parse(cfg.resolved_json)}};
  if (request.config) manifest["config_file"] = fs::absolute(*request.config).string();
  if (request.checkpoint) manifest["checkpoint"] = fs::absolute(*request.checkpoint).string();

  ExitCode code = ExitCode::ok;
  try {
    json result;
    if (request.command == "simulate-gait") result = simulate_gait(ctx);
    else if (request.command == "train") result = train_command(ctx);
    else if (request.command == "evaluate") result = evaluate_command(ctx);
    else if (request.command == "navigate") result = navigate_command(ctx);
    else if (request.command == "pursue") result = pursue_command(ctx);
    else result = sweep_command(ctx);
    manifest["status"] = "ok";
    manifest["result"] = result;
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    manifest["status"] = "error";
    manifest["error"] = e.what();
    log << "error: " << e.what() << '\n';
  }
  manifest["exit_code"] = static_cast<int>(code);
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest["outputs"] = ctx.outputs;
  try {
    write_json(out / "manifest.json", manifest);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    if (code == ExitCode::ok) code = ExitCode::failure;
  }
  return static_cast<int>(code);
}

}  // namespace tlswim
