#include "tlswim/config.hpp"

#include "tlswim/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace tlswim {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

json vec_json(const Vec2& v) { return json::array({v.x, v.y}); }

json state_json(const SwimmerState& s) {
  return {{"x1", vec_json(s.x1)}, {"theta", s.theta}};
}

json defaults_json() {
  const AppConfig d;
  json j;
  j["seed"] = d.seed;
  j["workers"] = d.workers;
  j["out"] = d.out;
  j["episode"] = {
      {"steps", d.episode.steps},       {"dt", d.episode.dt},
      {"substeps", d.episode.substeps}, {"theta_target", d.episode.theta_target},
      {"rate_cap", d.episode.rate_cap}, {"gamma", d.episode.gamma},
      {"randomize_init", d.episode.randomize_init},
      {"x1", vec_json(d.episode.x1)},   {"theta", d.episode.fixed_theta},
  };
  j["reward"] = {{"mode", to_string(d.reward.mode)}, {"b", d.reward.b}, {"c", d.reward.c}};
  j["train"] = {
      {"episodes", d.train.episodes},
      {"episodes_per_update", d.train.episodes_per_update},
      {"discount", d.train.discount},
      {"clip", d.train.clip},
      {"entropy_weight", d.train.entropy_weight},
      {"epochs", d.train.epochs},
      {"minibatch", d.train.minibatch},
      {"learning_rate", d.train.learning_rate},
      {"hidden", d.train.hidden},
      {"normalize_advantages", d.train.normalize_advantages},
      {"checkpoint_every", d.train.checkpoint_every},
  };
  j["gait"] = {
      {"kind", to_string(d.gait.kind)}, {"alpha_min", d.gait.alpha_min},
      {"alpha_max", d.gait.alpha_max},  {"period", d.gait.period},
      {"cycles", d.gait.cycles},        {"dt", d.gait.dt},
      {"theta2", d.gait.theta2},
  };
  j["evaluate"] = {
      {"trials", d.evaluate.success.trials},
      {"steps", d.evaluate.success.steps},
      {"half_window", d.evaluate.success.half_window},
      {"threshold_deg", 2.5},
      {"start_headings", d.evaluate.start_headings},
  };
  j["navigate"] = {
      {"course", "star"},
      {"star", {{"center", json::array({1.5, 0.5})}, {"radius", 1.0}, {"start_angle", std::numbers::pi / 2}}},
      {"points", json::array()},
      {"threshold", d.navigate.course.threshold},
      {"budget_per_waypoint", d.navigate.course.budget_per_waypoint},
      {"start", state_json(d.navigate.start)},
  };
  j["pursue"] = {
      {"target_position", vec_json(d.pursue.target_position)},
      {"target_angle", d.pursue.target_angle},
      {"speed", nullptr},
      {"speed_ratio", d.pursue.speed_ratio},
      {"diffusivity", d.pursue.diffusivity},
      {"capture_threshold", d.pursue.pursuit.capture_threshold},
      {"budget", d.pursue.pursuit.budget},
      {"start", state_json(d.pursue.start)},
  };
  j["sweep"] = {
      {"parameter", d.sweep.parameter},
      {"values", d.sweep.values},
      {"vfs_episodes", d.sweep.vfs_episodes},
      {"eas_episodes", d.sweep.eas_episodes},
  };
  return j;
}

int line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of a dotted field in the source text, found by locating each key in
// turn; 0 when the field is not present in the text.
int field_line(const std::string& text, const std::string& field) {
  if (text.empty()) return 0;
  std::size_t pos = 0;
  std::stringstream ss(field);
  std::string part;
  while (std::getline(ss, part, '.')) {
    const std::size_t found = text.find('"' + part + '"', pos);
    if (found == std::string::npos) return 0;
    pos = found + part.size() + 2;
  }
  return line_at(text, pos);
}

bool same_kind(const json& def, const json& val) {
  if (def.is_null()) return true;
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return false;
}

void merge_checked(json& base, const json& layer, const std::string& prefix, const std::string& text) {
  for (auto it = layer.begin(); it != layer.end(); ++it) {
    const std::string field = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key()))
      throw ConfigError("unknown config field '" + field + "'", field, field_line(text, field));
    json& target = base[it.key()];
    // Courses may be a named shape or an explicit point list.
    if (field == "navigate.course" && (it->is_string() || it->is_array())) {
      target = *it;
      continue;
    }
    if (!same_kind(target, *it))
      throw ConfigError("config field '" + field + "' has the wrong type", field, field_line(text, field));
    if (target.is_object()) {
      merge_checked(target, *it, field, text);
    } else {
      target = *it;
    }
  }
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

void apply_environment(json& cfg, const EnvLookup& env) {
  if (!env) return;
  auto apply = [&](json& slot, const std::string& name, const std::string& field) {
    const auto value = env(name);
    if (!value) return;
    json parsed = json::parse(*value, nullptr, false);
    if (parsed.is_discarded()) parsed = *value;
    if (!same_kind(slot, parsed))
      throw ConfigError("environment variable " + name + " has the wrong type for '" + field + "'",
                        field, 0);
    slot = parsed;
  };
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (it->is_object()) {
      for (auto kt = it->begin(); kt != it->end(); ++kt) {
        if (kt->is_object()) continue;
        apply(*kt, "TLSWIM_" + upper(it.key()) + "_" + upper(kt.key()), it.key() + "." + kt.key());
      }
    } else {
      apply(*it, "TLSWIM_" + upper(it.key()), it.key());
    }
  }
}

class Reader {
 public:
  Reader(const json& root, const std::string& text) : root_(root), text_(text) {}

  const json& node(const std::string& field) const {
    const json* j = &root_;
    std::stringstream ss(field);
    std::string part;
    while (std::getline(ss, part, '.')) j = &j->at(part);
    return *j;
  }

  template <typename T>
  T get(const std::string& field) const {
    try {
      return node(field).get<T>();
    } catch (const json::exception& e) {
      fail(field, std::string("invalid value: ") + e.what());
    }
  }

  Vec2 vec(const std::string& field) const {
    const auto v = get<std::vector<double>>(field);
    if (v.size() != 2) fail(field, "expected a two-element array");
    return {v[0], v[1]};
  }

  std::array<double, 3> triple(const std::string& field) const {
    const auto v = get<std::vector<double>>(field);
    if (v.size() != 3) fail(field, "expected a three-element array");
    return {v[0], v[1], v[2]};
  }

  SwimmerState state(const std::string& field) const {
    return {vec(field + ".x1"), triple(field + ".theta")};
  }

  [[noreturn]] void fail(const std::string& field, const std::string& why) const {
    throw ConfigError("config field '" + field + "': " + why, field, field_line(text_, field));
  }

  // Runs a validator, reporting failures against `field`.
  template <typename F>
  void check(const std::string& field, F&& validate) const {
    try {
      validate();
    } catch (const InvalidArgumentError& e) {
      fail(field, e.what());
    }
  }

 private:
  const json& root_;
  const std::string& text_;
};

AppConfig to_config(const json& j, const std::string& text) {
  const Reader r(j, text);
  AppConfig c;
  c.seed = r.get<std::uint64_t>("seed");
  c.workers = r.get<int>("workers");
  if (c.workers < 1) r.fail("workers", "must be at least 1");
  c.out = r.get<std::string>("out");

  auto& e = c.episode;
  e.steps = r.get<int>("episode.steps");
  e.dt = r.get<double>("episode.dt");
  e.substeps = r.get<int>("episode.substeps");
  e.theta_target = r.get<double>("episode.theta_target");
  e.rate_cap = r.get<double>("episode.rate_cap");
  e.gamma = r.get<double>("episode.gamma");
  e.randomize_init = r.get<bool>("episode.randomize_init");
  e.x1 = r.vec("episode.x1");
  e.fixed_theta = r.triple("episode.theta");
  r.check("episode", [&] { e.validate(); });

  r.check("reward.mode", [&] { c.reward.mode = reward_mode_from_string(r.get<std::string>("reward.mode")); });
  c.reward.b = r.get<double>("reward.b");
  c.reward.c = r.get<double>("reward.c");
  r.check("reward", [&] { c.reward.validate(); });

  auto& t = c.train;
  t.episodes = r.get<long long>("train.episodes");
  t.episodes_per_update = r.get<int>("train.episodes_per_update");
  t.discount = r.get<double>("train.discount");
  t.clip = r.get<double>("train.clip");
  t.entropy_weight = r.get<double>("train.entropy_weight");
  t.epochs = r.get<int>("train.epochs");
  t.minibatch = r.get<int>("train.minibatch");
  t.learning_rate = r.get<double>("train.learning_rate");
  t.hidden = r.get<std::vector<int>>("train.hidden");
  t.normalize_advantages = r.get<bool>("train.normalize_advantages");
  t.checkpoint_every = r.get<int>("train.checkpoint_every");
  t.workers = c.workers;
  r.check("train", [&] { t.validate(); });

  auto& g = c.gait;
  r.check("gait.kind", [&] { g.kind = gait_kind_from_string(r.get<std::string>("gait.kind")); });
  g.alpha_min = r.get<double>("gait.alpha_min");
  g.alpha_max = r.get<double>("gait.alpha_max");
  g.period = r.get<double>("gait.period");
  g.cycles = r.get<int>("gait.cycles");
  g.dt = r.get<double>("gait.dt");
  g.theta2 = r.get<double>("gait.theta2");
  if (g.cycles < 1) r.fail("gait.cycles", "must be at least 1");
  if (!(g.dt > 0.0)) r.fail("gait.dt", "must be positive");
  r.check("gait", [&] { (void)g.spec(); });

  auto& ev = c.evaluate;
  ev.success.trials = r.get<int>("evaluate.trials");
  ev.success.steps = r.get<int>("evaluate.steps");
  ev.success.half_window = r.get<int>("evaluate.half_window");
  ev.success.threshold = r.get<double>("evaluate.threshold_deg") * kDeg;
  ev.start_headings = r.get<std::vector<double>>("evaluate.start_headings");
  if (ev.success.trials < 1) r.fail("evaluate.trials", "must be at least 1");
  if (ev.success.half_window < 0) r.fail("evaluate.half_window", "must be non-negative");
  if (ev.success.steps <= 2 * ev.success.half_window + 1)
    r.fail("evaluate.steps", "must exceed the smoothing window");
  if (!(ev.success.threshold > 0.0)) r.fail("evaluate.threshold_deg", "must be positive");

  auto& nav = c.navigate;
  const json& course = r.node("navigate.course");
  if (course.is_string()) {
    const auto name = course.get<std::string>();
    if (name == "star") {
      r.check("navigate.star", [&] {
        nav.course = star_course(r.vec("navigate.star.center"), r.get<double>("navigate.star.radius"),
                                 r.get<double>("navigate.star.start_angle"));
      });
    } else if (name == "points") {
      nav.course.points.clear();
      for (std::size_t i = 0; i < r.node("navigate.points").size(); ++i) {
        const auto p = r.node("navigate.points")[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          r.fail("navigate.points", "each point must be an [x, y] pair");
        nav.course.points.push_back({p[0].get<double>(), p[1].get<double>()});
      }
    } else {
      r.fail("navigate.course", "expected \"star\", \"points\" or a list of points");
    }
  } else {
    nav.course.points.clear();
    for (const auto& p : course) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        r.fail("navigate.course", "each point must be an [x, y] pair");
      nav.course.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  }
  nav.course.threshold = r.get<double>("navigate.threshold");
  nav.course.budget_per_waypoint = r.get<int>("navigate.budget_per_waypoint");
  nav.start = r.state("navigate.start");
  r.check("navigate", [&] { nav.course.validate(); });

  auto& pu = c.pursue;
  pu.target_position = r.vec("pursue.target_position");
  pu.target_angle = r.get<double>("pursue.target_angle");
  if (!r.node("pursue.speed").is_null()) pu.speed = r.get<double>("pursue.speed");
  pu.speed_ratio = r.get<double>("pursue.speed_ratio");
  pu.diffusivity = r.get<double>("pursue.diffusivity");
  pu.pursuit.capture_threshold = r.get<double>("pursue.capture_threshold");
  pu.pursuit.budget = r.get<int>("pursue.budget");
  pu.start = r.state("pursue.start");
  if (pu.speed && !(*pu.speed >= 0.0)) r.fail("pursue.speed", "must be non-negative");
  if (!(pu.speed_ratio >= 0.0)) r.fail("pursue.speed_ratio", "must be non-negative");
  if (!(pu.diffusivity >= 0.0)) r.fail("pursue.diffusivity", "must be non-negative");
  if (!(pu.pursuit.capture_threshold > 0.0)) r.fail("pursue.capture_threshold", "must be positive");
  if (pu.pursuit.budget < 1) r.fail("pursue.budget", "must be at least 1");

  auto& sw = c.sweep;
  sw.parameter = r.get<std::string>("sweep.parameter");
  if (sw.parameter != "c" && sw.parameter != "N_s")
    r.fail("sweep.parameter", "expected \"c\" or \"N_s\"");
  sw.values = r.get<std::vector<double>>("sweep.values");
  if (sw.values.empty()) r.fail("sweep.values", "must not be empty");
  sw.vfs_episodes = r.get<long long>("sweep.vfs_episodes");
  sw.eas_episodes = r.get<long long>("sweep.eas_episodes");
  if (sw.vfs_episodes < 1) r.fail("sweep.vfs_episodes", "must be at least 1");
  if (sw.eas_episodes < 1) r.fail("sweep.eas_episodes", "must be at least 1");

  c.resolved_json = j.dump(2);
  return c;
}

}  // namespace

GaitSpec GaitRunConfig::spec() const {
  if (kind == GaitKind::custom) return rectangular_gait(alpha_min, alpha_max, period);
  return make_gait(kind, period);
}

EnvLookup process_environment() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

std::string default_config_json() { return defaults_json().dump(2); }

AppConfig parse_config(const std::string& text, const ConfigOverrides& overrides,
                       const EnvLookup& env) {
  json cfg = defaults_json();
  if (!text.empty()) {
    json file;
    try {
      file = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "<file>",
                        line_at(text, e.byte > 0 ? e.byte - 1 : 0));
    }
    if (!file.is_object()) throw ConfigError("config must be a JSON object", "<file>", 1);
    merge_checked(cfg, file, "", text);
  }
  apply_environment(cfg, env);
  if (overrides.seed) cfg["seed"] = *overrides.seed;
  if (overrides.workers) cfg["workers"] = *overrides.workers;
  if (overrides.out) cfg["out"] = *overrides.out;
  if (overrides.episodes) {
    cfg["train"]["episodes"] = *overrides.episodes;
    cfg["sweep"]["vfs_episodes"] = *overrides.episodes;
    cfg["sweep"]["eas_episodes"] = *overrides.episodes;
  }
  return to_config(cfg, text);
}

AppConfig load_config(const std::optional<std::filesystem::path>& file,
                      const ConfigOverrides& overrides, const EnvLookup& env) {
  std::string text;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string(), "<file>", 0);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_config(text, overrides, env);
}

}  // namespace tlswim
