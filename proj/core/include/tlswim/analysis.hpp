#pragma once

// Post-processing of swimmer rollouts: moving-average path smoothing, the
// averaged orientation theta_s, steering/translation stage labels, speed and
// efficiency over the translation stage, and randomized success trials.

#include "tlswim/environment.hpp"
#include "tlswim/network.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tlswim {

inline constexpr int kSmoothingHalfWindow = 35;  // 71-sample window
inline constexpr double kStageThreshold = 2.5 * std::numbers::pi / 180.0;
inline constexpr int kEvaluationSteps = 1500;

// Maps an observation to joint rates. Must be safe to call concurrently.
using Controller = std::function<JointRates(const Observation&)>;

// Mean action of the policy, clamped to the rate cap.
Controller deterministic_controller(const nn::GaussianPolicy& policy,
                                    double rate_cap = kDefaultRateCap);
Controller zero_controller();

struct Rollout {
  double dt = 0.1;
  std::vector<SwimmerState> states;  // steps + 1 entries
  std::vector<Vec2> centroids;       // steps + 1 entries
  std::vector<double> work;          // per step
  std::vector<JointRates> actions;   // applied rates per step

  std::size_t steps() const { return work.size(); }
  // Mean power over step k.
  double power(std::size_t k) const { return work[k] / dt; }
};

Rollout rollout(const Controller& controller, const SwimmerState& start, const EpisodeConfig& env,
                int steps);

struct SmoothedPath {
  std::vector<Vec2> points;
  int half_window = kSmoothingHalfWindow;  // point i is centred on raw index i + half_window
};

// Centred uniform moving average. Throws InvalidArgumentError unless
// raw.size() > 2 * half_window.
SmoothedPath smooth_path(std::span<const Vec2> raw, int half_window = kSmoothingHalfWindow);

// Direction of each consecutive difference, measured from theta_target and
// wrapped to (-pi, pi]. Repeated points give std::nullopt.
std::vector<std::optional<double>> slope_angle(const SmoothedPath& path, double theta_target = 0.0);

enum class Stage { steering, translation };

struct StageLabels {
  std::vector<Stage> labels;
  // First index after which every label is translation; nullopt when the
  // series never settles.
  std::optional<std::size_t> boundary;
};

// Undefined slopes count as steering.
StageLabels classify_stages(std::span<const std::optional<double>> theta_s,
                            double threshold = kStageThreshold);

struct TranslationMetrics {
  std::size_t boundary = 0;  // index into the slope series
  std::size_t points = 0;    // smoothed points in the translation stage
  double speed = 0.0;        // along the target direction
  double mean_power = 0.0;
  double efficiency = 0.0;
  double mean_abs_theta_s = 0.0;
};

// Speed and efficiency over the translation stage of the smoothed path.
// Throws InvalidArgumentError if no translation stage of at least two points
// exists.
TranslationMetrics translation_metrics(const Rollout& run, double theta_target,
                                       double gamma = kDefaultGamma,
                                       int half_window = kSmoothingHalfWindow,
                                       double threshold = kStageThreshold);

struct TrialResult {
  bool success = false;
  std::optional<std::size_t> boundary;
  double mean_abs_theta_s = 0.0;  // over translation-labelled points
};

// A trial succeeds when the slope series settles into translation and the
// mean |theta_s| over translation-labelled points is below the threshold.
TrialResult judge_trial(const Rollout& run, double theta_target,
                        int half_window = kSmoothingHalfWindow,
                        double threshold = kStageThreshold);

struct SuccessConfig {
  int trials = 100;
  int steps = kEvaluationSteps;
  int half_window = kSmoothingHalfWindow;
  double threshold = kStageThreshold;
};

struct SuccessReport {
  double rate = 0.0;
  std::vector<TrialResult> trials;
};

// Trial t starts from a random state drawn from the evaluation stream
// (seed, t). Trials are spread over `workers` threads; the result does not
// depend on the worker count.
SuccessReport success_rate(const Controller& controller, const EpisodeConfig& env,
                           const SuccessConfig& config, std::uint64_t seed, int workers = 1);

struct StrokeLoop {
  int period_steps = 0;
  double area = 0.0;  // unsigned area enclosed in the (alpha1, alpha2) plane
  std::vector<std::array<double, 2>> points;
};

// Dominant period of a sampled signal from its autocorrelation; 0 if none.
int estimate_period(std::span<const double> signal, int min_period = 4);

// Extracts the last full stroke cycle of the joint-angle trajectory over
// states[first, end) and measures its enclosed area (shoelace formula).
// Throws InvalidArgumentError if no periodic stroke is found.
StrokeLoop stroke_loop(const Rollout& run, std::size_t first = 0);

// Straight swimmer with every link at heading theta2.
SwimmerState straight_start(double theta2, Vec2 x1 = {1.0, 0.0});

struct StartEvaluation {
  double theta2 = 0.0;
  Rollout run;
  std::optional<TranslationMetrics> metrics;  // empty if no translation stage
};

struct PolicyEvaluation {
  SuccessReport success;
  std::vector<StartEvaluation> starts;
  int measured = 0;  // starts with a translation stage
  double mean_speed = 0.0;
  double mean_efficiency = 0.0;
};

// Success trials plus translation-stage traces from straight starts at the
// given headings.
PolicyEvaluation evaluate_policy(const Controller& controller, const EpisodeConfig& env,
                                 const SuccessConfig& config,
                                 std::span<const double> start_headings, std::uint64_t seed,
                                 int workers = 1);

}  // namespace tlswim
