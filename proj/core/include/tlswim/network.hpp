#pragma once

// Small dense actor-critic networks with hand-written reverse-mode gradients
// and an Adam optimizer. Parameters live in flat vectors so that optimizers,
// finite-difference checks and checkpoints all see the same layout.

#include "tlswim/environment.hpp"
#include "tlswim/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tlswim::nn {

enum class Activation { tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Multilayer perceptron architecture. Hidden layers use `activation`; the
// output layer is always linear. Per layer the flat parameter vector holds W
// (out x in, column-major) followed by b (out).
class Mlp {
 public:
  // Activations of every layer from a forward pass; [0] is the input.
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;
  };

  Mlp() = default;
  Mlp(std::vector<int> widths, Activation activation = Activation::tanh);

  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  std::size_t parameter_count() const { return parameter_count_; }

  // inputs: input_width x batch. Returns output_width x batch.
  Eigen::MatrixXd forward(std::span<const double> params, const Eigen::MatrixXd& inputs,
                          Tape* tape = nullptr) const;

  // Accumulates dLoss/dparams into `grad` given dLoss/doutput.
  void backward(std::span<const double> params, const Tape& tape,
                const Eigen::MatrixXd& d_output, std::span<double> grad) const;

  // Orthogonal initialization: hidden layers scaled by hidden_gain, the
  // output layer by output_gain; biases zero.
  void initialize(std::span<double> params, Rng& rng, double hidden_gain,
                  double output_gain) const;

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.widths_ == b.widths_ && a.activation_ == b.activation_;
  }

 private:
  std::vector<int> widths_;
  Activation activation_ = Activation::tanh;
  std::vector<std::size_t> offsets_;
  std::size_t parameter_count_ = 0;
};

inline constexpr int kObservationWidth = 4;
inline constexpr int kActionWidth = 2;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

Eigen::MatrixXd observations_to_matrix(std::span<const Observation> observations);

// Diagonal Gaussian policy with a state-independent log standard deviation.
// params = [network parameters..., log_std(2)].
struct GaussianPolicy {
  Mlp net;
  Eigen::VectorXd params;

  static GaussianPolicy create(const std::vector<int>& hidden, Rng& rng,
                               double initial_std = 0.5);

  std::span<const double> net_params() const {
    return {params.data(), net.parameter_count()};
  }
  Eigen::Vector2d log_std() const;
  void clamp_log_std();

  struct Output {
    Eigen::Vector2d mean;
    Eigen::Vector2d std;
  };
  Output forward(const Observation& obs) const;
};

struct ValueFunction {
  Mlp net;
  Eigen::VectorXd params;

  static ValueFunction create(const std::vector<int>& hidden, Rng& rng);

  double value(const Observation& obs) const;
  Eigen::VectorXd values(const Eigen::MatrixXd& observations) const;
};

struct ActionSample {
  Eigen::Vector2d raw;  // unclamped Gaussian draw
  JointRates action;    // raw clamped to the rate cap
  double log_prob = 0.0;  // density of the raw draw
};

ActionSample sample_action(const Eigen::Vector2d& mean, const Eigen::Vector2d& std, Rng& rng,
                           double rate_cap);

double gaussian_log_prob(const Eigen::Vector2d& x, const Eigen::Vector2d& mean,
                         const Eigen::Vector2d& log_std);

// Differential entropy of the diagonal Gaussian.
double gaussian_entropy(const Eigen::Vector2d& log_std);

class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t size, double learning_rate = 3e-4, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long steps = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

}  // namespace tlswim::nn
