#include "tlswim/network.hpp"

#include "tlswim/error.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tlswim::nn {
namespace {

using MapMatrix = Eigen::Map<const Eigen::MatrixXd>;
using MapVector = Eigen::Map<const Eigen::VectorXd>;

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

Eigen::MatrixXd orthogonal(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool tall = rows >= cols;
  const int n = tall ? rows : cols;
  const int k = tall ? cols : rows;
  Eigen::MatrixXd a(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k);
  for (int j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  if (tall) return q;
  return q.transpose();
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw InvalidArgumentError("unknown activation '" + name + "'");
}

Mlp::Mlp(std::vector<int> widths, Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  if (widths_.size() < 2) throw InvalidArgumentError("an MLP needs input and output widths");
  for (int w : widths_)
    if (w < 1) throw InvalidArgumentError("layer widths must be at least 1");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(parameter_count_);
    parameter_count_ += static_cast<std::size_t>(widths_[l + 1]) * (widths_[l] + 1);
  }
}

Eigen::MatrixXd Mlp::forward(std::span<const double> params, const Eigen::MatrixXd& inputs,
                             Tape* tape) const {
  if (params.size() < parameter_count_) throw InvalidArgumentError("parameter vector too short");
  if (inputs.rows() != input_width()) throw InvalidArgumentError("input width mismatch");
  const std::size_t layers = widths_.size() - 1;
  if (tape) {
    tape->activations.resize(layers + 1);
    tape->activations[0] = inputs;
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const MapMatrix W(params.data() + offsets_[l], out, in);
    const MapVector b(params.data() + offsets_[l] + static_cast<std::size_t>(out) * in, out);
    Eigen::MatrixXd z = W * a;
    z.colwise() += b;
    if (l + 1 < layers && activation_ == Activation::tanh) z = z.array().tanh();
    a = std::move(z);
    if (tape) tape->activations[l + 1] = a;
  }
  return a;
}

void Mlp::backward(std::span<const double> params, const Tape& tape,
                   const Eigen::MatrixXd& d_output, std::span<double> grad) const {
  const std::size_t layers = widths_.size() - 1;
  if (tape.activations.size() != layers + 1) throw InvalidArgumentError("tape does not match network");
  if (d_output.rows() != output_width() || d_output.cols() != tape.activations[0].cols())
    throw InvalidArgumentError("output gradient shape mismatch");
  if (grad.size() < parameter_count_ || params.size() < parameter_count_)
    throw InvalidArgumentError("gradient vector too short");

  Eigen::MatrixXd delta = d_output;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = widths_[l], out = widths_[l + 1];
    const Eigen::MatrixXd& a_prev = tape.activations[l];
    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + offsets_[l], out, in);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + offsets_[l] + static_cast<std::size_t>(out) * in,
                                   out);
    dW.noalias() += delta * a_prev.transpose();
    db += delta.rowwise().sum();
    if (l == 0) break;
    const MapMatrix W(params.data() + offsets_[l], out, in);
    Eigen::MatrixXd back = W.transpose() * delta;
    if (activation_ == Activation::tanh) back.array() *= 1.0 - a_prev.array().square();
    delta = std::move(back);
  }
}

void Mlp::initialize(std::span<double> params, Rng& rng, double hidden_gain,
                     double output_gain) const {
  const std::size_t layers = widths_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    const double gain = l + 1 == layers ? output_gain : hidden_gain;
    Eigen::Map<Eigen::MatrixXd> W(params.data() + offsets_[l], out, in);
    Eigen::Map<Eigen::VectorXd> b(params.data() + offsets_[l] + static_cast<std::size_t>(out) * in,
                                  out);
    W = gain * orthogonal(out, in, rng);
    b.setZero();
  }
}

Eigen::MatrixXd observations_to_matrix(std::span<const Observation> observations) {
  Eigen::MatrixXd m(kObservationWidth, static_cast<Eigen::Index>(observations.size()));
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    m.col(static_cast<Eigen::Index>(i)) << o.cos_theta_d, o.sin_theta_d, o.alpha1, o.alpha2;
  }
  return m;
}

GaussianPolicy GaussianPolicy::create(const std::vector<int>& hidden, Rng& rng,
                                      double initial_std) {
  std::vector<int> widths{kObservationWidth};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(kActionWidth);
  GaussianPolicy p{Mlp(widths), {}};
  p.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.net.parameter_count()) + kActionWidth);
  p.net.initialize({p.params.data(), p.net.parameter_count()}, rng, 1.0, 0.01);
  p.params.tail(kActionWidth).setConstant(std::log(initial_std));
  p.clamp_log_std();
  return p;
}

Eigen::Vector2d GaussianPolicy::log_std() const { return params.tail<kActionWidth>(); }

void GaussianPolicy::clamp_log_std() {
  auto tail = params.tail<kActionWidth>();
  for (int j = 0; j < kActionWidth; ++j) tail[j] = std::clamp(tail[j], kLogStdMin, kLogStdMax);
}

GaussianPolicy::Output GaussianPolicy::forward(const Observation& obs) const {
  const Eigen::MatrixXd x = observations_to_matrix(std::span(&obs, 1));
  const Eigen::MatrixXd mean = net.forward(net_params(), x);
  return {mean.col(0), log_std().array().exp()};
}

ValueFunction ValueFunction::create(const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> widths{kObservationWidth};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  ValueFunction v{Mlp(widths), {}};
  v.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.net.parameter_count()));
  v.net.initialize({v.params.data(), v.net.parameter_count()}, rng, 1.0, 1.0);
  return v;
}

double ValueFunction::value(const Observation& obs) const {
  return values(observations_to_matrix(std::span(&obs, 1)))[0];
}

Eigen::VectorXd ValueFunction::values(const Eigen::MatrixXd& observations) const {
  const Eigen::MatrixXd out =
      net.forward({params.data(), net.parameter_count()}, observations);
  return out.row(0).transpose();
}

ActionSample sample_action(const Eigen::Vector2d& mean, const Eigen::Vector2d& std, Rng& rng,
                           double rate_cap) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ActionSample s;
  for (int j = 0; j < kActionWidth; ++j) s.raw[j] = mean[j] + std[j] * normal(rng);
  s.log_prob = gaussian_log_prob(s.raw, mean, std.array().log());
  s.action = clamp_action({s.raw[0], s.raw[1]}, rate_cap);
  return s;
}

double gaussian_log_prob(const Eigen::Vector2d& x, const Eigen::Vector2d& mean,
                         const Eigen::Vector2d& log_std) {
  double lp = 0.0;
  for (int j = 0; j < kActionWidth; ++j) {
    const double z = (x[j] - mean[j]) * std::exp(-log_std[j]);
    lp += -0.5 * z * z - log_std[j] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const Eigen::Vector2d& log_std) {
  return log_std.sum() + kActionWidth * (0.5 + kHalfLog2Pi);
}

Adam::Adam(std::size_t size, double lr, double b1, double b2, double eps)
    : learning_rate(lr),
      beta1(b1),
      beta2(b2),
      epsilon(eps),
      m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size))) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != static_cast<std::size_t>(m.size()) || grad.size() != params.size())
    throw InvalidArgumentError("Adam state size does not match parameters");
  ++steps;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[i];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = m[k] / c1;
    const double v_hat = v[k] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

}  // namespace tlswim::nn
