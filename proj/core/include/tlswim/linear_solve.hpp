#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace tlswim::linalg {

// LU factorization with partial (row) pivoting for small fixed-size systems,
// plus a Hager-style estimate of the 1-norm condition number. Factorization
// never throws; callers decide what condition estimate is acceptable.
template <int N>
class PivotedLu {
 public:
  using Matrix = Eigen::Matrix<double, N, N>;
  using Vector = Eigen::Matrix<double, N, 1>;

  explicit PivotedLu(const Matrix& a) : lu_(a) {
    anorm_ = a.cwiseAbs().colwise().sum().maxCoeff();
    for (int i = 0; i < N; ++i) perm_[i] = i;
    for (int k = 0; k < N; ++k) {
      int p = k;
      double best = std::abs(lu_(k, k));
      for (int i = k + 1; i < N; ++i) {
        const double v = std::abs(lu_(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (p != k) {
        lu_.row(p).swap(lu_.row(k));
        std::swap(perm_[p], perm_[k]);
      }
      if (best == 0.0) {
        singular_ = true;
        continue;
      }
      const double inv = 1.0 / lu_(k, k);
      for (int i = k + 1; i < N; ++i) {
        const double m = lu_(i, k) * inv;
        lu_(i, k) = m;
        if (m == 0.0) continue;
        for (int j = k + 1; j < N; ++j) lu_(i, j) -= m * lu_(k, j);
      }
    }
  }

  bool exactly_singular() const { return singular_; }

  // Solves A x = b.
  Vector solve(const Vector& b) const {
    Vector x;
    for (int i = 0; i < N; ++i) x[i] = b[perm_[i]];
    for (int i = 1; i < N; ++i)
      for (int j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (int i = N - 1; i >= 0; --i) {
      for (int j = i + 1; j < N; ++j) x[i] -= lu_(i, j) * x[j];
      x[i] /= lu_(i, i);
    }
    return x;
  }

  // Solves A^T x = b.
  Vector solve_transpose(const Vector& b) const {
    Vector w = b;
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < i; ++j) w[i] -= lu_(j, i) * w[j];
      w[i] /= lu_(i, i);
    }
    for (int i = N - 1; i >= 0; --i)
      for (int j = i + 1; j < N; ++j) w[i] -= lu_(j, i) * w[j];
    Vector x;
    for (int i = 0; i < N; ++i) x[perm_[i]] = w[i];
    return x;
  }

  // Estimate of ||A||_1 * ||A^-1||_1 (Hager 1984). Returns +inf for an
  // exactly singular factorization.
  double condition_estimate() const {
    if (singular_) return std::numeric_limits<double>::infinity();
    Vector x = Vector::Constant(1.0 / N);
    double estimate = 0.0;
    for (int iter = 0; iter < 5; ++iter) {
      const Vector y = solve(x);
      estimate = y.cwiseAbs().sum();
      Vector xi;
      for (int i = 0; i < N; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
      const Vector z = solve_transpose(xi);
      int j = 0;
      const double zmax = z.cwiseAbs().maxCoeff(&j);
      if (zmax <= z.dot(x)) break;
      x.setZero();
      x[j] = 1.0;
    }
    return anorm_ * estimate;
  }

 private:
  Matrix lu_;
  std::array<int, N> perm_{};
  double anorm_ = 0.0;
  bool singular_ = false;
};

extern template class PivotedLu<9>;

}  // namespace tlswim::linalg
