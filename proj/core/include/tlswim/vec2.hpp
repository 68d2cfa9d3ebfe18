#pragma once

#include <cmath>

namespace tlswim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }

  static Vec2 polar(double angle) { return {std::cos(angle), std::sin(angle)}; }
};

// Counter-clockwise rotation of v by angle.
inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps an angle onto (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  a = std::remainder(a, two_pi);
  return a <= -two_pi / 2 ? a + two_pi : a;
}

}  // namespace tlswim
