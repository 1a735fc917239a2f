#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gsmn {

// Error categories map to distinct CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DataError(msg);
}

constexpr double kPi = 3.14159265358979323846;

// Wrap angle to (-pi, pi].
template <typename T>
inline T wrap_angle(T a) {
  a = std::fmod(a, T(2) * T(kPi));
  if (a <= -T(kPi)) a += T(2) * T(kPi);
  if (a > T(kPi)) a -= T(2) * T(kPi);
  return a;
}

template <typename T>
inline T deg2rad(T d) {
  return d * T(kPi) / T(180);
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
  Vec2 normalized() const {
    double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0};
  }
  // 90 degree counter-clockwise rotation.
  Vec2 perp_ccw() const { return {-y, x}; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

}  // namespace gsmn
