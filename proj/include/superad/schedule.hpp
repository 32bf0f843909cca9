#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace superad {

struct ScheduleValue {
  double f = 0, df = 0, ddf = 0;
  double operator[](int order) const { return order == 0 ? f : order == 1 ? df : ddf; }
};

namespace detail {

// e^{-1/s} and its first two derivatives; zero for s <= 0.
inline std::array<double, 3> bump_g(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  double g = std::exp(-1.0 / s);
  double g1 = g / (s * s);
  double g2 = g * (1.0 / (s * s * s * s) - 2.0 / (s * s * s));
  return {g, g1, g2};
}

// Smooth 0 -> 1 transition on [0,1], flat to all orders at both ends.
inline ScheduleValue flat_switch(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  auto [a, a1, a2] = bump_g(s);
  auto [b, b1m, b2] = bump_g(1.0 - s);
  double b1 = -b1m;  // d/ds g(1-s)
  double den = a + b;
  double num = a1 * b - a * b1;
  double f = a / den;
  double f1 = num / (den * den);
  double num1 = a2 * b - a * b2;
  double den1 = 2.0 * den * (a1 + b1);
  double f2 = (num1 * den * den - num * den1) / (den * den * den * den);
  return {f, f1, f2};
}

// Integral of flat_switch over [0, s] by composite Gauss-Legendre quadrature.
inline double flat_switch_integral(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return (s - 1.0) + 0.5;
  static constexpr double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                                  -0.9061798459386640, 0.9061798459386640};
  static constexpr double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                  0.2369268850561891, 0.2369268850561891};
  const int panels = 64;
  double h = s / panels, total = 0.0;
  for (int p = 0; p < panels; ++p) {
    double mid = (p + 0.5) * h;
    for (int q = 0; q < 5; ++q) total += w[q] * flat_switch(mid + 0.5 * h * x[q]).f;
  }
  return 0.5 * h * total;
}

}  // namespace detail

// Scalar time profile. `duration` rescales time, s = t / duration.
//   constant      1
//   linear        s
//   flat_switch   f(s)
//   flat_cos      cos(angle f(s))       flat_sin  sin(angle f(s))
//   cos / sin     cos(angle s), sin(angle s)   (periodic, unclamped)
//   soft_ramp     integral of f: flat start, unit slope after s = 1
struct Schedule {
  enum class Kind { constant, linear, flat_switch, flat_cos, flat_sin, cos, sin, soft_ramp };
  Kind kind = Kind::constant;
  double angle = 1.0;
  double duration = 1.0;

  static Schedule parse(const std::string& name, double angle = 1.0, double duration = 1.0) {
    static const std::pair<const char*, Kind> table[] = {
        {"constant", Kind::constant}, {"linear", Kind::linear},     {"flat_switch", Kind::flat_switch},
        {"flat_cos", Kind::flat_cos}, {"flat_sin", Kind::flat_sin}, {"cos", Kind::cos},
        {"sin", Kind::sin},           {"soft_ramp", Kind::soft_ramp}};
    for (auto& [n, k] : table)
      if (name == n) return {k, angle, duration};
    throw std::invalid_argument("unknown schedule '" + name + "'");
  }

  bool operator==(const Schedule&) const = default;

  // Number of derivatives vanishing at t = 0 (large for C-infinity flat presets).
  int flatness_order() const {
    switch (kind) {
      case Kind::flat_switch:
      case Kind::flat_cos:
      case Kind::flat_sin:
        return 1000;
      case Kind::soft_ramp:
        return 1000;
      default:
        return 0;
    }
  }

  ScheduleValue eval(double t) const {
    const double s = t / duration, c = 1.0 / duration;
    switch (kind) {
      case Kind::constant:
        return {1.0, 0.0, 0.0};
      case Kind::linear:
        return {s, c, 0.0};
      case Kind::flat_switch: {
        auto v = detail::flat_switch(s);
        return {v.f, v.df * c, v.ddf * c * c};
      }
      case Kind::flat_cos:
      case Kind::flat_sin: {
        auto v = detail::flat_switch(s);
        double th = angle * v.f, th1 = angle * v.df * c, th2 = angle * v.ddf * c * c;
        double cs = std::cos(th), sn = std::sin(th);
        if (kind == Kind::flat_cos) return {cs, -sn * th1, -cs * th1 * th1 - sn * th2};
        return {sn, cs * th1, -sn * th1 * th1 + cs * th2};
      }
      case Kind::cos: {
        double w = angle * c;
        return {std::cos(w * t), -w * std::sin(w * t), -w * w * std::cos(w * t)};
      }
      case Kind::sin: {
        double w = angle * c;
        return {std::sin(w * t), w * std::cos(w * t), -w * w * std::sin(w * t)};
      }
      case Kind::soft_ramp: {
        auto v = detail::flat_switch(s);
        return {duration * detail::flat_switch_integral(s), v.f, v.df * c};
      }
    }
    return {};
  }
};

inline ScheduleValue schedule_eval(double s, const Schedule& sch) { return sch.eval(s); }

}  // namespace superad
