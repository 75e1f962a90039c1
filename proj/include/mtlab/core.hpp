#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mtlab {

using cd = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Points in R^n (n <= 3) and in the parameter domain R^{n-1} (n-1 <= 2).
// Unused trailing components are kept at zero so that dot products and norms
// can always run over the full array.
using Point = std::array<double, 3>;
using Omega = std::array<double, 2>;

inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double dot(const Omega& a, const Omega& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline double norm(const Omega& a) { return std::sqrt(dot(a, a)); }
inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Omega operator+(const Omega& a, const Omega& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Omega operator-(const Omega& a, const Omega& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Omega operator*(double s, const Omega& a) { return {s * a[0], s * a[1]}; }

inline cd expi(double phase) { return {std::cos(phase), std::sin(phase)}; }

// Error taxonomy. Every failure mode named by an operation contract maps to
// one of these so that callers (and the CLI exit-code logic) can tell them apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DomainError : public Error {
 public:
  using Error::Error;
};
class ResolutionError : public Error {
 public:
  using Error::Error;
};
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::uint64_t required)
      : Error(what + " (required bytes: " + std::to_string(required) + ")"), required_bytes(required) {}
  std::uint64_t required_bytes;
};
class GeometryError : public Error {
 public:
  using Error::Error;
};
class ArgumentError : public Error {
 public:
  using Error::Error;
};
class ScaleError : public Error {
 public:
  using Error::Error;
};
class StateError : public Error {
 public:
  using Error::Error;
};
class FitError : public Error {
 public:
  using Error::Error;
};

// Standard compactly supported bump b(x) = exp(-1/(1-x^2)) for |x| < 1.
inline double bump(double x) {
  double t = 1.0 - x * x;
  return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
}

// Smooth step: 1 for u <= 0, 0 for u >= 1, C-infinity in between.
inline double smooth_step(double u) {
  if (u <= 0.0) return 1.0;
  if (u >= 1.0) return 0.0;
  double a = std::exp(-1.0 / (1.0 - u));
  double b = std::exp(-1.0 / u);
  return a / (a + b);
}

// Plateau bump: 1 on |s| <= inner, smooth decay to 0 at |s| = outer.
inline double plateau(double s, double inner, double outer) {
  double a = std::abs(s);
  if (a <= inner) return 1.0;
  if (a >= outer) return 0.0;
  return smooth_step((a - inner) / (outer - inner));
}

}  // namespace mtlab
