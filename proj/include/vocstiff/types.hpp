#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vocstiff {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr std::size_t kPhases = 3;

enum class ErrorCode {
  ok = 0,
  invalid_argument,
  numeric_blowup,
  oscillator_collapse,
  undefined_angle,
  singular_system,
  infeasible_operating_point,
  assembly,
  solver,
  config,
  io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <class T>
using Phases = std::array<T, kPhases>;

/// Direct/quadrature pair in a phase's own synchronous frame. Components are
/// amplitude-invariant: a sinusoid of peak A aligned with the frame maps to (A, 0).
struct PerPhaseDq {
  double d = 0.0;
  double q = 0.0;

  double norm() const { return std::hypot(d, q); }

  friend PerPhaseDq operator+(PerPhaseDq a, PerPhaseDq b) { return {a.d + b.d, a.q + b.q}; }
  friend PerPhaseDq operator-(PerPhaseDq a, PerPhaseDq b) { return {a.d - b.d, a.q - b.q}; }
  friend PerPhaseDq operator*(double s, PerPhaseDq a) { return {s * a.d, s * a.q}; }
  friend bool operator==(const PerPhaseDq&, const PerPhaseDq&) = default;
};

/// Stationary two-vector (alpha = the physical signal, beta = its 90 degree lagging twin).
struct Vec2 {
  double alpha = 0.0;
  double beta = 0.0;

  double norm() const { return std::hypot(alpha, beta); }

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.alpha + b.alpha, a.beta + b.beta}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.alpha - b.alpha, a.beta - b.beta}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.alpha, s * a.beta}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.alpha * b.alpha + a.beta * b.beta; }
/// 90 degree counter-clockwise rotation.
inline Vec2 rot90(Vec2 a) { return {-a.beta, a.alpha}; }

inline bool finite(double x) { return std::isfinite(x); }

}  // namespace vocstiff
