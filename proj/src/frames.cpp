#include "vocstiff/frames.hpp"

namespace vocstiff {

PerPhaseDq abc_to_dq(double signal, double theta, double quadrature) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {signal * c + quadrature * s, -signal * s + quadrature * c};
}

Vec2 dq_to_abc(PerPhaseDq x, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {x.d * c - x.q * s, x.d * s + x.q * c};
}

double QuadratureGenerator::step(double input, double omega, double dt) {
  // x' = k w (u - x) - w q,  q' = w x
  auto f = [&](double x, double q, double& dx, double& dq) {
    dx = gain_ * omega * (input - x) - omega * q;
    dq = omega * x;
  };
  double k1x, k1q, k2x, k2q, k3x, k3q, k4x, k4q;
  f(x_, q_, k1x, k1q);
  f(x_ + 0.5 * dt * k1x, q_ + 0.5 * dt * k1q, k2x, k2q);
  f(x_ + 0.5 * dt * k2x, q_ + 0.5 * dt * k2q, k3x, k3q);
  f(x_ + dt * k3x, q_ + dt * k3q, k4x, k4q);
  x_ += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  q_ += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
  return q_;
}

double TwoSampleQuadrature::step(double input, double omega, double dt) {
  const double h = 0.5 * omega * dt;
  // Midpoint value and lagging twin, then rotated forward by half a sample.
  const double mid = 0.5 * (input + prev_) / std::cos(h);
  const double mid_q = (prev_ - input) / (2.0 * std::sin(h));
  q_ = mid * std::sin(h) + mid_q * std::cos(h);
  prev_ = input;
  return q_;
}

void TwoSampleQuadrature::preset(double in_phase, double quadrature, double omega, double dt) {
  const double a = omega * dt;
  prev_ = in_phase * std::cos(a) + quadrature * std::sin(a);
  q_ = quadrature;
}

}  // namespace vocstiff
