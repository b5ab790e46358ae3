#include "vocstiff/oscillator.hpp"

#include <sstream>

namespace vocstiff {

void OscillatorParams::validate() const {
  if (!(k_i > 0 && k_v > 0 && c_osc > 0 && xi > 0 && v_zn > 0 && omega_n > 0))
    throw Error(ErrorCode::invalid_argument,
                "oscillator k_i, k_v, c_osc, xi, v_zn and omega_n must all be positive");
  if (!finite(p_ref) || !finite(q_ref))
    throw Error(ErrorCode::invalid_argument, "oscillator power references must be finite");
}

OscillatorParams design_oscillator(OscillatorParams p, const OscillatorDesign& d) {
  if (!(d.droop_hz_per_w > 0 && d.rated_q > 0 && d.rated_sag > 0 && d.rated_sag < 1))
    throw Error(ErrorCode::invalid_argument, "oscillator design targets out of range");
  const double s_p = 2.0 * kPi * d.droop_hz_per_w;  // rad/s per W
  const double vn2 = p.v_zn * p.v_zn;
  const double v = (1.0 - d.rated_sag) * p.v_zn;
  const double c_q = d.rated_q / (v * v * 2.0 * (vn2 - v * v));
  // s_p = k_v k_i / (C vn2) and c_q = xi C / (k_v^3 k_i) give k_v^2 = xi / (c_q s_p vn2).
  p.k_v = std::sqrt(p.xi / (c_q * s_p * vn2));
  p.c_osc = p.k_v * p.k_i / (s_p * vn2);
  return p;
}

OscillatorParams design_oscillator_unit_kv(OscillatorParams p, double droop_hz_per_w) {
  if (!(droop_hz_per_w > 0)) throw Error(ErrorCode::invalid_argument, "droop must be positive");
  p.k_v = 1.0;
  p.c_osc = p.k_i / (2.0 * kPi * droop_hz_per_w * p.v_zn * p.v_zn);
  return p;
}

Vec2 reference_current(Vec2 v, const OscillatorParams& p) {
  const double n2 = dot(v, v);
  return (2.0 / n2) * (p.p_ref * v - p.q_ref * rot90(v));
}

Vec2 oscillator_rhs(Vec2 v, Vec2 i_fb, const OscillatorParams& p) {
  const double n2 = dot(v, v);
  const double radial = p.xi / (p.k_v * p.k_v) * (2.0 * p.v_zn * p.v_zn - n2);
  const Vec2 di = i_fb - reference_current(v, p);
  return p.omega_n * rot90(v) + radial * v - (p.k_v * p.k_i / p.c_osc) * rot90(di);
}

double oscillator_frequency(Vec2 v, Vec2 i_fb, const OscillatorParams& p) {
  const Vec2 dv = oscillator_rhs(v, i_fb, p);
  return (v.alpha * dv.beta - v.beta * dv.alpha) / dot(v, v);
}

Vec2 oscillator_step(Vec2 v, Vec2 i, const OscillatorParams& p, double dt, double omega_i) {
  if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "oscillator step must be positive");
  if (!(v.norm() > 0)) throw Error(ErrorCode::oscillator_collapse, "oscillator amplitude is zero");
  auto turned = [&](double tau) {
    const double c = std::cos(omega_i * tau), s = std::sin(omega_i * tau);
    return Vec2{c * i.alpha - s * i.beta, s * i.alpha + c * i.beta};
  };
  const Vec2 i_mid = turned(0.5 * dt);
  const Vec2 k1 = oscillator_rhs(v, i, p);
  const Vec2 k2 = oscillator_rhs(v + 0.5 * dt * k1, i_mid, p);
  const Vec2 k3 = oscillator_rhs(v + 0.5 * dt * k2, i_mid, p);
  const Vec2 k4 = oscillator_rhs(v + dt * k3, turned(dt), p);
  const Vec2 next = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!finite(next.alpha) || !finite(next.beta))
    throw Error(ErrorCode::numeric_blowup, "non-finite oscillator state");
  if (amplitude_rms(next) < 0.05 * p.v_zn) {
    std::ostringstream os;
    os << "oscillator amplitude collapsed to " << amplitude_rms(next) << " V";
    throw Error(ErrorCode::oscillator_collapse, os.str());
  }
  return next;
}

OscillatorState oscillator_step(const OscillatorState& s, const Phases<Vec2>& i_fb,
                                const OscillatorParams& p, double dt) {
  OscillatorState next;
  for (std::size_t k = 0; k < kPhases; ++k) next.v[k] = oscillator_step(s.v[k], i_fb[k], p, dt);
  return next;
}

double frame_angle(Vec2 v) {
  if (v.alpha == 0.0 && v.beta == 0.0)
    throw Error(ErrorCode::undefined_angle, "frame angle of a zero oscillator vector");
  return std::atan2(v.beta, v.alpha);
}

}  // namespace vocstiff
