#pragma once

#include "vocstiff/types.hpp"

namespace vocstiff {

/// Per-phase Andronov-Hopf oscillator parameters. Amplitudes are rms; the oscillator
/// 2-vector carries peak values, so |v| = sqrt(2) * V_z.
struct OscillatorParams {
  double k_i = 0.1;     // V/A
  double k_v = 1.0;
  double c_osc = 1.0;   // F
  double xi = 15.0;     // (V s)^-2
  double v_zn = 80.0;   // V rms
  double omega_n = 2.0 * kPi * 60.0;
  double p_ref = 300.0;  // W per phase
  double q_ref = 0.0;    // var per phase

  void validate() const;

  /// d(omega)/dP at amplitude v_z (negative).
  double active_slope(double v_z) const { return -k_v * k_i / (c_osc * v_z * v_z); }
  /// Q - Q* = reactive_coefficient() * V^2 (2 V_zn^2 - 2 V^2) at equilibrium.
  double reactive_coefficient() const { return xi * c_osc / (k_v * k_v * k_v * k_i); }
  friend bool operator==(const OscillatorParams&, const OscillatorParams&) = default;
};

/// Targets for choosing k_v and c_osc, which the droop laws leave free.
struct OscillatorDesign {
  double droop_hz_per_w = 1.0 / 300.0;  // frequency drop per watt at V_zn
  // Reactive export reached when the amplitude sits at (1 - rated_sag) V_zn.
  double rated_q = 300.0;
  double rated_sag = 0.05;
};

/// Picks k_v and c_osc so the active slope and reactive rating both hold.
OscillatorParams design_oscillator(OscillatorParams base, const OscillatorDesign& design);

/// Keeps k_v = 1 and sets only c_osc from the active slope. This yields a very stiff
/// amplitude loop that needs a far smaller step than the controller period.
OscillatorParams design_oscillator_unit_kv(OscillatorParams base, double droop_hz_per_w);

struct OscillatorState {
  Phases<Vec2> v{};
};

/// Time derivative of one phase's oscillator vector for a given output current.
Vec2 oscillator_rhs(Vec2 v, Vec2 i_fb, const OscillatorParams& p);

/// Instantaneous angular speed of the oscillator vector.
double oscillator_frequency(Vec2 v, Vec2 i_fb, const OscillatorParams& p);

/// Current whose exchange with v yields exactly P*, Q*.
Vec2 reference_current(Vec2 v, const OscillatorParams& p);

/// RK4 step of all three phases with i_fb held over dt.
OscillatorState oscillator_step(const OscillatorState& state, const Phases<Vec2>& i_fb,
                                const OscillatorParams& params, double dt);

/// One phase of the above. With omega_i non-zero the feedback current turns at that
/// rate across the step instead of being held, which removes the half-step lag a
/// held current puts between the oscillator and the power it sees.
Vec2 oscillator_step(Vec2 v, Vec2 i_fb, const OscillatorParams& params, double dt,
                     double omega_i = 0.0);

double frame_angle(Vec2 v);

/// rms amplitude V_z of an oscillator vector.
inline double amplitude_rms(Vec2 v) { return v.norm() / kSqrt2; }

/// Oscillator vector with rms amplitude v_z at angle theta.
inline Vec2 from_polar_rms(double v_z, double theta) {
  return {kSqrt2 * v_z * std::cos(theta), kSqrt2 * v_z * std::sin(theta)};
}

}  // namespace vocstiff
