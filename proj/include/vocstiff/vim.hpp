#pragma once

#include "vocstiff/types.hpp"

namespace vocstiff {

// The adaptive impedance works in the controller's dq orientation, where q points
// 90 degrees behind d. A lagging (inductive) export current therefore has positive q
// there. to_controller_frame maps the plant-side orientation (q ahead of d) to it and
// is its own inverse.
inline PerPhaseDq to_controller_frame(PerPhaseDq x) { return {x.d, -x.q}; }

enum class FilterNumerator {
  omega_f_squared,  // unity dc gain
  omega_f,          // dc gain 1 / omega_f
};

struct VimParams {
  double r_v0 = 0.0;  // Ohm
  double x_v0 = 0.0;  // Ohm
  double m = 0.0;     // Ohm/A
  double n = 0.0;     // Ohm/A
  double omega_f = 2.0 * kPi * 120.0;
  bool clamp_non_negative = true;
  FilterNumerator numerator = FilterNumerator::omega_f_squared;

  void validate() const;
  double numerator_gain() const {
    return numerator == FilterNumerator::omega_f_squared ? omega_f * omega_f : omega_f;
  }
  /// Uses the same gain for resistance and reactance.
  static VimParams with_gain(double k) {
    VimParams p;
    p.m = k;
    p.n = k;
    return p;
  }
  friend bool operator==(const VimParams&, const VimParams&) = default;
};

/// State of num / (s^2 + w_f s + w_f^2) in controllable form (y, dy/dt).
struct FilterAxis {
  double y = 0.0;
  double dy = 0.0;
};

struct VimPhaseState {
  FilterAxis d, q;
  double r = 0.0;
  double x = 0.0;

  PerPhaseDq filtered() const { return {d.y, q.y}; }
};

struct VimState {
  Phases<VimPhaseState> phase{};
};

/// Advances both filter axes of one phase with the controller-frame current held.
VimPhaseState filter_step(const VimPhaseState& state, PerPhaseDq i_ctrl, const VimParams& params,
                          double dt);

/// Steady output of the filter for a constant input.
VimPhaseState filter_preset(PerPhaseDq i_ctrl, const VimParams& params);

struct VirtualImpedance {
  double r = 0.0;
  double x = 0.0;
};

/// R = R_V0 + m i_Fq, X = X_V0 + n i_Fq, optionally clamped at zero.
VirtualImpedance compute_vim(double i_fq, const VimParams& params);

/// Voltage drop across the virtual impedance, in the controller frame.
PerPhaseDq feedforward_voltage(PerPhaseDq i_f, double r, double x);

/// Filter, impedance and feed-forward for one tick. Takes and returns plant-frame dq.
struct VimTick {
  VimPhaseState state;
  PerPhaseDq v_vim;  // plant-frame dq
};
VimTick vim_tick(const VimPhaseState& state, PerPhaseDq i_out_dq, const VimParams& params,
                 double dt);

}  // namespace vocstiff
