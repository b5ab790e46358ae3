#pragma once

#include "vocstiff/types.hpp"

namespace vocstiff {

struct LoopGains {
  double k_pv = 0.0;  // 1/Ohm
  double k_iv = 0.0;  // 1/(Ohm s)
  double k_pi = 0.0;  // Ohm
  double k_ii = 0.0;  // Ohm/s
  double omega_v = 2.0 * kPi * 400.0;
  double omega_i = 2.0 * kPi * 1500.0;
  double f_ff = 0.0;    // scaling of the direct VIm term in the voltage loop
  double i_max = 20.0;  // A, peak dq magnitude of the current reference

  void validate() const;
  friend bool operator==(const LoopGains&, const LoopGains&) = default;
};

/// Bandwidth-based PI gains for an L-R-C filter.
LoopGains design_gains(double l_f, double r_f, double c_f, double omega_i, double omega_v);

/// The fixed gain set listed with the reference network.
LoopGains table_gains();

enum class CurrentLoopVariant {
  standard,  // PI + v_pcc feed-forward + omega L_f cross decoupling
  verbatim,  // capacitor coupling inside the error and omega L_f V_pcc trailing terms
};

/// Trapezoidal PI integrator pair of one loop in one phase.
struct PiAxes {
  PerPhaseDq integral;
  PerPhaseDq prev_error;
};

struct PhasePiState {
  PiAxes voltage;
  PiAxes current;
  bool saturated = false;
};

struct PiState {
  Phases<PhasePiState> phase{};
};

struct VoltageLoopOutput {
  PerPhaseDq i_ref;   // before limiting
  PiAxes advanced;    // integrator if this tick is allowed to integrate
};

/// Voltage PI on v_ref + v_vim - v_pcc minus the direct f_ff * v_vim term. The caller
/// commits `advanced` only when the limiter is not saturated.
VoltageLoopOutput voltage_loop_step(PerPhaseDq v_ref, PerPhaseDq v_vim, PerPhaseDq v_pcc,
                                    const LoopGains& gains, const PiAxes& state, double dt);

struct LimitResult {
  PerPhaseDq value;
  bool saturated = false;
};

/// Scales the reference down to i_max when longer, keeping its direction.
LimitResult limit_current_ref(PerPhaseDq i_ref, double i_max);

struct CurrentLoopOutput {
  PerPhaseDq v_cmd;
  PiAxes advanced;
};

/// Current PI with feed-forwards. All dq inputs and the output use the plant-side
/// orientation; the verbatim variant evaluates its cross terms in the controller frame.
CurrentLoopOutput current_loop_step(PerPhaseDq i_ref, PerPhaseDq i_l, PerPhaseDq v_pcc,
                                    const LoopGains& gains, double omega, double l_f, double c_f,
                                    const PiAxes& state, double dt, CurrentLoopVariant variant);

}  // namespace vocstiff
