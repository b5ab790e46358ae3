#include "vocstiff/inner_loops.hpp"

#include "vocstiff/vim.hpp"

namespace vocstiff {

void LoopGains::validate() const {
  if (!(k_pv > 0 && k_iv > 0 && k_pi > 0 && k_ii > 0))
    throw Error(ErrorCode::invalid_argument, "loop gains must be positive");
  if (!(omega_v > 0 && omega_i > omega_v))
    throw Error(ErrorCode::invalid_argument, "current bandwidth must exceed voltage bandwidth");
  if (!(i_max > 0)) throw Error(ErrorCode::invalid_argument, "i_max must be positive");
  if (!finite(f_ff)) throw Error(ErrorCode::invalid_argument, "f_ff must be finite");
}

LoopGains design_gains(double l_f, double r_f, double c_f, double omega_i, double omega_v) {
  if (!(l_f > 0 && r_f > 0 && c_f > 0 && omega_i > 0 && omega_v > 0))
    throw Error(ErrorCode::invalid_argument, "gain design inputs must be positive");
  LoopGains g;
  g.omega_i = omega_i;
  g.omega_v = omega_v;
  g.k_pi = l_f * omega_i;
  g.k_ii = r_f * omega_i;
  g.k_pv = c_f * omega_v;
  g.k_iv = 2.0 * g.k_pv * omega_v * omega_v / omega_i;
  return g;
}

LoopGains table_gains() {
  LoopGains g;
  g.k_pv = 0.5;
  g.k_iv = 67.0;
  g.k_pi = 5.0;
  g.k_ii = 250.0;
  return g;
}

namespace {

PiAxes integrate(const PiAxes& s, PerPhaseDq e, double k_i, double dt) {
  PiAxes next;
  next.integral = s.integral + (0.5 * k_i * dt) * (e + s.prev_error);
  next.prev_error = e;
  return next;
}

}  // namespace

VoltageLoopOutput voltage_loop_step(PerPhaseDq v_ref, PerPhaseDq v_vim, PerPhaseDq v_pcc,
                                    const LoopGains& g, const PiAxes& s, double dt) {
  if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "loop step must be positive");
  const PerPhaseDq e = v_ref + v_vim - v_pcc;
  VoltageLoopOutput out;
  out.advanced = integrate(s, e, g.k_iv, dt);
  out.i_ref = g.k_pv * e + out.advanced.integral - g.f_ff * v_vim;
  return out;
}

LimitResult limit_current_ref(PerPhaseDq i, double i_max) {
  if (!(i_max > 0)) throw Error(ErrorCode::invalid_argument, "i_max must be positive");
  const double mag = i.norm();
  if (mag <= i_max) return {i, false};
  return {(i_max / mag) * i, true};
}

CurrentLoopOutput current_loop_step(PerPhaseDq i_ref, PerPhaseDq i_l, PerPhaseDq v_pcc,
                                    const LoopGains& g, double omega, double l_f, double c_f,
                                    const PiAxes& s, double dt, CurrentLoopVariant variant) {
  if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "loop step must be positive");
  CurrentLoopOutput out;
  if (variant == CurrentLoopVariant::standard) {
    const PerPhaseDq e = i_ref - i_l;
    out.advanced = integrate(s, e, g.k_ii, dt);
    const PerPhaseDq pi = g.k_pi * e + out.advanced.integral;
    out.v_cmd = {pi.d + v_pcc.d - omega * l_f * i_l.q, pi.q + v_pcc.q + omega * l_f * i_l.d};
    return out;
  }
  // Controller frame: q lags d.
  const PerPhaseDq r = to_controller_frame(i_ref);
  const PerPhaseDq il = to_controller_frame(i_l);
  const PerPhaseDq v = to_controller_frame(v_pcc);
  const PerPhaseDq e{r.d - il.d - omega * c_f * v.q, r.q - il.q + omega * c_f * v.d};
  // The integrator state is kept in the controller frame for this variant.
  out.advanced = integrate(s, e, g.k_ii, dt);
  const PerPhaseDq pi = g.k_pi * e + out.advanced.integral;
  out.v_cmd = to_controller_frame({pi.d - omega * l_f * v.q, pi.q + omega * l_f * v.d});
  return out;
}

}  // namespace vocstiff
