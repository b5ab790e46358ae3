#include "vocstiff/vim.hpp"

#include <algorithm>

namespace vocstiff {

void VimParams::validate() const {
  if (!(m >= 0 && n >= 0)) throw Error(ErrorCode::invalid_argument, "VIm gains must be >= 0");
  if (!(omega_f > 0)) throw Error(ErrorCode::invalid_argument, "VIm filter corner must be > 0");
  if (!finite(r_v0) || !finite(x_v0))
    throw Error(ErrorCode::invalid_argument, "VIm initial impedance must be finite");
}

namespace {

FilterAxis axis_step(FilterAxis s, double u, double num, double wf, double dt) {
  auto f = [&](FilterAxis a) {
    return FilterAxis{a.dy, num * u - wf * a.dy - wf * wf * a.y};
  };
  auto add = [](FilterAxis a, double h, FilterAxis b) {
    return FilterAxis{a.y + h * b.y, a.dy + h * b.dy};
  };
  const FilterAxis k1 = f(s);
  const FilterAxis k2 = f(add(s, 0.5 * dt, k1));
  const FilterAxis k3 = f(add(s, 0.5 * dt, k2));
  const FilterAxis k4 = f(add(s, dt, k3));
  return {s.y + dt / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
          s.dy + dt / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy)};
}

}  // namespace

VimPhaseState filter_step(const VimPhaseState& s, PerPhaseDq i, const VimParams& p, double dt) {
  if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "filter step must be positive");
  VimPhaseState next = s;
  const double num = p.numerator_gain();
  next.d = axis_step(s.d, i.d, num, p.omega_f, dt);
  next.q = axis_step(s.q, i.q, num, p.omega_f, dt);
  if (!finite(next.d.y) || !finite(next.q.y) || !finite(next.d.dy) || !finite(next.q.dy))
    throw Error(ErrorCode::numeric_blowup, "non-finite VIm filter state");
  const VirtualImpedance z = compute_vim(next.q.y, p);
  next.r = z.r;
  next.x = z.x;
  return next;
}

VimPhaseState filter_preset(PerPhaseDq i, const VimParams& p) {
  const double g = p.numerator_gain() / (p.omega_f * p.omega_f);
  VimPhaseState s;
  s.d.y = g * i.d;
  s.q.y = g * i.q;
  const VirtualImpedance z = compute_vim(s.q.y, p);
  s.r = z.r;
  s.x = z.x;
  return s;
}

VirtualImpedance compute_vim(double i_fq, const VimParams& p) {
  VirtualImpedance z{p.r_v0 + p.m * i_fq, p.x_v0 + p.n * i_fq};
  if (p.clamp_non_negative) {
    z.r = std::max(z.r, 0.0);
    z.x = std::max(z.x, 0.0);
  }
  return z;
}

PerPhaseDq feedforward_voltage(PerPhaseDq i, double r, double x) {
  return {-r * i.d - x * i.q, -r * i.q + x * i.d};
}

VimTick vim_tick(const VimPhaseState& s, PerPhaseDq i_out_dq, const VimParams& p, double dt) {
  VimTick t;
  t.state = filter_step(s, to_controller_frame(i_out_dq), p, dt);
  t.v_vim = to_controller_frame(feedforward_voltage(t.state.filtered(), t.state.r, t.state.x));
  return t;
}

}  // namespace vocstiff
