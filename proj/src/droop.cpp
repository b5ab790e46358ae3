#include "vocstiff/droop.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace vocstiff {

double active_droop(double p, const OscillatorParams& o, double v_z) {
  if (!(v_z > 0)) throw Error(ErrorCode::invalid_argument, "amplitude must be positive");
  return o.omega_n + o.active_slope(v_z) * (p - o.p_ref);
}

double reactive_droop_plain(double v_z, const OscillatorParams& o) {
  if (!(v_z > 0)) throw Error(ErrorCode::invalid_argument, "amplitude must be positive");
  return o.q_ref + o.reactive_coefficient() * v_z * v_z * (2 * o.v_zn * o.v_zn - 2 * v_z * v_z);
}

double reactive_droop_vim(double q_plain, double k, double z, double v_z) {
  if (!(z > 0 && v_z > 0))
    throw Error(ErrorCode::invalid_argument, "impedance and amplitude must be positive");
  if (!(k >= 0)) throw Error(ErrorCode::invalid_argument, "impedance gain must be >= 0");
  const double r = k * q_plain / (z * v_z);
  return q_plain / std::sqrt(1.0 + r * r);
}

double source_impedance(const CircuitParams& c, double omega) {
  return std::hypot(c.r_f + c.r_g, omega * (c.l_f + c.l_g));
}

DroopCurve droop_curve(const OscillatorParams& o, double k, double z, double v_lo, double v_hi,
                       std::size_t n) {
  if (!(v_lo > 0 && v_hi > v_lo) || n < 2)
    throw Error(ErrorCode::invalid_argument, "droop curve needs 0 < v_lo < v_hi and n >= 2");
  DroopCurve c;
  c.k = k;
  c.z = z;
  c.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = v_lo + (v_hi - v_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const double q = reactive_droop_plain(v, o);
    c.samples.push_back({v, q, reactive_droop_vim(q, k, z, v)});
  }
  return c;
}

void write_droop_csv(std::ostream& os, const std::vector<DroopCurve>& curves) {
  os << "k,v,q_plain,q_vim\n";
  char buf[160];
  for (const auto& c : curves) {
    for (const auto& s : c.samples) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.12g,%.12g\n", c.k, s.v, s.q_plain, s.q_vim);
      os << buf;
    }
  }
}

namespace {

KTradeoffRow evaluate_k(const OscillatorParams& o, double z, const KSelectionRequest& r, double k) {
  KTradeoffRow row;
  row.k = k;
  const double v = (1.0 - r.sag_target) * o.v_zn;
  const double q = reactive_droop_vim(reactive_droop_plain(v, o), k, z, v);
  row.current_at_target = kSqrt2 * std::hypot(o.p_ref, q) / v;
  const double v5 = 0.95 * o.v_zn;
  const double q5 = reactive_droop_plain(v5, o);
  row.retention_at_5pct = q5 == 0.0 ? 1.0 : reactive_droop_vim(q5, k, z, v5) / q5;
  row.current_ok = row.current_at_target < r.i_max;
  row.retention_ok = row.retention_at_5pct >= r.retention_floor;
  return row;
}

}  // namespace

KSelection select_k(const OscillatorParams& o, double z, const KSelectionRequest& r) {
  if (!(r.sag_target >= 0 && r.sag_target < 1))
    throw Error(ErrorCode::invalid_argument, "sag target must lie in [0, 1)");
  if (!(r.retention_floor >= 0 && r.retention_floor <= 1))
    throw Error(ErrorCode::invalid_argument, "retention floor must lie in [0, 1]");
  if (!(r.i_max > 0 && r.k_max > 0 && z > 0) || r.table_points < 2)
    throw Error(ErrorCode::invalid_argument, "invalid k selection request");

  KSelection out;
  for (std::size_t i = 0; i < r.table_points; ++i)
    out.table.push_back(
        evaluate_k(o, z, r, r.k_max * static_cast<double>(i) / static_cast<double>(r.table_points - 1)));

  // Current falls and retention drops monotonically in k, so the current bound gives
  // the smallest admissible k and the retention floor caps it.
  double k = 0.0;
  if (!evaluate_k(o, z, r, 0.0).current_ok) {
    if (!evaluate_k(o, z, r, r.k_max).current_ok) {
      out.binding = "current limit at the sag target";
      return out;
    }
    double lo = 0.0, hi = r.k_max;
    while (hi - lo > 1e-6 * r.k_max) {
      const double mid = 0.5 * (lo + hi);
      (evaluate_k(o, z, r, mid).current_ok ? hi : lo) = mid;
    }
    k = hi;
  }
  if (!evaluate_k(o, z, r, k).retention_ok) {
    out.binding = "reactive retention at 5% sag";
    return out;
  }
  out.feasible = true;
  out.k = k;
  return out;
}

}  // namespace vocstiff
