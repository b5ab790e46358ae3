#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vocstiff/oscillator.hpp"
#include "vocstiff/plant.hpp"

namespace vocstiff {

/// Steady frequency [rad/s] for active power p [W per phase] at amplitude v_z [V rms].
double active_droop(double p, const OscillatorParams& params, double v_z);

/// Steady reactive power [var per phase] of the oscillator at amplitude v_z.
double reactive_droop_plain(double v_z, const OscillatorParams& params);

/// Plain droop reactive power reduced by the adaptive impedance k acting against the
/// total series impedance magnitude z.
double reactive_droop_vim(double q_plain, double k, double z, double v_z);

/// Fundamental-frequency magnitude of the filter plus grid series impedance.
double source_impedance(const CircuitParams& circuit, double omega);

struct DroopSample {
  double v = 0.0;
  double q_plain = 0.0;
  double q_vim = 0.0;
};

struct DroopCurve {
  double k = 0.0;
  double z = 0.0;
  std::vector<DroopSample> samples;  // v strictly increasing
};

/// n >= 2 samples evenly spaced over [v_lo, v_hi].
DroopCurve droop_curve(const OscillatorParams& params, double k, double z, double v_lo,
                       double v_hi, std::size_t n);

/// Columns k, v, q_plain, q_vim; one block per curve.
void write_droop_csv(std::ostream& os, const std::vector<DroopCurve>& curves);

struct KTradeoffRow {
  double k = 0.0;
  double current_at_target = 0.0;  // A peak
  double retention_at_5pct = 0.0;  // q_vim / q_plain at 5% sag
  bool current_ok = false;
  bool retention_ok = false;
};

struct KSelection {
  bool feasible = false;
  double k = 0.0;
  std::string binding;  // constraint that blocks the targets when infeasible
  std::vector<KTradeoffRow> table;
};

struct KSelectionRequest {
  double sag_target = 0.25;        // fraction of V_zn
  double retention_floor = 0.8;    // fraction of the plain Q kept at 5% sag
  double i_max = 20.0;             // A peak
  double k_max = 1.0;              // upper end of the search, normally the critical gain
  std::size_t table_points = 11;
};

/// Smallest k that keeps the current below i_max at the target sag while keeping at
/// least the retention floor of the plain reactive power at 5% sag.
KSelection select_k(const OscillatorParams& params, double z, const KSelectionRequest& request);

}  // namespace vocstiff
