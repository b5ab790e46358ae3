#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "vocstiff/types.hpp"

namespace vocstiff {

inline constexpr std::size_t kMaxLoads = 4;

/// R-L branch from the PCC to neutral, switched in at connect_time with zero current.
struct LoadBranch {
  double r = 0.0;
  double l = 0.0;
  double connect_time = 0.0;
  friend bool operator==(const LoadBranch&, const LoadBranch&) = default;
};

/// Averaged per-phase network: bridge -> R_f/L_f -> PCC (C_f to neutral, loads) ->
/// R_g/L_g -> grid source. Phases are independent four-wire circuits.
struct CircuitParams {
  double r_f = 0.15;
  double l_f = 2e-3;
  double c_f = 20e-6;
  double r_g = 0.35;
  double l_g = 4e-3;
  std::vector<LoadBranch> loads;
  bool inverter_connected = true;

  void validate() const;
  /// Smallest L/R or LC time constant in the network, used to bound dt.
  double min_time_constant() const;
  friend bool operator==(const CircuitParams&, const CircuitParams&) = default;
};

/// A change of the grid source taking effect at `time`. Unset fields keep their value.
struct GridBreakpoint {
  double time = 0.0;
  std::optional<Phases<double>> v_rms;
  std::optional<double> omega;
  friend bool operator==(const GridBreakpoint&, const GridBreakpoint&) = default;
};

/// Controllable stiff source behind the grid branch. Voltages are rms phase values;
/// the instantaneous waveform has peak sqrt(2) * v_rms.
struct GridSource {
  double v_rms = 80.0;
  double omega = 2.0 * kPi * 60.0;
  Phases<double> phase_scale{1.0, 1.0, 1.0};
  std::vector<GridBreakpoint> schedule;  // strictly increasing times

  void validate() const;

  double amplitude_rms(std::size_t phase, double t) const;
  double frequency(double t) const;
  /// Continuous electrical angle of phase a at time t.
  double angle(double t) const;
  double voltage(std::size_t phase, double t) const;
  /// rms phasor of a phase at time t, referenced to the phase-a angle at t.
  std::complex<double> phasor(std::size_t phase, double t) const;
  friend bool operator==(const GridSource&, const GridSource&) = default;
};

struct PhasePlantState {
  double i_l = 0.0;     // filter inductor current
  double v_pcc = 0.0;   // capacitor / PCC voltage
  double i_grid = 0.0;  // grid-branch current, flowing from the PCC towards the grid
  std::array<double, kMaxLoads> i_load{};

  /// Current delivered by the inverter past its filter capacitor.
  double i_out(std::size_t n_loads) const;
};

struct PlantState {
  Phases<PhasePlantState> phase{};
};

/// Advances the network by one explicit RK4 step with the bridge voltages held.
PlantState step_plant(const PlantState& state, const Phases<double>& v_c, const GridSource& grid,
                      const CircuitParams& params, double t, double dt);

/// Energy held in the inductors and capacitors of all phases.
double stored_energy(const PlantState& state, const CircuitParams& params);

/// Steady-state rms phasors of one phase of the network.
struct PhasorSolution {
  std::complex<double> v_pcc;
  std::complex<double> i_grid;
  std::complex<double> i_inverter;  // through L_f, zero when the branch is open
  std::complex<double> i_cap;
  std::vector<std::complex<double>> i_load;
};

/// Solves the single-frequency phasor network. `inverter_source` is the bridge voltage
/// phasor behind R_f/L_f; std::nullopt leaves the inverter branch open.
PhasorSolution solve_phasor(const GridSource& grid, const CircuitParams& params,
                            std::span<const bool> connected_loads,
                            std::optional<std::complex<double>> inverter_source,
                            std::size_t phase = 0, double t = 0.0);

/// Sag in percent of the pre-event amplitude.
double measure_sag(double v_before, double v_after);

}  // namespace vocstiff
