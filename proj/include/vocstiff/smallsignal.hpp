#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "vocstiff/inner_loops.hpp"
#include "vocstiff/vim.hpp"

namespace vocstiff {

// Single-frame dq model of one phase: grid branch, LC filter, VIm current filter,
// voltage PI and current PI. The oscillator is an ideal reference anchored on d and
// the frame speed is frozen at omega0.

enum class LoopForm {
  verbatim,  // capacitor terms in the current error, omega L_f V_pcc trailing terms
  standard,  // PI + v_pcc feed-forward + omega L_f i_L cross decoupling
  literal,   // verbatim with the inverter (grid-side) current fed back instead of i_L
};

const char* to_string(LoopForm form);

struct StudyParams {
  double r_g = 0.35;
  double l_g = 4e-3;
  double r_f = 0.15;
  double l_f = 2e-3;
  double c_f = 20e-6;
  LoopGains gains;
  VimParams vim;  // m and n are overridden by the study gain k
  double omega0 = 2.0 * kPi * 60.0;
  double p0 = 300.0;     // W per phase at the operating point
  double q_max = 300.0;  // var per phase at the operating point
  double v_min = 60.0;   // V rms at the PCC
  LoopForm form = LoopForm::verbatim;

  void validate() const;
};

/// Reference network at the largest-Q, lowest-V corner of a 25% sag: the PCC sits at
/// 0.75 V_zn and the inverter exports the reactive power its plain droop law gives there.
StudyParams default_study();

inline constexpr int kStudyStates = 14;
using StudyState = Eigen::Matrix<double, kStudyStates, 1>;

enum StudyIndex : int {
  ig_d, ig_q, il_d, il_q, vc_d, vc_q,  // plant-frame physical states (vc = filter capacitor)
  fd, fd_dot, fq, fq_dot,              // VIm filter, controller frame
  zv_d, zv_q,                          // voltage PI integrators, controller frame
  zi_d, zi_q,                          // current PI integrators (plant frame for standard)
};

const std::vector<std::string>& study_state_labels();

struct StudyInputs {
  double v_voc = 0.0;  // d-axis oscillator voltage [V peak]
  PerPhaseDq v_grid;   // plant frame [V peak]
};

/// Nonlinear right-hand side; the VIm products are kept exact.
StudyState study_rhs(const StudyState& x, const StudyInputs& u, const StudyParams& p, double k);

struct OperatingPoint {
  // Plant-frame dq, peak values, frame aligned with the oscillator voltage.
  PerPhaseDq v_pcc;
  PerPhaseDq i_inv;
  PerPhaseDq i_l;
  PerPhaseDq v_c;  // bridge voltage
  StudyInputs inputs;
  PerPhaseDq i_f;  // filtered current, controller frame
  double r_vim = 0.0;
  double x_vim = 0.0;
  double omega0 = 0.0;
  StudyState x;
};

/// Equilibrium at which the inverter exports (p0, q_max) into the PCC held at v_min.
OperatingPoint compute_operating_point(const StudyParams& p, double k);

/// d(v_vim)/d(i_f) in the controller frame at the filtered current i_f0, with m = n = k
/// unless the params already carry other gains (k < 0 keeps params.m, params.n).
Eigen::Matrix2d linearize_vim(PerPhaseDq i_f0, const VimParams& params);

struct LtiStateSpace {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;  // inputs: v_voc, v_grid_d, v_grid_q
  std::vector<std::string> labels;
  StudyParams params;
  double k = 0.0;
};

LtiStateSpace assemble_model(const StudyParams& p, const OperatingPoint& op, double k);

/// All eigenvalues of a real square matrix, sorted by descending real part.
std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& a);

double max_real_part(const std::vector<std::complex<double>>& spectrum);

struct LociRow {
  double k = 0.0;
  std::vector<std::complex<double>> spectrum;
  double max_real = 0.0;
};

/// Spectrum per k on an even grid of steps + 1 points. With recompute_op false the
/// operating point of k_lo is reused for every k.
std::vector<LociRow> sweep_gain(const StudyParams& p, double k_lo, double k_hi, std::size_t steps,
                                bool recompute_op = true);

void write_loci_csv(std::ostream& os, const std::vector<LociRow>& rows);

struct CriticalGain {
  bool found = false;  // false: no sign change of the max real part in range
  double k = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t evaluations = 0;
};

/// First stable-to-unstable crossing of max_real(k) on [k_lo, k_hi], scanned on
/// scan_steps intervals and refined by bisection to tol.
CriticalGain critical_gain(const std::function<double(double)>& max_real, double k_lo = 0.0,
                           double k_hi = 1.0, std::size_t scan_steps = 50, double tol = 1e-3);

CriticalGain critical_gain(const StudyParams& p, bool recompute_op = true, double k_lo = 0.0,
                           double k_hi = 1.0);

/// Time response of the nonlinear model from its operating point after the grid
/// amplitude is scaled by (1 + disturbance).
struct Ringdown {
  double dt = 0.0;
  std::vector<StudyState> x;  // deviations from the operating point
};

Ringdown simulate_ringdown(const StudyParams& p, double k, double disturbance, double t_end,
                           double dt = 2e-6, std::size_t keep_every = 10);

/// Damped modes of a uniformly sampled signal by the matrix-pencil method, sorted by
/// descending amplitude. Each mode is (pole [1/s], amplitude).
struct FittedMode {
  std::complex<double> pole;
  double amplitude = 0.0;
};
std::vector<FittedMode> fit_modes(const std::vector<double>& y, double dt, std::size_t order);

}  // namespace vocstiff
