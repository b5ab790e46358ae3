#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "vocstiff/inner_loops.hpp"
#include "vocstiff/oscillator.hpp"
#include "vocstiff/plant.hpp"
#include "vocstiff/vim.hpp"

namespace vocstiff {

/// Everything a run needs apart from timing and events.
struct ModelParams {
  CircuitParams circuit;
  GridSource grid;
  OscillatorParams osc;
  VimParams vim;
  LoopGains gains;
  bool inverter_enabled = true;
  CurrentLoopVariant current_loop = CurrentLoopVariant::standard;

  void validate() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Reference setup: 80 V / 60 Hz weak grid, base R-L load, designed oscillator,
/// listed loop gains.
ModelParams default_model();

struct SimConfig {
  double t_end = 1.0;
  double dt_plant = 5e-6;
  double t_s = 50e-6;
  std::size_t log_every = 20;  // controller ticks per logged row

  void validate() const;
  std::size_t substeps() const;
  std::size_t ticks() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class EventKind {
  load_connect,    // branch
  grid_frequency,  // value [rad/s]
  grid_amplitude,  // amplitudes [V rms] per phase
  p_ref,           // value [W per phase]
  q_ref,           // value [var per phase]
  vim_gain,        // value [Ohm/A], sets m = n
};

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::p_ref;
  std::size_t branch = 0;
  double value = 0.0;
  Phases<double> amplitudes{};

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventSchedule {
  std::vector<Event> events;  // non-decreasing times

  void validate(std::size_t n_loads) const;
  friend bool operator==(const EventSchedule&, const EventSchedule&) = default;
};

const char* to_string(EventKind kind);

class TimeSeriesLog {
 public:
  std::size_t add_channel(const std::string& name, const std::string& unit);
  void append(const std::vector<double>& row);

  std::size_t rows() const { return time_.size(); }
  std::size_t channels() const { return names_.size(); }
  const std::vector<double>& time() const { return time_; }
  const std::vector<double>& channel(const std::string& name) const;
  bool has_channel(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

  /// CSV with a leading "# units:" manifest line.
  void write_csv(std::ostream& os) const;

 private:
  friend struct LogBuilder;
  std::vector<std::string> names_;
  std::vector<std::string> units_;
  std::vector<double> time_;
  std::vector<std::vector<double>> data_;
};

struct RunStats {
  std::size_t ticks = 0;
  Phases<std::size_t> saturated_ticks{};
  std::size_t freeze_violations = 0;  // saturated ticks whose voltage integrator moved
  double last_saturated_time = -1.0;
};

struct RunResult {
  TimeSeriesLog log;
  RunStats stats;
};

RunResult run(const SimConfig& sim, const EventSchedule& schedule, const ModelParams& model);

/// Closed-loop steady state of one phase with ideal voltage tracking, in rms phasors.
struct OperatingState {
  std::complex<double> e_osc;  // oscillator phasor
  std::complex<double> v_pcc;
  std::complex<double> i_out;  // inverter current beyond the capacitor
  std::complex<double> i_l;
  std::complex<double> v_c;
  double p = 0.0;  // exchanged with the oscillator voltage
  double q = 0.0;
  double omega = 0.0;
  double r_vim = 0.0;
  double x_vim = 0.0;
};

/// Solves the droop equilibrium of one phase against the grid state at time t. Only
/// loads with connect_time <= t are included.
OperatingState solve_operating_state(const ModelParams& model, std::size_t phase, double t = 0.0);

/// One fundamental-cycle sliding mean over samples taken every t_s.
class SlidingMean {
 public:
  SlidingMean(double t_s, double max_window);
  void push(double x);
  double mean(double window) const;

 private:
  double t_s_;
  std::vector<double> cum_;  // ring of running sums
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double total_ = 0.0;
  double at(std::size_t back) const;
};

// Metrics over a logged run.
struct Window {
  double t0 = 0.0;
  double t1 = 0.0;

  friend bool operator==(const Window&, const Window&) = default;
};

double window_mean(const TimeSeriesLog& log, const std::string& channel, Window w,
                   double min_length = 1.0 / 60.0);
double window_peak_to_peak(const TimeSeriesLog& log, const std::string& channel, Window w,
                           double min_length = 1.0 / 60.0);
/// Sag of the mean three-phase rms PCC voltage between two windows.
double sag_metric(const TimeSeriesLog& log, Window before, Window after);
/// Least-squares slope of y against x over paired samples.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

struct MetricsRequest {
  Window pre{0.5, 0.9};
  Window post{1.5, 2.0};
  Window onset{1.0, 1.5};
  Window trailing{1.5, 2.0};
  std::vector<Window> plateaus;  // optional steady stretches for droop slopes

  friend bool operator==(const MetricsRequest&, const MetricsRequest&) = default;
};

struct Metrics {
  double sag_percent = 0.0;
  double p_pre = 0.0, q_pre = 0.0;
  double p_post = 0.0, q_post = 0.0;
  double p_oscillation_onset = 0.0;  // same over the onset window
  double p_oscillation = 0.0;        // trailing peak-to-peak of the cycle-averaged total P
  double saturation_duty = 0.0;      // fraction of post-window ticks spent saturated
  // Per plateau: mean per-phase P [W], mean frequency [Hz], mean oscillator amplitude [V].
  std::vector<double> plateau_p, plateau_f, plateau_vz;
  double droop_slope = 0.0;  // Hz per W per phase, least squares over plateaus (0 if < 2)
};

Metrics compute_metrics(const TimeSeriesLog& log, const MetricsRequest& request);

}  // namespace vocstiff
