#include "vocstiff/plant.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace vocstiff {

namespace {

constexpr double kPhaseShift = 2.0 * kPi / 3.0;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

struct Derivative {
  double i_l, v_pcc, i_grid;
  std::array<double, kMaxLoads> i_load;
};

Derivative phase_rhs(const PhasePlantState& s, double v_c, double v_g, const CircuitParams& p,
                     const std::array<bool, kMaxLoads>& on) {
  Derivative d{};
  const std::size_t n = p.loads.size();
  double i_loads = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (on[k]) {
      d.i_load[k] = (s.v_pcc - p.loads[k].r * s.i_load[k]) / p.loads[k].l;
      i_loads += s.i_load[k];
    }
  }
  d.i_l = p.inverter_connected ? (v_c - s.v_pcc - p.r_f * s.i_l) / p.l_f : 0.0;
  d.v_pcc = (s.i_l - s.i_grid - i_loads) / p.c_f;
  d.i_grid = (s.v_pcc - v_g - p.r_g * s.i_grid) / p.l_g;
  return d;
}

PhasePlantState axpy(const PhasePlantState& s, double h, const Derivative& d, std::size_t n) {
  PhasePlantState r = s;
  r.i_l += h * d.i_l;
  r.v_pcc += h * d.v_pcc;
  r.i_grid += h * d.i_grid;
  for (std::size_t k = 0; k < n; ++k) r.i_load[k] += h * d.i_load[k];
  return r;
}

void check_finite(const PlantState& s, const Phases<double>& v_c, std::size_t n) {
  static constexpr char kName[] = {'a', 'b', 'c'};
  for (std::size_t p = 0; p < kPhases; ++p) {
    const auto& x = s.phase[p];
    auto fail = [&](const char* what) {
      std::ostringstream os;
      os << "non-finite " << what << " in phase " << kName[p];
      throw Error(ErrorCode::numeric_blowup, os.str());
    };
    if (!finite(v_c[p])) fail("bridge voltage v_c");
    if (!finite(x.i_l)) fail("inductor current i_l");
    if (!finite(x.v_pcc)) fail("PCC voltage v_pcc");
    if (!finite(x.i_grid)) fail("grid current i_grid");
    for (std::size_t k = 0; k < n; ++k)
      if (!finite(x.i_load[k])) fail("load current i_load");
  }
}

}  // namespace

void CircuitParams::validate() const {
  require(r_f >= 0 && r_g >= 0, "circuit resistances must be non-negative");
  require(l_f > 0 && l_g > 0, "circuit inductances must be positive");
  require(c_f > 0, "filter capacitance must be positive");
  require(loads.size() <= kMaxLoads, "too many load branches");
  for (const auto& l : loads) {
    require(l.r >= 0, "load resistance must be non-negative");
    require(l.l > 0, "load inductance must be positive");
    require(l.connect_time >= 0, "load connect time must be non-negative");
  }
}

double CircuitParams::min_time_constant() const {
  double tau = std::numeric_limits<double>::infinity();
  auto consider_rl = [&](double r, double l) {
    if (r > 0) tau = std::min(tau, l / r);
  };
  consider_rl(r_f, l_f);
  consider_rl(r_g, l_g);
  for (const auto& l : loads) consider_rl(l.r, l.l);
  // LC resonances: the capacitor against the smallest series inductance.
  double l_min = std::min(l_f, l_g);
  for (const auto& l : loads) l_min = std::min(l_min, l.l);
  tau = std::min(tau, std::sqrt(l_min * c_f));
  for (const auto& l : loads)
    if (l.r > 0) tau = std::min(tau, l.r * c_f);
  return tau;
}

void GridSource::validate() const {
  require(v_rms >= 0, "grid amplitude must be non-negative");
  require(omega > 0, "grid frequency must be positive");
  for (double s : phase_scale) require(s >= 0, "grid phase scale must be non-negative");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0)
      require(schedule[i].time > schedule[i - 1].time,
              "grid schedule breakpoints must be strictly increasing");
    if (schedule[i].v_rms)
      for (double v : *schedule[i].v_rms) require(v >= 0, "grid amplitude must be non-negative");
    if (schedule[i].omega) require(*schedule[i].omega > 0, "grid frequency must be positive");
  }
}

double GridSource::amplitude_rms(std::size_t phase, double t) const {
  double v = v_rms * phase_scale[phase];
  for (const auto& b : schedule) {
    if (b.time > t) break;
    if (b.v_rms) v = (*b.v_rms)[phase];
  }
  return v;
}

double GridSource::frequency(double t) const {
  double w = omega;
  for (const auto& b : schedule) {
    if (b.time > t) break;
    if (b.omega) w = *b.omega;
  }
  return w;
}

double GridSource::angle(double t) const {
  double theta = 0.0;
  double t0 = 0.0;
  double w = omega;
  for (const auto& b : schedule) {
    if (b.time > t) break;
    if (b.omega) {
      theta += w * (b.time - t0);
      t0 = b.time;
      w = *b.omega;
    }
  }
  return theta + w * (t - t0);
}

double GridSource::voltage(std::size_t phase, double t) const {
  return kSqrt2 * amplitude_rms(phase, t) *
         std::cos(angle(t) - kPhaseShift * static_cast<double>(phase));
}

std::complex<double> GridSource::phasor(std::size_t phase, double t) const {
  return std::polar(amplitude_rms(phase, t), -kPhaseShift * static_cast<double>(phase));
}

double PhasePlantState::i_out(std::size_t n_loads) const {
  double i = i_grid;
  for (std::size_t k = 0; k < n_loads; ++k) i += i_load[k];
  return i;
}

PlantState step_plant(const PlantState& state, const Phases<double>& v_c, const GridSource& grid,
                      const CircuitParams& params, double t, double dt) {
  if (!(dt > 0)) throw Error(ErrorCode::invalid_argument, "plant step must be positive");
  const std::size_t n = params.loads.size();
  check_finite(state, v_c, n);

  std::array<bool, kMaxLoads> on{};
  for (std::size_t k = 0; k < n; ++k) on[k] = t >= params.loads[k].connect_time;

  PlantState next;
  for (std::size_t p = 0; p < kPhases; ++p) {
    const auto& s = state.phase[p];
    const double vg0 = grid.voltage(p, t);
    const double vg1 = grid.voltage(p, t + 0.5 * dt);
    const double vg2 = grid.voltage(p, t + dt);
    const Derivative k1 = phase_rhs(s, v_c[p], vg0, params, on);
    const Derivative k2 = phase_rhs(axpy(s, 0.5 * dt, k1, n), v_c[p], vg1, params, on);
    const Derivative k3 = phase_rhs(axpy(s, 0.5 * dt, k2, n), v_c[p], vg1, params, on);
    const Derivative k4 = phase_rhs(axpy(s, dt, k3, n), v_c[p], vg2, params, on);
    auto& r = next.phase[p];
    const double h = dt / 6.0;
    r.i_l = s.i_l + h * (k1.i_l + 2 * k2.i_l + 2 * k3.i_l + k4.i_l);
    r.v_pcc = s.v_pcc + h * (k1.v_pcc + 2 * k2.v_pcc + 2 * k3.v_pcc + k4.v_pcc);
    r.i_grid = s.i_grid + h * (k1.i_grid + 2 * k2.i_grid + 2 * k3.i_grid + k4.i_grid);
    for (std::size_t k = 0; k < n; ++k)
      r.i_load[k] = s.i_load[k] +
                    h * (k1.i_load[k] + 2 * k2.i_load[k] + 2 * k3.i_load[k] + k4.i_load[k]);
  }
  check_finite(next, v_c, n);
  return next;
}

double stored_energy(const PlantState& state, const CircuitParams& params) {
  double e = 0.0;
  for (const auto& s : state.phase) {
    e += 0.5 * params.l_f * s.i_l * s.i_l;
    e += 0.5 * params.c_f * s.v_pcc * s.v_pcc;
    e += 0.5 * params.l_g * s.i_grid * s.i_grid;
    for (std::size_t k = 0; k < params.loads.size(); ++k)
      e += 0.5 * params.loads[k].l * s.i_load[k] * s.i_load[k];
  }
  return e;
}

PhasorSolution solve_phasor(const GridSource& grid, const CircuitParams& params,
                            std::span<const bool> connected_loads,
                            std::optional<std::complex<double>> inverter_source, std::size_t phase,
                            double t) {
  using C = std::complex<double>;
  if (connected_loads.size() != params.loads.size())
    throw Error(ErrorCode::invalid_argument, "connected_loads must match the load list");
  const double w = grid.frequency(t);
  const C j(0.0, 1.0);

  const C e_g = grid.phasor(phase, t);
  const C y_g = 1.0 / (params.r_g + j * w * params.l_g);
  const C y_c = j * w * params.c_f;
  std::vector<C> y_load(params.loads.size(), C{});
  C y_sum = y_g + y_c;
  C i_inj = y_g * e_g;
  for (std::size_t k = 0; k < params.loads.size(); ++k) {
    if (!connected_loads[k]) continue;
    y_load[k] = 1.0 / (params.loads[k].r + j * w * params.loads[k].l);
    y_sum += y_load[k];
  }
  C y_f{};
  if (inverter_source) {
    y_f = 1.0 / (params.r_f + j * w * params.l_f);
    y_sum += y_f;
    i_inj += y_f * *inverter_source;
  }
  const double scale = std::abs(y_g) + std::abs(y_c) + std::abs(y_f);
  if (!(std::abs(y_sum) > 1e-12 * scale))
    throw Error(ErrorCode::singular_system, "phasor network has a singular node admittance");

  PhasorSolution sol;
  sol.v_pcc = i_inj / y_sum;
  sol.i_grid = y_g * (sol.v_pcc - e_g);
  sol.i_cap = y_c * sol.v_pcc;
  sol.i_inverter = inverter_source ? y_f * (*inverter_source - sol.v_pcc) : C{};
  sol.i_load.resize(params.loads.size());
  for (std::size_t k = 0; k < params.loads.size(); ++k) sol.i_load[k] = y_load[k] * sol.v_pcc;
  return sol;
}

double measure_sag(double v_before, double v_after) {
  if (!(v_before > 0)) throw Error(ErrorCode::invalid_argument, "sag baseline must be positive");
  return 100.0 * (v_before - v_after) / v_before;
}

}  // namespace vocstiff
