#include "vocstiff/sim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "vocstiff/frames.hpp"

namespace vocstiff {

using cplx = std::complex<double>;

void ModelParams::validate() const {
  circuit.validate();
  grid.validate();
  osc.validate();
  vim.validate();
  gains.validate();
}

ModelParams default_model() {
  ModelParams m;
  m.circuit.loads.push_back({2.5, 10e-3, 0.0});
  m.grid.v_rms = 80.0;
  m.grid.omega = 2.0 * kPi * 60.0;
  m.osc.v_zn = 80.0;
  m.osc.omega_n = 2.0 * kPi * 60.0;
  m.osc.p_ref = 300.0;
  m.osc = design_oscillator(m.osc, OscillatorDesign{});
  // The bandwidth-formula voltage gain is too soft against this grid; the listed gain
  // set keeps the outer droop loop stable.
  m.gains = table_gains();
  return m;
}

void SimConfig::validate() const {
  if (!(t_end > 0)) throw Error(ErrorCode::invalid_argument, "t_end must be positive");
  if (!(dt_plant > 0 && t_s > 0)) throw Error(ErrorCode::invalid_argument, "steps must be > 0");
  const double ratio = t_s / dt_plant;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1)
    throw Error(ErrorCode::invalid_argument, "t_s must be an integer multiple of dt_plant");
  if (log_every == 0) throw Error(ErrorCode::invalid_argument, "log_every must be >= 1");
}

std::size_t SimConfig::substeps() const {
  return static_cast<std::size_t>(std::llround(t_s / dt_plant));
}

std::size_t SimConfig::ticks() const {
  return static_cast<std::size_t>(std::llround(t_end / t_s));
}

void EventSchedule::validate(std::size_t n_loads) const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!(e.time >= 0) || !finite(e.time))
      throw Error(ErrorCode::invalid_argument, "event times must be finite and >= 0");
    if (i > 0 && e.time < events[i - 1].time)
      throw Error(ErrorCode::invalid_argument, "event times must be non-decreasing");
    switch (e.kind) {
      case EventKind::load_connect:
        if (e.branch >= n_loads)
          throw Error(ErrorCode::invalid_argument, "load-connect names a missing branch");
        break;
      case EventKind::grid_frequency:
        if (!(e.value > 0)) throw Error(ErrorCode::invalid_argument, "grid frequency must be > 0");
        break;
      case EventKind::grid_amplitude:
        for (double a : e.amplitudes)
          if (!(a >= 0)) throw Error(ErrorCode::invalid_argument, "grid amplitude must be >= 0");
        break;
      case EventKind::vim_gain:
        if (!(e.value >= 0)) throw Error(ErrorCode::invalid_argument, "VIm gain must be >= 0");
        break;
      case EventKind::p_ref:
      case EventKind::q_ref:
        if (!finite(e.value)) throw Error(ErrorCode::invalid_argument, "reference must be finite");
        break;
    }
  }
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::load_connect: return "load-connect";
    case EventKind::grid_frequency: return "grid-frequency";
    case EventKind::grid_amplitude: return "grid-amplitude";
    case EventKind::p_ref: return "p-ref";
    case EventKind::q_ref: return "q-ref";
    case EventKind::vim_gain: return "vim-gain";
  }
  return "?";
}

// ---------------------------------------------------------------- log

std::size_t TimeSeriesLog::add_channel(const std::string& name, const std::string& unit) {
  if (has_channel(name) || name == "t")
    throw Error(ErrorCode::invalid_argument, "duplicate log channel " + name);
  names_.push_back(name);
  units_.push_back(unit);
  data_.emplace_back();
  return names_.size() - 1;
}

void TimeSeriesLog::append(const std::vector<double>& row) {
  if (row.size() != names_.size() + 1)
    throw Error(ErrorCode::invalid_argument, "log row width mismatch");
  time_.push_back(row[0]);
  for (std::size_t i = 0; i < names_.size(); ++i) data_[i].push_back(row[i + 1]);
}

bool TimeSeriesLog::has_channel(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& TimeSeriesLog::channel(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error(ErrorCode::invalid_argument, "no log channel " + name);
  return data_[static_cast<std::size_t>(it - names_.begin())];
}

void TimeSeriesLog::write_csv(std::ostream& os) const {
  os << "# units: t[s]";
  for (std::size_t i = 0; i < names_.size(); ++i) os << ',' << names_[i] << '[' << units_[i] << ']';
  os << "\nt";
  for (const auto& n : names_) os << ',' << n;
  os << '\n';
  char buf[32];
  for (std::size_t r = 0; r < time_.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.9g", time_[r]);
    os << buf;
    for (const auto& col : data_) {
      std::snprintf(buf, sizeof buf, "%.9g", col[r]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------- sliding mean

SlidingMean::SlidingMean(double t_s, double max_window)
    : t_s_(t_s), cum_(static_cast<std::size_t>(std::ceil(max_window / t_s)) + 3, 0.0) {}

void SlidingMean::push(double x) {
  total_ += x;
  cum_[head_] = total_;
  head_ = (head_ + 1) % cum_.size();
  ++count_;
}

double SlidingMean::at(std::size_t back) const {
  if (back >= count_) return 0.0;
  const std::size_t n = cum_.size();
  return cum_[(head_ + n - 1 - back) % n];
}

double SlidingMean::mean(double window) const {
  if (count_ == 0) return 0.0;
  double len = std::min(window / t_s_, static_cast<double>(std::min(count_, cum_.size() - 2)));
  const auto i = static_cast<std::size_t>(std::floor(len));
  const double f = len - static_cast<double>(i);
  const double start = at(i) + f * (at(i + 1) - at(i));
  return (at(0) - start) / len;
}

// ---------------------------------------------------------------- steady state

namespace {

struct PhaseNetwork {
  cplx e_g;
  cplx y_g;
  cplx y_load;
  cplx y_c;
  cplx z_f;
  double omega;
};

PhaseNetwork network_at(const ModelParams& m, std::size_t phase, double t) {
  PhaseNetwork n;
  n.omega = m.grid.frequency(t);
  const cplx j(0.0, 1.0);
  n.e_g = m.grid.phasor(phase, t);
  n.y_g = 1.0 / (m.circuit.r_g + j * n.omega * m.circuit.l_g);
  n.y_load = 0.0;
  for (const auto& l : m.circuit.loads)
    if (l.connect_time <= t) n.y_load += 1.0 / (l.r + j * n.omega * l.l);
  n.y_c = j * n.omega * m.circuit.c_f;
  n.z_f = m.circuit.r_f + j * n.omega * m.circuit.l_f;
  return n;
}

struct SteadyEval {
  Eigen::Vector4d residual;
  OperatingState state;
};

SteadyEval evaluate_steady(const ModelParams& m, const PhaseNetwork& n, const Eigen::Vector4d& x) {
  SteadyEval out;
  const cplx e(x[0], x[1]);
  const cplx vp(x[2], x[3]);
  const cplx i_out = (vp - n.e_g) * n.y_g + vp * n.y_load;
  const double theta = std::arg(e);
  const double g = m.vim.numerator_gain() / (m.vim.omega_f * m.vim.omega_f);
  const cplx i_dq = kSqrt2 * i_out * std::polar(1.0, -theta);
  const VirtualImpedance z = compute_vim(-g * i_dq.imag(), m.vim);
  const cplx v_vim = -cplx(z.r, z.x) * g * i_out;
  const cplx s = e * std::conj(i_out);
  const double v = std::abs(e);
  const double p_t = m.osc.p_ref + (n.omega - m.osc.omega_n) / m.osc.active_slope(v);
  const double vn = m.osc.v_zn;
  const double q_t = m.osc.q_ref + m.osc.reactive_coefficient() * v * v * (2 * vn * vn - 2 * v * v);
  const double vs = std::max(vn, 1.0);
  const double ps = std::max(std::abs(m.osc.p_ref), vs * vs * std::abs(n.y_g));
  const cplx r1 = vp - e - v_vim;
  out.residual << r1.real() / vs, r1.imag() / vs, (s.real() - p_t) / ps, (s.imag() - q_t) / ps;

  auto& st = out.state;
  st.e_osc = e;
  st.v_pcc = vp;
  st.i_out = i_out;
  st.i_l = i_out + vp * n.y_c;
  st.v_c = vp + n.z_f * st.i_l;
  st.p = s.real();
  st.q = s.imag();
  st.omega = n.omega;
  st.r_vim = z.r;
  st.x_vim = z.x;
  return out;
}

}  // namespace

OperatingState solve_operating_state(const ModelParams& m, std::size_t phase, double t) {
  const PhaseNetwork n = network_at(m, phase, t);
  const cplx e_guess = std::abs(n.e_g) > 1e-9 ? n.e_g : std::polar(m.osc.v_zn, std::arg(n.e_g));
  const double scales[] = {1.0, 1.1, 0.95, 1.25, 0.8};
  const double shifts[] = {0.0, 0.1, -0.1, 0.3};
  for (double sc : scales) {
    for (double sh : shifts) {
      const cplx e0 = sc * e_guess * std::polar(1.0, sh);
      Eigen::Vector4d x(e0.real(), e0.imag(), e0.real(), e0.imag());
      SteadyEval ev = evaluate_steady(m, n, x);
      for (int it = 0; it < 100; ++it) {
        const double norm = ev.residual.norm();
        if (norm < 1e-12) return ev.state;
        Eigen::Matrix4d jac;
        for (int c = 0; c < 4; ++c) {
          const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
          Eigen::Vector4d xp = x, xm = x;
          xp[c] += h;
          xm[c] -= h;
          jac.col(c) = (evaluate_steady(m, n, xp).residual - evaluate_steady(m, n, xm).residual) /
                       (2 * h);
        }
        const Eigen::Vector4d dx = jac.fullPivLu().solve(-ev.residual);
        if (!dx.allFinite()) break;
        double lambda = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
          const Eigen::Vector4d xn = x + lambda * dx;
          SteadyEval en = evaluate_steady(m, n, xn);
          if (en.residual.allFinite() && en.residual.norm() < norm) {
            x = xn;
            ev = en;
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }
      if (ev.residual.norm() < 1e-9) return ev.state;
    }
  }
  std::ostringstream os;
  os << "no droop equilibrium found for phase " << phase << " at t = " << t << " s";
  throw Error(ErrorCode::infeasible_operating_point, os.str());
}

// ---------------------------------------------------------------- run

namespace {

constexpr const char* kPhaseName[] = {"a", "b", "c"};

struct Channels {
  struct PerPhase {
    std::size_t v_pcc, i_out, i_l, v_c, p, q, vrms, vz, f, r, x, sat, sat_count, iref, i_d, i_q,
        v_d, v_q;
  };
  Phases<PerPhase> ph;
  std::size_t p_total, q_total, vrms_mean, tick;
};

Channels make_channels(TimeSeriesLog& log) {
  Channels c;
  for (std::size_t p = 0; p < kPhases; ++p) {
    const std::string s = std::string("_") + kPhaseName[p];
    auto& x = c.ph[p];
    x.v_pcc = log.add_channel("v_pcc" + s, "V");
    x.i_out = log.add_channel("i_out" + s, "A");
    x.i_l = log.add_channel("i_l" + s, "A");
    x.v_c = log.add_channel("v_c" + s, "V");
    x.p = log.add_channel("p" + s, "W");
    x.q = log.add_channel("q" + s, "var");
    x.vrms = log.add_channel("vrms" + s, "V");
    x.vz = log.add_channel("vz" + s, "V");
    x.f = log.add_channel("f" + s, "Hz");
    x.r = log.add_channel("r_vim" + s, "Ohm");
    x.x = log.add_channel("x_vim" + s, "Ohm");
    x.sat = log.add_channel("sat" + s, "-");
    x.sat_count = log.add_channel("sat_count" + s, "ticks");
    x.iref = log.add_channel("i_ref" + s, "A");
    x.i_d = log.add_channel("i_d" + s, "A");
    x.i_q = log.add_channel("i_q" + s, "A");
    x.v_d = log.add_channel("v_d" + s, "V");
    x.v_q = log.add_channel("v_q" + s, "V");
  }
  c.p_total = log.add_channel("p_total", "W");
  c.q_total = log.add_channel("q_total", "var");
  c.vrms_mean = log.add_channel("vrms_mean", "V");
  c.tick = log.add_channel("tick", "-");
  return c;
}

struct TickEvent {
  std::size_t tick;
  Event event;
};

double real_part_instant(cplx x) { return kSqrt2 * x.real(); }

}  // namespace

RunResult run(const SimConfig& sim, const EventSchedule& schedule, const ModelParams& model_in) {
  sim.validate();
  model_in.validate();
  schedule.validate(model_in.circuit.loads.size());

  ModelParams model = model_in;
  const std::size_t sub = sim.substeps();
  const std::size_t n_ticks = sim.ticks();
  const double ts = sim.t_s;
  auto tick_of = [&](double t) { return static_cast<std::size_t>(std::llround(t / ts)); };
  // Plant-side switching instants sit half a plant step before their tick so the
  // comparison against the substep time is exact.
  auto plant_time = [&](std::size_t tick) {
    return tick == 0 ? 0.0 : static_cast<double>(tick) * ts - 0.5 * sim.dt_plant;
  };

  std::map<std::size_t, GridBreakpoint> grid_bp;
  for (const auto& b : model.grid.schedule) grid_bp[tick_of(b.time)] = b;
  std::vector<TickEvent> controller_events;
  for (const Event& e : schedule.events) {
    const std::size_t k = tick_of(e.time);
    switch (e.kind) {
      case EventKind::load_connect:
        model.circuit.loads[e.branch].connect_time = plant_time(k);
        break;
      case EventKind::grid_frequency: {
        auto& b = grid_bp[k];
        b.time = plant_time(k);
        b.omega = e.value;
        break;
      }
      case EventKind::grid_amplitude: {
        auto& b = grid_bp[k];
        b.time = plant_time(k);
        b.v_rms = e.amplitudes;
        break;
      }
      default:
        controller_events.push_back({k, e});
    }
  }
  model.grid.schedule.clear();
  for (auto& [k, b] : grid_bp) {
    b.time = plant_time(k);
    if (k == 0) {
      // Effective from the start: fold into the base source.
      if (b.omega) model.grid.omega = *b.omega;
      if (b.v_rms) {
        model.grid.v_rms = 1.0;
        model.grid.phase_scale = *b.v_rms;
      }
      continue;
    }
    model.grid.schedule.push_back(b);
  }
  model.circuit.inverter_connected = model.inverter_enabled;
  std::size_t next_event = 0;
  while (next_event < controller_events.size() && controller_events[next_event].tick == 0) {
    const Event& e = controller_events[next_event++].event;
    if (e.kind == EventKind::p_ref) model.osc.p_ref = e.value;
    if (e.kind == EventKind::q_ref) model.osc.q_ref = e.value;
    if (e.kind == EventKind::vim_gain) model.vim.m = model.vim.n = e.value;
  }

  const CircuitParams& cp = model.circuit;
  const std::size_t n_loads = cp.loads.size();

  // Initial state from the phasor steady state.
  PlantState plant;
  OscillatorState osc;
  Phases<QuadratureGenerator> sogi_v, sogi_il;
  Phases<TwoSampleQuadrature> quad_io;
  const double w_quad = model.osc.omega_n;
  VimState vim;
  PiState pi;
  Phases<double> v_c{};
  Phases<double> frame_omega{};
  std::vector<bool> on0(n_loads);
  for (std::size_t k = 0; k < n_loads; ++k) on0[k] = cp.loads[k].connect_time <= 0.0;
  for (std::size_t p = 0; p < kPhases; ++p) {
    const double w = model.grid.frequency(0.0);
    frame_omega[p] = w;
    cplx vp, io, il, vc, e;
    if (model.inverter_enabled) {
      const OperatingState st = solve_operating_state(model, p, 0.0);
      vp = st.v_pcc;
      io = st.i_out;
      il = st.i_l;
      vc = st.v_c;
      e = st.e_osc;
    } else {
      std::unique_ptr<bool[]> flags(new bool[n_loads + 1]);
      for (std::size_t k = 0; k < n_loads; ++k) flags[k] = on0[k];
      const PhasorSolution s =
          solve_phasor(model.grid, cp, std::span<const bool>(flags.get(), n_loads), std::nullopt, p);
      vp = s.v_pcc;
      io = -s.i_cap;
      il = 0.0;
      vc = 0.0;
      e = std::polar(model.osc.v_zn, std::arg(vp));
    }
    const PhaseNetwork net = network_at(model, p, 0.0);
    auto& ps = plant.phase[p];
    ps.v_pcc = real_part_instant(vp);
    ps.i_l = real_part_instant(il);
    ps.i_grid = real_part_instant((vp - net.e_g) * net.y_g);
    for (std::size_t k = 0; k < n_loads; ++k) {
      if (!on0[k]) continue;
      const cplx yk = 1.0 / (cp.loads[k].r + cplx(0.0, w * cp.loads[k].l));
      ps.i_load[k] = real_part_instant(vp * yk);
    }
    osc.v[p] = {kSqrt2 * e.real(), kSqrt2 * e.imag()};
    sogi_v[p].preset(kSqrt2 * vp.real(), kSqrt2 * vp.imag());
    sogi_il[p].preset(kSqrt2 * il.real(), kSqrt2 * il.imag());
    quad_io[p].preset(kSqrt2 * io.real(), kSqrt2 * io.imag(), w_quad, sim.t_s);
    v_c[p] = real_part_instant(vc);
    if (model.inverter_enabled) {
      const double theta = std::arg(e);
      const cplx rot = std::polar(kSqrt2, -theta);
      const cplx io_dq = io * rot, il_dq = il * rot, vp_dq = vp * rot, vc_dq = vc * rot;
      vim.phase[p] = filter_preset(to_controller_frame({io_dq.real(), io_dq.imag()}), model.vim);
      const PerPhaseDq v_vim = to_controller_frame(
          feedforward_voltage(vim.phase[p].filtered(), vim.phase[p].r, vim.phase[p].x));
      pi.phase[p].voltage.integral = PerPhaseDq{il_dq.real(), il_dq.imag()} + model.gains.f_ff * v_vim;
      const double wl = w * cp.l_f;
      if (model.current_loop == CurrentLoopVariant::standard) {
        pi.phase[p].current.integral = {vc_dq.real() - vp_dq.real() + wl * il_dq.imag(),
                                        vc_dq.imag() - vp_dq.imag() - wl * il_dq.real()};
      } else {
        const PerPhaseDq vcc = to_controller_frame({vc_dq.real(), vc_dq.imag()});
        const PerPhaseDq vpc = to_controller_frame({vp_dq.real(), vp_dq.imag()});
        pi.phase[p].current.integral = {vcc.d + wl * vpc.q, vcc.q - wl * vpc.d};
      }
    }
  }

  const double w_min = 0.5 * std::min(model.osc.omega_n, model.grid.omega);
  const double max_window = 2.0 * kPi / w_min;
  std::vector<SlidingMean> p_mean(kPhases, SlidingMean(ts, max_window));
  std::vector<SlidingMean> q_mean = p_mean, v2_mean = p_mean;

  RunResult result;
  TimeSeriesLog& log = result.log;
  const Channels ch = make_channels(log);
  std::vector<double> row(log.channels() + 1, 0.0);
  RunStats& stats = result.stats;

  Phases<bool> sat{};
  Phases<double> iref_mag{};
  Phases<PerPhaseDq> io_dq_log{}, vp_dq_log{};

  double t = 0.0;
  for (std::size_t n = 0; n <= n_ticks; ++n) {
    t = static_cast<double>(n) * ts;
    while (next_event < controller_events.size() && controller_events[next_event].tick <= n) {
      const Event& e = controller_events[next_event++].event;
      if (e.kind == EventKind::p_ref) model.osc.p_ref = e.value;
      if (e.kind == EventKind::q_ref) model.osc.q_ref = e.value;
      if (e.kind == EventKind::vim_gain) model.vim.m = model.vim.n = e.value;
    }
    const double w_grid = model.grid.frequency(t);

    for (std::size_t p = 0; p < kPhases; ++p) {
      const auto& ps = plant.phase[p];
      const double vp = ps.v_pcc;
      const double il = ps.i_l;
      const double io = ps.i_out(n_loads);
      // Quadrature generators stay tuned at nominal frequency.
      sogi_v[p].step(vp, w_quad, ts);
      sogi_il[p].step(il, w_quad, ts);
      const double io_quad = quad_io[p].step(io, w_quad, ts);
      if (model.inverter_enabled && n < n_ticks) {
        const Vec2 v = osc.v[p];
        const Vec2 i_fb{io, io_quad};
        const double theta = frame_angle(v);
        const double omega = std::clamp(oscillator_frequency(v, i_fb, model.osc),
                                        0.5 * model.osc.omega_n, 1.5 * model.osc.omega_n);
        frame_omega[p] = omega;
        const PerPhaseDq vp_dq = abc_to_dq(vp, theta, sogi_v[p].quadrature());
        const PerPhaseDq il_dq = abc_to_dq(il, theta, sogi_il[p].quadrature());
        const PerPhaseDq io_dq = abc_to_dq(io, theta, io_quad);
        const VimTick vt = vim_tick(vim.phase[p], io_dq, model.vim, ts);
        vim.phase[p] = vt.state;
        const PerPhaseDq v_ref{v.norm(), 0.0};
        auto& pis = pi.phase[p];
        const VoltageLoopOutput vo =
            voltage_loop_step(v_ref, vt.v_vim, vp_dq, model.gains, pis.voltage, ts);
        const LimitResult lim = limit_current_ref(vo.i_ref, model.gains.i_max);
        if (lim.saturated) {
          const PerPhaseDq before = pis.voltage.integral;
          pis.voltage.prev_error = vo.advanced.prev_error;
          if (!(pis.voltage.integral == before)) ++stats.freeze_violations;
          ++stats.saturated_ticks[p];
          stats.last_saturated_time = t;
        } else {
          pis.voltage = vo.advanced;
        }
        pis.saturated = lim.saturated;
        sat[p] = lim.saturated;
        iref_mag[p] = lim.value.norm();
        const CurrentLoopOutput co = current_loop_step(lim.value, il_dq, vp_dq, model.gains, omega,
                                                       cp.l_f, cp.c_f, pis.current, ts,
                                                       model.current_loop);
        pis.current = co.advanced;
        v_c[p] = dq_to_abc(co.v_cmd, theta).alpha;
        io_dq_log[p] = to_controller_frame(io_dq);
        vp_dq_log[p] = vp_dq;
        osc.v[p] = oscillator_step(v, i_fb, model.osc, ts, omega);
        if (!finite(v_c[p])) {
          std::ostringstream os;
          os << "non-finite bridge command in phase " << kPhaseName[p] << " at t = " << t << " s";
          throw Error(ErrorCode::numeric_blowup, os.str());
        }
      }
      p_mean[p].push(vp * io);
      q_mean[p].push(sogi_v[p].quadrature() * io);
      v2_mean[p].push(vp * vp);
    }

    if (n % sim.log_every == 0 || n == n_ticks) {
      const double window = 2.0 * kPi / w_grid;
      row[0] = t;
      double p_tot = 0.0, q_tot = 0.0, v_avg = 0.0;
      for (std::size_t p = 0; p < kPhases; ++p) {
        const auto& c = ch.ph[p];
        const auto& ps = plant.phase[p];
        const double pm = p_mean[p].mean(window);
        const double qm = q_mean[p].mean(window);
        const double vr = std::sqrt(std::max(0.0, v2_mean[p].mean(window)));
        row[1 + c.v_pcc] = ps.v_pcc;
        row[1 + c.i_out] = ps.i_out(n_loads);
        row[1 + c.i_l] = ps.i_l;
        row[1 + c.v_c] = v_c[p];
        row[1 + c.p] = pm;
        row[1 + c.q] = qm;
        row[1 + c.vrms] = vr;
        row[1 + c.vz] = model.inverter_enabled ? amplitude_rms(osc.v[p]) : 0.0;
        row[1 + c.f] = model.inverter_enabled ? frame_omega[p] / (2 * kPi) : w_grid / (2 * kPi);
        row[1 + c.r] = vim.phase[p].r;
        row[1 + c.x] = vim.phase[p].x;
        row[1 + c.sat] = sat[p] ? 1.0 : 0.0;
        row[1 + c.sat_count] = static_cast<double>(stats.saturated_ticks[p]);
        row[1 + c.iref] = iref_mag[p];
        row[1 + c.i_d] = io_dq_log[p].d;
        row[1 + c.i_q] = io_dq_log[p].q;
        row[1 + c.v_d] = vp_dq_log[p].d;
        row[1 + c.v_q] = vp_dq_log[p].q;
        p_tot += pm;
        q_tot += qm;
        v_avg += vr / 3.0;
      }
      row[1 + ch.p_total] = p_tot;
      row[1 + ch.q_total] = q_tot;
      row[1 + ch.vrms_mean] = v_avg;
      row[1 + ch.tick] = static_cast<double>(n);
      log.append(row);
    }
    if (n == n_ticks) break;

    for (std::size_t s = 0; s < sub; ++s) {
      const double tp = t + static_cast<double>(s) * sim.dt_plant;
      try {
        plant = step_plant(plant, v_c, model.grid, cp, tp, sim.dt_plant);
      } catch (const Error& err) {
        std::ostringstream os;
        os << err.what() << " at t = " << tp << " s";
        throw Error(err.code(), os.str());
      }
    }
  }
  stats.ticks = n_ticks;
  return result;
}

// ---------------------------------------------------------------- metrics

namespace {

std::pair<std::size_t, std::size_t> window_rows(const TimeSeriesLog& log, Window w,
                                                double min_length) {
  if (!(w.t1 - w.t0 >= min_length * (1.0 - 1e-9)))
    throw Error(ErrorCode::invalid_argument, "metric window shorter than one fundamental cycle");
  const auto& t = log.time();
  if (t.empty() || w.t0 < t.front() - 1e-12 || w.t1 > t.back() + 1e-9)
    throw Error(ErrorCode::invalid_argument, "metric window outside the logged span");
  const auto lo = std::lower_bound(t.begin(), t.end(), w.t0 - 1e-12) - t.begin();
  const auto hi = std::upper_bound(t.begin(), t.end(), w.t1 + 1e-12) - t.begin();
  if (hi <= lo) throw Error(ErrorCode::invalid_argument, "metric window holds no samples");
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

double window_mean(const TimeSeriesLog& log, const std::string& channel, Window w,
                   double min_length) {
  const auto [lo, hi] = window_rows(log, w, min_length);
  const auto& y = log.channel(channel);
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += y[i];
  return s / static_cast<double>(hi - lo);
}

double window_peak_to_peak(const TimeSeriesLog& log, const std::string& channel, Window w,
                           double min_length) {
  const auto [lo, hi] = window_rows(log, w, min_length);
  const auto& y = log.channel(channel);
  const auto [mn, mx] = std::minmax_element(y.begin() + static_cast<std::ptrdiff_t>(lo),
                                            y.begin() + static_cast<std::ptrdiff_t>(hi));
  return *mx - *mn;
}

double sag_metric(const TimeSeriesLog& log, Window before, Window after) {
  return measure_sag(window_mean(log, "vrms_mean", before), window_mean(log, "vrms_mean", after));
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::invalid_argument, "slope needs two or more paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) throw Error(ErrorCode::invalid_argument, "slope of a constant abscissa");
  return sxy / sxx;
}

Metrics compute_metrics(const TimeSeriesLog& log, const MetricsRequest& r) {
  Metrics m;
  m.sag_percent = sag_metric(log, r.pre, r.post);
  m.p_pre = window_mean(log, "p_total", r.pre);
  m.q_pre = window_mean(log, "q_total", r.pre);
  m.p_post = window_mean(log, "p_total", r.post);
  m.q_post = window_mean(log, "q_total", r.post);
  m.p_oscillation_onset = window_peak_to_peak(log, "p_total", r.onset);
  m.p_oscillation = window_peak_to_peak(log, "p_total", r.trailing);
  for (const Window& w : r.plateaus) {
    m.plateau_p.push_back(window_mean(log, "p_total", w) / 3.0);
    double f = 0.0, vz = 0.0;
    for (const char* ph : kPhaseName) {
      f += window_mean(log, std::string("f_") + ph, w) / 3.0;
      vz += window_mean(log, std::string("vz_") + ph, w) / 3.0;
    }
    m.plateau_f.push_back(f);
    m.plateau_vz.push_back(vz);
  }
  if (m.plateau_p.size() >= 2) m.droop_slope = least_squares_slope(m.plateau_p, m.plateau_f);
  const auto [lo, hi] = window_rows(log, r.post, 1.0 / 60.0);
  const auto& ticks = log.channel("tick");
  const double span = ticks[hi - 1] - ticks[lo];
  if (span > 0) {
    double sat = 0.0;
    for (const char* ph : kPhaseName) {
      const auto& c = log.channel(std::string("sat_count_") + ph);
      sat += c[hi - 1] - c[lo];
    }
    m.saturation_duty = sat / (3.0 * span);
  }
  return m;
}

}  // namespace vocstiff
