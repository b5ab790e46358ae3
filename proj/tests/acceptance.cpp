// Acceptance run: one line per criterion. Exit status 0 only when the failing set is
// exactly the one given with --expect-fail (empty by default).

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"
#include "vocstiff/droop.hpp"
#include "vocstiff/scenario.hpp"

using namespace vocstiff;
using Cx = std::complex<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RunResult run_spec(const ScenarioSpec& s) { return run(s.sim, s.schedule, s.model); }

// Time after t_step at which p_total enters and stays within tol of target until t_end.
double settle_time(const TimeSeriesLog& log, double t_step, double t_end, double target,
                   double tol) {
  const auto& t = log.time();
  const auto& p = log.channel("p_total");
  double last_out = t_step;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_step || t[i] > t_end) continue;
    if (std::abs(p[i] - target) > tol * target) last_out = t[i];
  }
  return last_out - t_step;
}

Outcome critical_gain_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec s = default_scenario();
  const StudyParams p = study_for(s);
  const CriticalGain c = critical_gain(p, s.analysis.eig_recompute, 0.0, 1.0);
  const double dt = seconds_since(t0);
  Outcome o;
  o.pass = c.found && c.k >= 0.15 && c.k <= 0.29 && dt < 10.0;
  o.detail = fmt("k_crit = %.4f Ohm/A, band [0.15, 0.29], %.2f s (formula gains, verbatim loops)",
                 c.found ? c.k : -1.0, dt);
  return o;
}

Outcome no_support_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec s = builtin("no-support");
  const RunResult r = run_spec(s);
  const double dt = seconds_since(t0);
  const double sag = sag_metric(r.log, s.metrics.pre, s.metrics.post);
  CircuitParams c = s.model.circuit;
  c.inverter_connected = false;
  std::vector<char> pre(c.loads.size()), post(c.loads.size(), 1);
  for (std::size_t k = 0; k < c.loads.size(); ++k) pre[k] = c.loads[k].connect_time <= 0.0;
  auto solve = [&](const std::vector<char>& on) {
    std::unique_ptr<bool[]> f(new bool[on.size()]);
    for (std::size_t k = 0; k < on.size(); ++k) f[k] = on[k];
    return std::abs(
        solve_phasor(s.model.grid, c, std::span<const bool>(f.get(), on.size()), std::nullopt).v_pcc);
  };
  const double oracle = measure_sag(solve(pre), solve(post));
  Outcome o;
  o.pass = std::abs(sag - 24.8) <= 2.0 && std::abs(sag - oracle) < 0.5 && dt < 30.0;
  o.detail = fmt("sag %.2f%% (target 24.8 +/- 2), phasor oracle %.2f%%, %.1f s for %.0f s simulated",
                 sag, oracle, dt, s.sim.t_end);
  return o;
}

Outcome vim_sag_check() {
  const ScenarioSpec s = builtin("sag-vim-007");
  const RunResult r = run_spec(s);
  const double sag = sag_metric(r.log, s.metrics.pre, s.metrics.post);
  const double t_event = s.schedule.events.front().time;
  const double last = r.stats.last_saturated_time;
  Outcome o;
  o.pass = std::abs(sag - 17.2) <= 2.5 && last < t_event + 0.2;
  o.detail = fmt("sag %.2f%% (target 17.2 +/- 2.5), last saturated tick %s (table gains, k = 0.07)",
                 sag, last < 0 ? "none" : fmt("%.3f s after the event", last - t_event).c_str());
  return o;
}

Outcome loss_of_sync_check() {
  const ScenarioSpec s = builtin("sag-no-vim");
  const RunResult r = run_spec(s);
  const Metrics m = compute_metrics(r.log, s.metrics);
  const std::size_t sat = r.stats.saturated_ticks[0] + r.stats.saturated_ticks[1] +
                          r.stats.saturated_ticks[2];
  Outcome o;
  o.pass = sat > 0 && m.saturation_duty > 0 && m.p_oscillation >= m.p_oscillation_onset &&
           m.p_oscillation > 0.05 * std::abs(m.p_pre);
  o.detail = fmt("P p-p onset %.0f W, trailing %.0f W, post-event saturation duty %.2f (table gains, "
                 "k = 0, I_max %.0f A)",
                 m.p_oscillation_onset, m.p_oscillation, m.saturation_duty, s.model.gains.i_max);
  return o;
}

Outcome active_droop_check() {
  ScenarioSpec a = builtin("freq-droop-steps");
  ScenarioSpec b = a;
  b.model.vim.m = b.model.vim.n = 0.07;
  const Metrics ma = compute_metrics(run_spec(a).log, a.metrics);
  const Metrics mb = compute_metrics(run_spec(b).log, b.metrics);
  const OscillatorParams& osc = a.model.osc;
  double worst_pair = 0, worst_law = 0;
  for (std::size_t i = 0; i < ma.plateau_p.size(); ++i) {
    worst_pair = std::max(worst_pair, support::rel_err(mb.plateau_p[i], ma.plateau_p[i]));
    for (const Metrics* m : {&ma, &mb}) {
      const double w = 2 * kPi * m->plateau_f[i];
      const double law = osc.p_ref + (w - osc.omega_n) / osc.active_slope(m->plateau_vz[i]);
      worst_law = std::max(worst_law, support::rel_err(m->plateau_p[i], law));
    }
  }
  Outcome o;
  o.pass = ma.plateau_p.size() == 6 && worst_pair < 0.05 && worst_law < 0.05;
  o.detail = fmt("plateaus %.0f..%.0f W, k = 0 vs 0.07 worst gap %.2f%%, worst gap to the droop "
                 "law %.2f%% (table gains)",
                 ma.plateau_p.front(), ma.plateau_p.back(), 100 * worst_pair, 100 * worst_law);
  return o;
}

Outcome modified_droop_check() {
  const ScenarioSpec base = builtin("sag5-k005");
  const double z = source_impedance(base.model.circuit, base.model.osc.omega_n);
  auto steady_q = [&](double k, double sag, double* v_z) {
    ScenarioSpec s = base;
    s.schedule.events.clear();
    s.model.vim.m = s.model.vim.n = k;
    const double v = (1.0 - sag) * s.model.grid.v_rms;
    s.schedule.events.push_back({0.0, EventKind::grid_amplitude, 0, 0.0, {v, v, v}});
    s.sim.t_end = 2.0;
    const RunResult r = run_spec(s);
    const Window w{1.5, 2.0};
    *v_z = window_mean(r.log, "vz_a", w);
    return window_mean(r.log, "q_total", w) / 3.0;
  };
  double worst = 0;
  std::array<std::array<double, 2>, 2> q_at{};  // [sag 5, sag 25][k]
  const std::array<double, 2> ks{0.05, 0.15};
  for (int step = 0; step <= 5; ++step) {
    const double sag = 0.05 * step;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      double vz = 0;
      const double q = steady_q(ks[j], sag, &vz);
      const double want = reactive_droop_vim(reactive_droop_plain(vz, base.model.osc), ks[j], z, vz);
      worst = std::max(worst, support::rel_err(q, want));
      if (step == 1) q_at[0][j] = q;
      if (step == 5) q_at[1][j] = q;
    }
  }
  const double gap5 = (q_at[0][0] - q_at[0][1]) / q_at[0][0];
  const double gap25 = (q_at[1][0] - q_at[1][1]) / q_at[1][0];
  Outcome o;
  o.pass = worst < 0.10 && q_at[0][0] > q_at[0][1] && q_at[1][0] > q_at[1][1] && gap25 > gap5;
  o.detail = fmt("worst pointwise gap %.2f%% over 0-25%% sag, k = 0.05 vs 0.15 relative Q gap "
                 "%.1f%% at 5%% sag, %.1f%% at 25%% (emulator network, table gains)",
                 100 * worst, 100 * gap5, 100 * gap25);
  return o;
}

Outcome dispatch_check() {
  const ScenarioSpec s = builtin("dispatch");
  const RunResult r = run_spec(s);
  const double t_step = s.schedule.events.front().time;
  const double first = settle_time(r.log, 0.0, t_step - 1e-9, 1500.0, 0.01);
  const double second = settle_time(r.log, t_step, s.sim.t_end, 2400.0, 0.01);
  Outcome o;
  o.pass = first < 0.5 && second < 0.5;
  o.detail = fmt("within 1%% of 1500 W after %.3f s, of 2400 W after %.3f s (emulator, table gains)",
                 first, second);
  return o;
}

Outcome ringdown_check() {
  const StudyParams p = study_for(default_scenario());
  const double k = 0.1;
  const auto ev = eigenvalues(assemble_model(p, compute_operating_point(p, k), k).a);
  Cx dominant(0, 0);
  for (const Cx& z : ev) {
    if (z.imag() <= 0) continue;
    if (-z.real() / std::abs(z) >= 0.9) continue;
    if (dominant == Cx(0, 0) || z.real() > dominant.real()) dominant = z;
  }
  const Ringdown r = simulate_ringdown(p, k, 0.01, 0.06);
  std::vector<double> y;
  for (std::size_t i = 20; i < r.x.size(); ++i) y.push_back(r.x[i][ig_d]);
  const auto modes = fit_modes(y, r.dt, 8);
  Cx fitted(0, 0);
  for (const auto& m : modes) {
    if (std::abs(m.pole.imag()) < 10) continue;
    fitted = Cx(m.pole.real(), std::abs(m.pole.imag()));
    break;  // modes are sorted by amplitude
  }
  const double e_freq = support::rel_err(fitted.imag(), dominant.imag());
  const double e_damp = support::rel_err(fitted.real(), dominant.real());
  Outcome o;
  o.pass = dominant != Cx(0, 0) && e_freq < 0.15 && e_damp < 0.15;
  o.detail = fmt("predicted %.1f %+.1fj, fitted %.1f %+.1fj: frequency %.1f%%, decay %.1f%% "
                 "(formula gains, verbatim loops, k = 0.1)",
                 dominant.real(), dominant.imag(), fitted.real(), fitted.imag(), 100 * e_freq,
                 100 * e_damp);
  return o;
}

Outcome hygiene_check() {
  std::vector<std::string> failed;
  // Phasor against time domain, and dt halving, on the open-inverter reference network.
  GridSource g;
  CircuitParams c;
  c.loads = {{2.5, 10e-3, 0.0}};
  const Cx e = std::polar(80.0, 0.1);
  auto simulate = [&](double dt, std::vector<double>* wave) {
    PlantState s;
    const double period = 2 * kPi / g.omega;
    const auto steps = static_cast<std::size_t>(std::llround(0.4 / dt));
    const auto tail = static_cast<std::size_t>(std::llround(5 * period / dt));
    std::vector<double> v, th;
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = n * dt;
      Phases<double> vc{};
      for (std::size_t p = 0; p < kPhases; ++p)
        vc[p] = kSqrt2 * std::abs(e) * std::cos(g.angle(t) - p * 2 * kPi / 3 + std::arg(e));
      s = step_plant(s, vc, g, c, t, dt);
      if (n + tail >= steps) {
        v.push_back(s.phase[0].v_pcc);
        th.push_back(g.angle(t + dt));
      }
    }
    if (wave) *wave = v;
    return support::fit_phasor(v, th);
  };
  const std::array<bool, 1> on{true};
  const Cx want = solve_phasor(g, c, on, e).v_pcc;
  std::vector<double> a, b;
  const Cx got = simulate(5e-6, &a);
  simulate(2.5e-6, &b);
  const double e_phasor = std::abs(got - want) / std::abs(want);
  double num = 0, den = 0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    num += (a[n] - b[2 * n]) * (a[n] - b[2 * n]);
    den += a[n] * a[n];
  }
  const double e_dt = std::sqrt(num / den);
  if (!(e_phasor < 0.005)) failed.push_back("phasor");
  if (!(e_dt < 0.001)) failed.push_back("dt-halving");

  // Eigensolver against the characteristic polynomial.
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-2, 2);
  double e_eig = 0;
  for (int n = 0; n < 20; ++n) {
    Eigen::MatrixXd m(5, 5);
    for (int i = 0; i < 25; ++i) m.data()[i] = u(rng);
    std::vector<double> cp(6);
    cp[0] = 1;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(5, 5);
    for (int k = 1; k <= 5; ++k) {
      acc = m * acc + cp[k - 1] * Eigen::MatrixXd::Identity(5, 5);
      cp[k] = -(m * acc).trace() / k;
    }
    const auto ev = eigenvalues(m);
    for (const Cx& r : support::poly_roots(cp)) {
      double best = 1e300;
      for (const Cx& z : ev) best = std::min(best, std::abs(z - r));
      e_eig = std::max(e_eig, best / std::max(1.0, std::abs(r)));
    }
  }
  if (!(e_eig < 1e-6)) failed.push_back("eigensolver");

  // Impedance linearization against central differences.
  double e_lin = 0;
  std::uniform_real_distribution<double> ui(-15, 15), uk(0.01, 0.3);
  for (int n = 0; n < 50; ++n) {
    const VimParams vp = VimParams::with_gain(uk(rng));
    const PerPhaseDq i0{ui(rng), std::abs(ui(rng)) + 0.5};
    const Eigen::Matrix2d j = linearize_vim(i0, vp);
    const double h = 1e-5;
    for (int col = 0; col < 2; ++col) {
      PerPhaseDq pa = i0, pb = i0;
      (col == 0 ? pa.d : pa.q) += h;
      (col == 0 ? pb.d : pb.q) -= h;
      const VirtualImpedance za = compute_vim(pa.q, vp), zb = compute_vim(pb.q, vp);
      const PerPhaseDq fa = feedforward_voltage(pa, za.r, za.x);
      const PerPhaseDq fb = feedforward_voltage(pb, zb.r, zb.x);
      const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
      e_lin = std::max(e_lin, std::abs((fa.d - fb.d) / (2 * h) - j(0, col)) / scale);
      e_lin = std::max(e_lin, std::abs((fa.q - fb.q) / (2 * h) - j(1, col)) / scale);
    }
  }
  if (!(e_lin < 1e-8)) failed.push_back("linearization");

  // Anti-windup: the engine counts every saturated tick whose voltage integrator moved.
  ScenarioSpec sat = builtin("sag-no-vim");
  sat.sim.t_end = 6.0;
  sat.metrics = MetricsRequest{};
  const RunResult r = run_spec(sat);
  const std::size_t ticks =
      r.stats.saturated_ticks[0] + r.stats.saturated_ticks[1] + r.stats.saturated_ticks[2];
  if (!(ticks > 0 && r.stats.freeze_violations == 0)) failed.push_back("anti-windup");

  Outcome o;
  o.pass = failed.empty();
  o.detail = fmt("phasor %.2e, dt-halving %.2e, eigen %.1e, linearization %.1e, %zu saturated "
                 "ticks with %zu integrator moves",
                 e_phasor, e_dt, e_eig, e_lin, ticks, r.stats.freeze_violations);
  for (const auto& f : failed) o.detail += " [" + f + " failed]";
  return o;
}

Outcome unbalanced_check() {
  const ScenarioSpec s = builtin("unbalanced-sag");
  const RunResult r = run_spec(s);
  double worst = 0;
  for (const char* ph : {"vrms_b", "vrms_c"}) {
    const double before = window_mean(r.log, ph, s.metrics.pre);
    const double after = window_mean(r.log, ph, s.metrics.post);
    worst = std::max(worst, support::rel_err(after, before));
  }
  const auto [lo, hi] = std::pair{window_mean(r.log, "sat_count_a", {s.metrics.post.t0, s.metrics.post.t0 + 0.02}),
                                  window_mean(r.log, "sat_count_a", {s.metrics.post.t1 - 0.02, s.metrics.post.t1})};
  const double post_ticks = (s.metrics.post.t1 - s.metrics.post.t0) / s.sim.t_s;
  const double duty = (hi - lo) / post_ticks;
  Outcome o;
  o.pass = worst < 0.02 && duty < 0.01;
  o.detail = fmt("phases b, c move %.2f%% from pre-event; phase a saturated %.2f%% of the post "
                 "window (table gains, k = 0.07)",
                 100 * worst, 100 * duty);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::size_t> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      expected.insert(std::stoul(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--expect-fail N]...\n");
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"critical gain", critical_gain_check},
      {"no-support sag", no_support_check},
      {"impedance sag improvement", vim_sag_check},
      {"loss of synchronism without the impedance", loss_of_sync_check},
      {"active droop unchanged by the impedance", active_droop_check},
      {"modified reactive droop", modified_droop_check},
      {"dispatch tracking", dispatch_check},
      {"linearization against the nonlinear ringdown", ringdown_check},
      {"numerical hygiene", hygiene_check},
      {"unbalanced sag", unbalanced_check},
  };
  int failures = 0;
  std::set<std::size_t> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) {
      ++failures;
      failed.insert(i + 1);
    }
    const char* note = "";
    if (expected.count(i + 1)) note = o.pass ? " [expected to fail, passed]" : " [expected]";
    std::printf("%s %2zu %s: %s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), note);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failed == expected ? 0 : 1;
}
