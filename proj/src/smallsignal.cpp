#include "vocstiff/smallsignal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "vocstiff/oscillator.hpp"

namespace vocstiff {

namespace {

using cplx = std::complex<double>;

cplx as_complex(PerPhaseDq x) { return {x.d, x.q}; }
PerPhaseDq as_dq(cplx z) { return {z.real(), z.imag()}; }

VimParams study_vim(const StudyParams& p, double k) {
  VimParams v = p.vim;
  v.m = k;
  v.n = k;
  return v;
}

}  // namespace

const char* to_string(LoopForm form) {
  switch (form) {
    case LoopForm::verbatim: return "verbatim";
    case LoopForm::standard: return "standard";
    case LoopForm::literal: return "literal";
  }
  return "unknown";
}

void StudyParams::validate() const {
  if (!(r_g >= 0 && l_g > 0 && r_f >= 0 && l_f > 0 && c_f > 0))
    throw Error(ErrorCode::invalid_argument, "study network values must be positive");
  gains.validate();
  vim.validate();
  if (!(omega0 > 0)) throw Error(ErrorCode::invalid_argument, "omega0 must be positive");
  if (!(v_min > 0)) throw Error(ErrorCode::invalid_argument, "v_min must be positive");
  if (!(q_max >= 0) || !finite(p0))
    throw Error(ErrorCode::invalid_argument, "study loading must be finite with q_max >= 0");
}

StudyParams default_study() {
  StudyParams p;
  p.gains = design_gains(p.l_f, p.r_f, p.c_f, 2.0 * kPi * 1500.0, 2.0 * kPi * 400.0);
  OscillatorParams o;
  o.v_zn = 80.0;
  o.p_ref = 300.0;
  o = design_oscillator(o, OscillatorDesign{});
  const double v = 0.75 * o.v_zn;
  p.v_min = v;
  p.p0 = o.p_ref;
  p.q_max = o.reactive_coefficient() * v * v * (2 * o.v_zn * o.v_zn - 2 * v * v);
  return p;
}

const std::vector<std::string>& study_state_labels() {
  static const std::vector<std::string> labels = {
      "i_g_d", "i_g_q", "i_l_d", "i_l_q", "v_pcc_d", "v_pcc_q", "i_f_d", "i_f_d_rate",
      "i_f_q", "i_f_q_rate", "z_v_d", "z_v_q", "z_i_d", "z_i_q"};
  return labels;
}

StudyState study_rhs(const StudyState& x, const StudyInputs& u, const StudyParams& p, double k) {
  const VimParams vim = study_vim(p, k);
  const LoopGains& g = p.gains;
  const double w = p.omega0;

  const PerPhaseDq ig{x[ig_d], x[ig_q]};
  const PerPhaseDq il{x[il_d], x[il_q]};
  const PerPhaseDq v{x[vc_d], x[vc_q]};
  // Controller-frame views.
  const PerPhaseDq ig_c = to_controller_frame(ig);
  const PerPhaseDq il_c = to_controller_frame(il);
  const PerPhaseDq v_c = to_controller_frame(v);

  const PerPhaseDq i_f{x[fd], x[fq]};
  const VirtualImpedance z = compute_vim(i_f.q, vim);
  const PerPhaseDq v_vim = feedforward_voltage(i_f, z.r, z.x);

  const PerPhaseDq e_v{u.v_voc + v_vim.d - v_c.d, v_vim.q - v_c.q};
  const PerPhaseDq i_ref = g.k_pv * e_v + PerPhaseDq{x[zv_d], x[zv_q]} - g.f_ff * v_vim;

  PerPhaseDq e_i, v_bridge;
  const PerPhaseDq zi{x[zi_d], x[zi_q]};
  if (p.form == LoopForm::standard) {
    e_i = to_controller_frame(i_ref) - il;  // plant frame
    const PerPhaseDq pi = g.k_pi * e_i + zi;
    v_bridge = {pi.d + v.d - w * p.l_f * il.q, pi.q + v.q + w * p.l_f * il.d};
  } else {
    const PerPhaseDq fb = p.form == LoopForm::verbatim ? il_c : ig_c;
    e_i = {i_ref.d - fb.d - w * p.c_f * v_c.q, i_ref.q - fb.q + w * p.c_f * v_c.d};
    const PerPhaseDq pi = g.k_pi * e_i + zi;
    v_bridge = to_controller_frame({pi.d - w * p.l_f * v_c.q, pi.q + w * p.l_f * v_c.d});
  }

  const double num = vim.numerator_gain();
  const double wf = vim.omega_f;
  StudyState dx;
  dx[ig_d] = (v.d - u.v_grid.d - p.r_g * ig.d) / p.l_g + w * ig.q;
  dx[ig_q] = (v.q - u.v_grid.q - p.r_g * ig.q) / p.l_g - w * ig.d;
  dx[il_d] = (v_bridge.d - v.d - p.r_f * il.d) / p.l_f + w * il.q;
  dx[il_q] = (v_bridge.q - v.q - p.r_f * il.q) / p.l_f - w * il.d;
  dx[vc_d] = (il.d - ig.d) / p.c_f + w * v.q;
  dx[vc_q] = (il.q - ig.q) / p.c_f - w * v.d;
  dx[fd] = x[fd_dot];
  dx[fd_dot] = num * ig_c.d - wf * x[fd_dot] - wf * wf * x[fd];
  dx[fq] = x[fq_dot];
  dx[fq_dot] = num * ig_c.q - wf * x[fq_dot] - wf * wf * x[fq];
  dx[zv_d] = g.k_iv * e_v.d;
  dx[zv_q] = g.k_iv * e_v.q;
  dx[zi_d] = g.k_ii * e_i.d;
  dx[zi_q] = g.k_ii * e_i.q;
  return dx;
}

namespace {

struct Loading {
  cplx v, i, vg, il, vb, i_f;
  VirtualImpedance z;
};

// Network quantities for the PCC voltage at angle delta in the oscillator frame.
Loading loading_at(const StudyParams& p, const VimParams& vim, double delta) {
  Loading l;
  const double w = p.omega0;
  l.v = std::polar(kSqrt2 * p.v_min, delta);
  const cplx s(p.p0, p.q_max);
  l.i = 2.0 * std::conj(s) / std::conj(l.v);
  l.vg = l.v - cplx(p.r_g, w * p.l_g) * l.i;
  l.il = l.i + cplx(0.0, w * p.c_f) * l.v;
  l.vb = l.v + cplx(p.r_f, w * p.l_f) * l.il;
  const double dc = vim.numerator_gain() / (vim.omega_f * vim.omega_f);
  l.i_f = dc * std::conj(l.i);
  l.z = compute_vim(l.i_f.imag(), vim);
  return l;
}

// Angle mismatch between the oscillator axis and v - v_vim.
double frame_residual(const StudyParams& p, const VimParams& vim, double delta) {
  const Loading l = loading_at(p, vim, delta);
  const cplx v_vim_ctrl = as_complex(feedforward_voltage(as_dq(l.i_f), l.z.r, l.z.x));
  const cplx e = l.v - std::conj(v_vim_ctrl);
  return std::remainder(std::arg(e), 2.0 * kPi);
}

}  // namespace

OperatingPoint compute_operating_point(const StudyParams& p, double k) {
  p.validate();
  if (!(k >= 0)) throw Error(ErrorCode::invalid_argument, "impedance gain must be >= 0");
  const VimParams vim = study_vim(p, k);

  // The oscillator axis must line up with v - v_vim; scan the PCC angle for the
  // sign change nearest zero, then bisect.
  constexpr int kScan = 720;
  double best = 0.0;
  bool have = false;
  double prev_d = -0.5 * kPi;
  double prev_r = frame_residual(p, vim, prev_d);
  for (int s = 1; s <= kScan; ++s) {
    const double d = -0.5 * kPi + kPi * s / kScan;
    const double r = frame_residual(p, vim, d);
    if ((prev_r <= 0) != (r <= 0) && std::abs(r - prev_r) < kPi) {
      double lo = prev_d, hi = d, rlo = prev_r;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rm = frame_residual(p, vim, mid);
        if ((rm <= 0) == (rlo <= 0)) {
          lo = mid;
          rlo = rm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      const Loading l = loading_at(p, vim, root);
      const cplx v_vim_ctrl = as_complex(feedforward_voltage(as_dq(l.i_f), l.z.r, l.z.x));
      if ((l.v - std::conj(v_vim_ctrl)).real() > 0 && (!have || std::abs(root) < std::abs(best))) {
        best = root;
        have = true;
      }
    }
    prev_d = d;
    prev_r = r;
  }
  if (!have) {
    std::ostringstream os;
    os << "no operating point for Q = " << p.q_max << " var at " << p.v_min << " V with k = " << k;
    throw Error(ErrorCode::infeasible_operating_point, os.str());
  }

  const Loading l = loading_at(p, vim, best);
  const cplx v_vim_ctrl = as_complex(feedforward_voltage(as_dq(l.i_f), l.z.r, l.z.x));
  OperatingPoint op;
  op.v_pcc = as_dq(l.v);
  op.i_inv = as_dq(l.i);
  op.i_l = as_dq(l.il);
  op.v_c = as_dq(l.vb);
  op.inputs.v_voc = (l.v - std::conj(v_vim_ctrl)).real();
  op.inputs.v_grid = as_dq(l.vg);
  op.i_f = as_dq(l.i_f);
  op.r_vim = l.z.r;
  op.x_vim = l.z.x;
  op.omega0 = p.omega0;

  StudyState& x = op.x;
  x.setZero();
  x[ig_d] = l.i.real();
  x[ig_q] = l.i.imag();
  x[il_d] = l.il.real();
  x[il_q] = l.il.imag();
  x[vc_d] = l.v.real();
  x[vc_q] = l.v.imag();
  x[fd] = l.i_f.real();
  x[fq] = l.i_f.imag();

  // Integrators enter affinely: solve the four rows they must zero.
  const int zi_idx[4] = {zv_d, zv_q, zi_d, zi_q};
  const int rows[4] = {il_d, il_q, zi_d, zi_q};
  Eigen::Matrix4d m;
  Eigen::Vector4d r0;
  const StudyState f0 = study_rhs(x, op.inputs, p, k);
  for (int r = 0; r < 4; ++r) r0[r] = f0[rows[r]];
  for (int c = 0; c < 4; ++c) {
    StudyState xc = x;
    xc[zi_idx[c]] += 1.0;
    const StudyState fc = study_rhs(xc, op.inputs, p, k);
    for (int r = 0; r < 4; ++r) m(r, c) = fc[rows[r]] - f0[rows[r]];
  }
  const Eigen::Vector4d z = m.fullPivLu().solve(-r0);
  for (int c = 0; c < 4; ++c) x[zi_idx[c]] = z[c];

  const StudyState res = study_rhs(x, op.inputs, p, k);
  double scale = 1.0;
  for (int i = 0; i < kStudyStates; ++i) scale = std::max(scale, std::abs(x[i]));
  if (!res.allFinite() || res.cwiseAbs().maxCoeff() > 1e-6 * scale * p.omega0 * 1e3) {
    throw Error(ErrorCode::infeasible_operating_point,
                "operating point leaves a residual in the loop equations");
  }
  return op;
}

Eigen::Matrix2d linearize_vim(PerPhaseDq i_f0, const VimParams& vp) {
  // v_d = -R i_d - X i_q, v_q = -R i_q + X i_d with R = R0 + m i_q, X = X0 + n i_q.
  const VirtualImpedance z = compute_vim(i_f0.q, vp);
  const double r_raw = vp.r_v0 + vp.m * i_f0.q;
  const double x_raw = vp.x_v0 + vp.n * i_f0.q;
  const double dr = (vp.clamp_non_negative && r_raw < 0) ? 0.0 : vp.m;
  const double dx = (vp.clamp_non_negative && x_raw < 0) ? 0.0 : vp.n;
  Eigen::Matrix2d j;
  j(0, 0) = -z.r;
  j(0, 1) = -dr * i_f0.d - z.x - dx * i_f0.q;
  j(1, 0) = z.x;
  j(1, 1) = -z.r - dr * i_f0.q + dx * i_f0.d;
  return j;
}

LtiStateSpace assemble_model(const StudyParams& p, const OperatingPoint& op, double k) {
  const VimParams vim = study_vim(p, k);
  // With the VIm voltage frozen the model is affine, so unit differences are exact.
  // The VIm voltage is reinjected through its linearization.
  StudyParams frozen = p;
  frozen.vim = vim;
  frozen.vim.m = frozen.vim.n = 0.0;
  frozen.vim.r_v0 = frozen.vim.x_v0 = 0.0;
  const int n = kStudyStates;
  const StudyState x0 = op.x;
  Eigen::MatrixXd a(n, n);
  const StudyState f0 = study_rhs(x0, op.inputs, frozen, 0.0);
  for (int c = 0; c < n; ++c) {
    StudyState xc = x0;
    xc[c] += 1.0;
    a.col(c) = study_rhs(xc, op.inputs, frozen, 0.0) - f0;
  }

  // v_vim enters the voltage error (integrator rate K_iv) and the current reference
  // (K_pv - F); a shift of the reference acts like a shift of the voltage integrator.
  Eigen::Matrix<double, kStudyStates, 2> dv;
  for (int axis = 0; axis < 2; ++axis) {
    const int zv = axis == 0 ? zv_d : zv_q;
    dv.col(axis) = (p.gains.k_pv - p.gains.f_ff) * a.col(zv);
    dv(zv, axis) += p.gains.k_iv;
  }
  const Eigen::Matrix2d jv = linearize_vim(op.i_f, vim);
  Eigen::Matrix<double, 2, kStudyStates> sel;
  sel.setZero();
  sel(0, fd) = 1.0;
  sel(1, fq) = 1.0;
  a += dv * jv * sel;

  Eigen::MatrixXd b(n, 3);
  for (int c = 0; c < 3; ++c) {
    StudyInputs u = op.inputs;
    if (c == 0) u.v_voc += 1.0;
    if (c == 1) u.v_grid.d += 1.0;
    if (c == 2) u.v_grid.q += 1.0;
    b.col(c) = study_rhs(x0, u, frozen, 0.0) - f0;
  }
  if (!a.allFinite() || !b.allFinite())
    throw Error(ErrorCode::assembly, "non-finite entry in the assembled state matrix");

  LtiStateSpace m;
  m.a = std::move(a);
  m.b = std::move(b);
  m.labels = study_state_labels();
  m.params = p;
  m.k = k;
  return m;
}

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::invalid_argument, "matrix must be square");
  if (!a.allFinite()) throw Error(ErrorCode::invalid_argument, "matrix has non-finite entries");
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigenvalue iteration did not converge within " << 40 * a.rows() << " iterations";
    throw Error(ErrorCode::solver, os.str());
  }
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  // Exact conjugate pairing.
  for (auto& z : ev) {
    if (std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z))) z = {z.real(), 0.0};
  }
  std::sort(ev.begin(), ev.end(), [](const auto& l, const auto& r) {
    if (l.real() != r.real()) return l.real() > r.real();
    return l.imag() > r.imag();
  });
  return ev;
}

double max_real_part(const std::vector<std::complex<double>>& s) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& z : s) m = std::max(m, z.real());
  return m;
}

std::vector<LociRow> sweep_gain(const StudyParams& p, double k_lo, double k_hi, std::size_t steps,
                                bool recompute_op) {
  if (!(k_lo >= 0 && k_hi > k_lo))
    throw Error(ErrorCode::invalid_argument, "sweep needs 0 <= k_lo < k_hi");
  if (steps == 0) throw Error(ErrorCode::invalid_argument, "sweep needs at least one step");
  std::vector<LociRow> rows;
  rows.reserve(steps + 1);
  const OperatingPoint fixed = compute_operating_point(p, k_lo);
  for (std::size_t s = 0; s <= steps; ++s) {
    const double k = k_lo + (k_hi - k_lo) * static_cast<double>(s) / static_cast<double>(steps);
    const OperatingPoint op = recompute_op ? compute_operating_point(p, k) : fixed;
    LociRow row;
    row.k = k;
    row.spectrum = eigenvalues(assemble_model(p, op, k).a);
    row.max_real = max_real_part(row.spectrum);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_loci_csv(std::ostream& os, const std::vector<LociRow>& rows) {
  os << "k,index,real,imag\n";
  char buf[128];
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.spectrum.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g,%zu,%.12g,%.12g\n", r.k, i, r.spectrum[i].real(),
                    r.spectrum[i].imag());
      os << buf;
    }
  }
}

CriticalGain critical_gain(const std::function<double(double)>& f, double k_lo, double k_hi,
                           std::size_t scan_steps, double tol) {
  if (!(k_hi > k_lo) || scan_steps == 0 || !(tol > 0))
    throw Error(ErrorCode::invalid_argument, "critical gain search needs a valid range");
  CriticalGain out;
  double prev_k = k_lo;
  double prev = f(k_lo);
  ++out.evaluations;
  for (std::size_t s = 1; s <= scan_steps; ++s) {
    const double k = k_lo + (k_hi - k_lo) * static_cast<double>(s) / static_cast<double>(scan_steps);
    const double v = f(k);
    ++out.evaluations;
    if (prev < 0 && v >= 0) {
      double lo = prev_k, hi = k;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        ++out.evaluations;
        if (f(mid) < 0) lo = mid;
        else hi = mid;
      }
      out.found = true;
      out.lo = lo;
      out.hi = hi;
      out.k = 0.5 * (lo + hi);
      return out;
    }
    prev_k = k;
    prev = v;
  }
  return out;
}

CriticalGain critical_gain(const StudyParams& p, bool recompute_op, double k_lo, double k_hi) {
  const OperatingPoint fixed = compute_operating_point(p, k_lo);
  auto f = [&](double k) {
    const OperatingPoint op = recompute_op ? compute_operating_point(p, k) : fixed;
    return max_real_part(eigenvalues(assemble_model(p, op, k).a));
  };
  return critical_gain(f, k_lo, k_hi, 50, 1e-3);
}

Ringdown simulate_ringdown(const StudyParams& p, double k, double disturbance, double t_end,
                           double dt, std::size_t keep_every) {
  if (!(t_end > 0 && dt > 0 && keep_every > 0))
    throw Error(ErrorCode::invalid_argument, "ringdown timing must be positive");
  const OperatingPoint op = compute_operating_point(p, k);
  StudyInputs u = op.inputs;
  u.v_grid = (1.0 + disturbance) * u.v_grid;
  Ringdown out;
  out.dt = dt * static_cast<double>(keep_every);
  StudyState x = op.x;
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  out.x.reserve(steps / keep_every + 1);
  out.x.push_back(x - op.x);
  for (std::size_t s = 1; s <= steps; ++s) {
    const StudyState k1 = study_rhs(x, u, p, k);
    const StudyState k2 = study_rhs(x + 0.5 * dt * k1, u, p, k);
    const StudyState k3 = study_rhs(x + 0.5 * dt * k2, u, p, k);
    const StudyState k4 = study_rhs(x + dt * k3, u, p, k);
    x += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!x.allFinite()) throw Error(ErrorCode::numeric_blowup, "ringdown diverged");
    if (s % keep_every == 0) out.x.push_back(x - op.x);
  }
  return out;
}

std::vector<FittedMode> fit_modes(const std::vector<double>& y, double dt, std::size_t order) {
  const std::size_t n = y.size();
  if (order == 0 || n < 4 * order) throw Error(ErrorCode::invalid_argument, "signal too short for the requested order");
  const std::size_t l = n / 2;
  const std::size_t rows = n - l;
  Eigen::MatrixXd h(rows, l + 1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c <= l; ++c) h(r, c) = y[r + c];
  Eigen::BDCSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinV);
  const Eigen::MatrixXd v = svd.matrixV().leftCols(order);  // (l+1) x order
  const Eigen::MatrixXd v1 = v.topRows(l);
  const Eigen::MatrixXd v2 = v.bottomRows(l);
  const Eigen::MatrixXd shift = v1.completeOrthogonalDecomposition().solve(v2);
  Eigen::EigenSolver<Eigen::MatrixXd> es(shift, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::solver, "pencil eigenproblem failed");
  const Eigen::VectorXcd z = es.eigenvalues();

  Eigen::MatrixXcd vand(n, order);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = 0; m < order; ++m) vand(i, m) = std::pow(z[m], static_cast<double>(i));
  const Eigen::VectorXcd yc = Eigen::Map<const Eigen::VectorXd>(y.data(), n).cast<cplx>();
  const Eigen::VectorXcd amp = vand.completeOrthogonalDecomposition().solve(yc);

  std::vector<FittedMode> modes;
  for (std::size_t m = 0; m < order; ++m) modes.push_back({std::log(z[m]) / dt, std::abs(amp[m])});
  std::sort(modes.begin(), modes.end(),
            [](const FittedMode& a, const FittedMode& b) { return a.amplitude > b.amplitude; });
  return modes;
}

}  // namespace vocstiff
