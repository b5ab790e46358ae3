#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "support.hpp"
#include "vocstiff/smallsignal.hpp"

using namespace vocstiff;
using Cx = std::complex<double>;

namespace {

// Characteristic polynomial by Faddeev-LeVerrier, highest power first.
std::vector<double> char_poly(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  std::vector<double> c(n + 1);
  c[0] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[k - 1] * id;
    c[k] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

// Distance from each expected root to its nearest match in got.
double spectrum_gap(std::vector<Cx> want, const std::vector<Cx>& got) {
  double worst = 0;
  for (const Cx& w : want) {
    double best = 1e300;
    for (const Cx& g : got) best = std::min(best, std::abs(g - w));
    worst = std::max(worst, best);
  }
  return worst;
}

// Central-difference Jacobian of the nonlinear model.
Eigen::MatrixXd fd_jacobian(const StudyParams& p, const OperatingPoint& op, double k) {
  Eigen::MatrixXd j(kStudyStates, kStudyStates);
  for (int c = 0; c < kStudyStates; ++c) {
    const double h = 1e-5 * std::max(1.0, std::abs(op.x[c]));
    StudyState a = op.x, b = op.x;
    a[c] += h;
    b[c] -= h;
    j.col(c) = (study_rhs(a, op.inputs, p, k) - study_rhs(b, op.inputs, p, k)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("model layout") {
  CHECK(study_state_labels().size() == static_cast<std::size_t>(kStudyStates));
  const StudyParams p = default_study();
  const LtiStateSpace m = assemble_model(p, compute_operating_point(p, 0.1), 0.1);
  CHECK(m.a.rows() == kStudyStates);
  CHECK(m.a.cols() == kStudyStates);
  CHECK(m.b.cols() == 3);
}

TEST_CASE("reference corner of the study") {
  const StudyParams p = default_study();
  CHECK(p.v_min == doctest::Approx(60.0));
  CHECK(p.p0 == doctest::Approx(300.0));
  // Plain reactive droop at 0.75 of nominal with 300 var at 0.95.
  const double cq = 300.0 / (0.95 * 0.95 * 80 * 80 * (2 * 80 * 80 - 2 * 0.95 * 0.95 * 80 * 80));
  CHECK(p.q_max == doctest::Approx(cq * 60 * 60 * (2 * 80 * 80 - 2 * 60 * 60)));
}

TEST_CASE("operating point") {
  StudyParams p = default_study();
  SUBCASE("idle inverter") {
    p.q_max = 0.0;
    p.p0 = 0.0;
    const OperatingPoint op = compute_operating_point(p, 0.1);
    CHECK(op.i_f.d == 0.0);
    CHECK(op.i_f.q == 0.0);
    CHECK(op.r_vim == 0.0);
    CHECK(op.x_vim == 0.0);
    CHECK(std::abs(op.i_inv.norm()) < 1e-12);
    // Only the capacitor draws current, so the grid sits just below the PCC.
    CHECK(op.v_pcc.norm() == doctest::Approx(kSqrt2 * p.v_min));
    CHECK(op.inputs.v_grid.norm() == doctest::Approx(kSqrt2 * p.v_min).epsilon(1e-12));
  }
  SUBCASE("exports the requested power and sits at equilibrium") {
    for (double k : {0.0, 0.05, 0.1, 0.2}) {
      const OperatingPoint op = compute_operating_point(p, k);
      const Cx v(op.v_pcc.d, op.v_pcc.q), i(op.i_inv.d, op.i_inv.q);
      const Cx s = 0.5 * v * std::conj(i);
      CHECK(s.real() == doctest::Approx(p.p0).epsilon(1e-9));
      CHECK(s.imag() == doctest::Approx(p.q_max).epsilon(1e-9));
      CHECK(std::abs(i) == doctest::Approx(2 * std::abs(Cx(p.p0, p.q_max)) / std::abs(v)));
      CHECK(v.real() > 0);
      const StudyState f = study_rhs(op.x, op.inputs, p, k);
      CHECK(f.cwiseAbs().maxCoeff() < 1e-6);
      // Exporting vars is a positive q current in the controller frame.
      CHECK(op.i_f.q > 0);
      CHECK(op.r_vim == doctest::Approx(k * op.i_f.q));
    }
  }
  SUBCASE("impedance scales with the gain at fixed current") {
    const double iq = compute_operating_point(p, 0.05).i_f.q;
    const double r1 = compute_vim(iq, VimParams::with_gain(0.05)).r;
    const double r2 = compute_vim(iq, VimParams::with_gain(0.10)).r;
    CHECK(r2 == doctest::Approx(2 * r1));
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(compute_operating_point(p, -0.1), Error);
    p.v_min = 0.0;
    CHECK_THROWS_AS(compute_operating_point(p, 0.1), Error);
  }
}

TEST_CASE("impedance linearization matches central differences") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.5, 15), ud(-15, 15), uk(0.01, 0.3);
  for (int n = 0; n < 30; ++n) {
    const VimParams vp = VimParams::with_gain(uk(rng));
    const PerPhaseDq i0{ud(rng), u(rng)};
    const Eigen::Matrix2d j = linearize_vim(i0, vp);
    auto g = [&](PerPhaseDq i) {
      const VirtualImpedance z = compute_vim(i.q, vp);
      return feedforward_voltage(i, z.r, z.x);
    };
    const double h = 1e-5;
    for (int c = 0; c < 2; ++c) {
      PerPhaseDq a = i0, b = i0;
      (c == 0 ? a.d : a.q) += h;
      (c == 0 ? b.d : b.q) -= h;
      const PerPhaseDq ga = g(a), gb = g(b);
      const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
      CHECK(std::abs((ga.d - gb.d) / (2 * h) - j(0, c)) < 1e-8 * scale);
      CHECK(std::abs((ga.q - gb.q) / (2 * h) - j(1, c)) < 1e-8 * scale);
    }
  }
  CHECK(linearize_vim({0, 0}, VimParams::with_gain(0.0)).isZero());
}

TEST_CASE("assembled matrix is the Jacobian of the nonlinear model") {
  const StudyParams p = default_study();
  for (double k : {0.0, 0.1, 0.25}) {
    const OperatingPoint op = compute_operating_point(p, k);
    const Eigen::MatrixXd a = assemble_model(p, op, k).a;
    const Eigen::MatrixXd j = fd_jacobian(p, op, k);
    for (int r = 0; r < kStudyStates; ++r)
      for (int c = 0; c < kStudyStates; ++c)
        CHECK(std::abs(a(r, c) - j(r, c)) < 1e-6 * std::max(1.0, std::abs(j(r, c))));
  }
}

TEST_CASE("without the impedance the filter does not feed back") {
  const StudyParams p = default_study();
  const Eigen::MatrixXd a = assemble_model(p, compute_operating_point(p, 0.0), 0.0).a;
  const int filt[4] = {fd, fd_dot, fq, fq_dot};
  for (int r = 0; r < kStudyStates; ++r) {
    if (std::find(std::begin(filt), std::end(filt), r) != std::end(filt)) continue;
    for (int c : filt) CHECK(a(r, c) == 0.0);
  }
  CHECK(max_real_part(eigenvalues(a)) < 0);
  CHECK(max_real_part(eigenvalues(assemble_model(p, compute_operating_point(p, 0.1), 0.1).a)) < 0);
}

TEST_CASE("eigenvalue solver") {
  SUBCASE("diagonal") {
    Eigen::MatrixXd a = Eigen::Vector3d(-1, 4, 2).asDiagonal();
    const auto ev = eigenvalues(a);
    REQUIRE(ev.size() == 3);
    CHECK(ev[0] == Cx(4, 0));
    CHECK(ev[1] == Cx(2, 0));
    CHECK(ev[2] == Cx(-1, 0));
  }
  SUBCASE("damped second order") {
    const double wn = 50, z = 0.2;
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, -wn * wn, -2 * z * wn;
    const auto ev = eigenvalues(a);
    CHECK(ev[0].real() == doctest::Approx(-z * wn));
    CHECK(std::abs(ev[0].imag()) == doctest::Approx(wn * std::sqrt(1 - z * z)));
    CHECK(ev[0] == std::conj(ev[1]));
  }
  SUBCASE("random matrices against the characteristic polynomial") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int n = 0; n < 10; ++n) {
      Eigen::MatrixXd a(5, 5);
      for (int i = 0; i < 25; ++i) a.data()[i] = u(rng);
      const auto got = eigenvalues(a);
      const auto want = support::poly_roots(char_poly(a));
      CHECK(spectrum_gap(want, got) < 1e-6);
      CHECK(spectrum_gap(got, want) < 1e-6);
    }
  }
  SUBCASE("rejects bad shapes") {
    CHECK_THROWS_AS(eigenvalues(Eigen::MatrixXd(2, 3)), Error);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    a(0, 1) = std::nan("");
    CHECK_THROWS_AS(eigenvalues(a), Error);
  }
}

TEST_CASE("spectrum of the study is closed under conjugation and invariant to relabelling") {
  const StudyParams p = default_study();
  const Eigen::MatrixXd a = assemble_model(p, compute_operating_point(p, 0.15), 0.15).a;
  const auto ev = eigenvalues(a);
  std::vector<Cx> conj;
  for (const Cx& z : ev) conj.push_back(std::conj(z));
  const double scale = std::abs(ev.back());
  CHECK(spectrum_gap(conj, ev) < 1e-9 * scale);

  std::vector<int> perm(kStudyStates);
  for (int i = 0; i < kStudyStates; ++i) perm[i] = i;
  std::mt19937 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> pm(Eigen::Map<Eigen::VectorXi>(perm.data(), kStudyStates));
  const Eigen::MatrixXd b = pm * a * pm.transpose();
  const auto eb = eigenvalues(b);
  CHECK(spectrum_gap(ev, eb) < 1e-7 * scale);
  CHECK(max_real_part(eb) == doctest::Approx(max_real_part(ev)).epsilon(1e-6));
}

TEST_CASE("gain sweep") {
  const StudyParams p = default_study();
  const auto rows = sweep_gain(p, 0.0, 0.3, 30);
  REQUIRE(rows.size() == 31);
  CHECK(rows.front().k == 0.0);
  CHECK(rows.back().k == doctest::Approx(0.3));
  const auto base = eigenvalues(assemble_model(p, compute_operating_point(p, 0.0), 0.0).a);
  CHECK(spectrum_gap(base, rows.front().spectrum) == 0.0);
  // Continuity: the rightmost pole moves smoothly, so halving the step roughly halves
  // its move.
  for (double k : {0.03, 0.11, 0.19}) {
    auto f = [&](double kk) {
      return max_real_part(eigenvalues(assemble_model(p, compute_operating_point(p, kk), kk).a));
    };
    const double h = 1e-3;
    const double d1 = std::abs(f(k + h) - f(k)), d2 = std::abs(f(k + h / 2) - f(k));
    CHECK(d1 < 10 * 2 * d2 + 1e-6);
    CHECK(d1 < 5.0);
  }
  std::ostringstream os;
  write_loci_csv(os, rows);
  CHECK(os.str().rfind("k,index,real,imag\n", 0) == 0);
  CHECK_THROWS_AS(sweep_gain(p, 0.2, 0.1, 10), Error);
}

TEST_CASE("critical gain") {
  SUBCASE("toy family") {
    auto f = [](double k) {
      Eigen::MatrixXd a(2, 2);
      a << -1 + k, 1, 0, -1;
      return max_real_part(eigenvalues(a));
    };
    const CriticalGain c = critical_gain(f, 0.0, 3.0);
    CHECK(c.found);
    CHECK(c.k == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(c.hi - c.lo <= 1e-3);
    CHECK(!critical_gain([](double) { return -1.0; }, 0, 1).found);
  }
  SUBCASE("reference study") {
    const StudyParams p = default_study();
    const CriticalGain c = critical_gain(p);
    REQUIRE(c.found);
    CHECK(c.k >= 0.15);
    CHECK(c.k <= 0.30);
    CHECK(c.k == doctest::Approx(0.22).epsilon(0.05));
    const double below =
        max_real_part(eigenvalues(assemble_model(p, compute_operating_point(p, c.lo), c.lo).a));
    const double above =
        max_real_part(eigenvalues(assemble_model(p, compute_operating_point(p, c.hi), c.hi).a));
    CHECK(below < 0);
    CHECK(above >= 0);
  }
}

TEST_CASE("matrix pencil recovers synthetic modes") {
  const double dt = 1e-4;
  const Cx s1(-20, 2 * kPi * 30), s2(-150, 2 * kPi * 90);
  std::vector<double> y;
  for (int n = 0; n < 600; ++n) {
    const double t = n * dt;
    y.push_back(3.0 * std::exp(s1.real() * t) * std::cos(s1.imag() * t + 0.3) +
                1.0 * std::exp(s2.real() * t) * std::cos(s2.imag() * t - 1.0));
  }
  const auto modes = fit_modes(y, dt, 4);
  REQUIRE(modes.size() == 4);
  auto near = [&](Cx want) {
    double best = 1e300;
    for (const auto& m : modes) best = std::min(best, std::abs(m.pole - want));
    return best;
  };
  CHECK(near(s1) < 1e-4 * std::abs(s1));
  CHECK(near(std::conj(s1)) < 1e-4 * std::abs(s1));
  CHECK(near(s2) < 1e-4 * std::abs(s2));
  CHECK(modes[0].amplitude == doctest::Approx(1.5).epsilon(1e-6));
  CHECK_THROWS_AS(fit_modes({1, 2, 3}, dt, 2), Error);
}

TEST_CASE("nonlinear ringdown rings at the frequency of a predicted pair") {
  const StudyParams p = default_study();
  const double k = 0.1;
  const auto ev = eigenvalues(assemble_model(p, compute_operating_point(p, k), k).a);
  const Ringdown r = simulate_ringdown(p, k, 0.01, 0.06);
  std::vector<double> y;
  for (const auto& x : r.x) y.push_back(x[ig_d]);
  // Skip the first few samples where the fast poles still matter.
  y.erase(y.begin(), y.begin() + 20);
  const auto modes = fit_modes(y, r.dt, 8);
  // The slowest oscillatory fitted mode with real energy must sit on a predicted pole.
  bool matched = false;
  for (const auto& m : modes) {
    if (std::abs(m.pole.imag()) < 10 || m.amplitude < 1e-3 * modes[0].amplitude) continue;
    for (const Cx& z : ev) {
      if (std::abs(z.imag()) < 10) continue;
      if (std::abs(m.pole - z) < 0.15 * std::abs(z)) matched = true;
    }
  }
  CHECK(matched);
}
