#pragma once

#include <cmath>
#include <complex>
#include <vector>

// Shared oracles for the unit tests. Nothing here calls into the library.
namespace support {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// rms phasor of samples v[n] taken at angles theta[n] covering whole cycles.
inline std::complex<double> fit_phasor(const std::vector<double>& v,
                                       const std::vector<double>& theta) {
  std::complex<double> acc{};
  for (std::size_t n = 0; n < v.size(); ++n)
    acc += v[n] * std::exp(std::complex<double>(0.0, -theta[n]));
  return std::sqrt(2.0) * acc / static_cast<double>(v.size());
}

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F f, double lo, double hi, double tol = 1e-12) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Roots of a real polynomial (coefficients highest power first) by Durand-Kerner.
inline std::vector<std::complex<double>> poly_roots(std::vector<double> c) {
  const std::size_t n = c.size() - 1;
  for (auto& x : c) x /= c[0];
  std::vector<std::complex<double>> z(n);
  const std::complex<double> seed(0.4, 0.9);
  for (std::size_t i = 0; i < n; ++i) z[i] = std::pow(seed, static_cast<double>(i));
  auto eval = [&](std::complex<double> x) {
    std::complex<double> y = c[0];
    for (std::size_t i = 1; i <= n; ++i) y = y * x + c[i];
    return y;
  };
  for (int it = 0; it < 2000; ++it) {
    double moved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::complex<double> den = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      const auto step = eval(z[i]) / den;
      z[i] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved < 1e-15) break;
  }
  return z;
}

}  // namespace support
