#pragma once

// Brute-force references used by the tests. Nothing here calls the library's
// fast paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// 2 pi I_n(a) from Boost.
inline double bessel_A(int n, double a) { return 2.0 * pi * boost::math::cyl_bessel_i(n, a); }

// log of int prod_l gamma(y_l - theta_l e^{-i 2 pi l phi}) g(phi) dphi by a
// midpoint rule with `nodes` points; g is any callable density on [0, 1).
inline double loglik_riemann(const std::vector<cplx>& y, const std::vector<cplx>& theta, int K,
                             const std::function<double(double)>& g, int nodes) {
  std::vector<double> e(static_cast<std::size_t>(nodes));
  double mx = -INFINITY;
  for (int q = 0; q < nodes; ++q) {
    double phi = (q + 0.5) / nodes;
    double s = 0.0;
    for (int l = -K; l <= K; ++l) {
      cplx mu = theta[l + K] * std::polar(1.0, -2.0 * pi * l * phi);
      s += -std::norm(y[l + K] - mu) - std::log(pi);
    }
    e[q] = s;
    mx = std::max(mx, s);
  }
  double acc = 0.0;
  for (int q = 0; q < nodes; ++q) acc += std::exp(e[q] - mx) * g((q + 0.5) / nodes);
  return mx + std::log(acc / nodes);
}

// TV between N_C(0, 1) and N_C(d, 1) by a 2-D grid sum.
// Composite Simpson in x on each side of the kink line x = d/2, midpoint in y.
inline double complex_gaussian_tv_grid(double d, int n = 1200, double R = 9.0) {
  double h = 2.0 * R / n, s = 0.0;
  for (double side : {-1.0, 1.0}) {
    double hx = side * R / n;
    for (int i = 0; i <= n; ++i) {
      double x = d / 2.0 + i * hx;
      double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double row = 0.0;
      for (int j = 0; j < n; ++j) {
        double y = -R + (j + 0.5) * h;
        row += std::abs(std::exp(-(x * x + y * y)) - std::exp(-((x - d) * (x - d) + y * y))) / pi;
      }
      s += w * row * h * std::abs(hx) / 3.0;
    }
  }
  return 0.5 * s;
}

inline double complex_gaussian_hellinger_grid(double d, int n = 1200, double R = 9.0) {
  double h = 2.0 * R / n, s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x = -R + (i + 0.5) * h, y = -R + (j + 0.5) * h;
      double p = std::exp(-(x * x + y * y)) / pi;
      double q = std::exp(-((x - d) * (x - d) + y * y)) / pi;
      double r = std::sqrt(p) - std::sqrt(q);
      s += r * r;
    }
  return std::sqrt(s * h * h);
}

// W1 on [0,1) between two densities given as callables, via
// int_0^1 |F^{-1}(u) - G^{-1}(u)| du with `nodes` points; the CDFs are
// tabulated on a fine grid and inverted by search.
inline double w1_quantile(const std::function<double(double)>& g, const std::function<double(double)>& h, int nodes) {
  int T = nodes;
  std::vector<double> F(T + 1, 0.0), G(T + 1, 0.0);
  for (int i = 0; i < T; ++i) {
    double t = (i + 0.5) / T;
    F[i + 1] = F[i] + g(t) / T;
    G[i + 1] = G[i] + h(t) / T;
  }
  auto inv = [&](const std::vector<double>& C, double u) {
    u *= C.back();
    auto it = std::lower_bound(C.begin(), C.end(), u);
    std::size_t i = std::max<std::size_t>(1, it - C.begin());
    double f = (u - C[i - 1]) / std::max(1e-300, C[i] - C[i - 1]);
    return (i - 1 + f) / T;
  };
  double s = 0.0;
  for (int k = 0; k < nodes; ++k) {
    double u = (k + 0.5) / nodes;
    s += std::abs(inv(F, u) - inv(G, u));
  }
  return s / nodes;
}

// int_0^inf rho e^{-(rho + t)^2} A_n(2 rho t)^2 drho by a midpoint rule on
// [0, upper] with Boost's Bessel function.
inline double In_riemann(int n, double t, double upper, int nodes) {
  double h = upper / nodes, s = 0.0;
  for (int i = 0; i < nodes; ++i) {
    double r = (i + 0.5) * h;
    double a = 2.0 * r * t;
    double sc = 2.0 * pi * boost::math::cyl_bessel_i(n, a) * std::exp(-a);
    s += r * std::exp(-(r - t) * (r - t)) * sc * sc;
  }
  return s * h;
}

// ||f - g||^2 for two trigonometric polynomials by a fine grid average.
inline double l2_sq_grid(const std::function<cplx(double)>& f, const std::function<cplx(double)>& g, int nodes) {
  double s = 0.0;
  for (int m = 0; m < nodes; ++m) {
    double x = static_cast<double>(m) / nodes;
    s += std::norm(f(x) - g(x));
  }
  return s / nodes;
}

// Cumulative trapezoid J on a uniform grid of [0,1] with M+1 points.
inline std::vector<double> centered_integral(const std::vector<double>& f) {
  std::size_t M = f.size() - 1;
  double h = 1.0 / M;
  std::vector<double> F(f.size(), 0.0);
  for (std::size_t i = 1; i <= M; ++i) F[i] = F[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i <= M; ++i) out[i] = F[i] - (static_cast<double>(i) / M) * F[M];
  return out;
}

}  // namespace oracle
