#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "density.hpp"
#include "distance.hpp"
#include "numerics.hpp"

namespace shapeinv {

// ============================================================================
// A_n(a) = int_0^{2 pi} exp(a cos u) cos(n u) du = 2 pi I_n(a)
// ============================================================================

inline constexpr double kBesselMaxArgument = 700.0;

// exp(-a) A_n(a) from the ascending series
// 2 pi sum_k (a/2)^{2k+n} / (k! (k+n)!), stopped when a term drops below
// 1e-15 of the running sum.
inline double bessel_A_scaled(int n, double a) {
  if (n < 0) n = -n;
  if (a < 0.0) throw std::invalid_argument("bessel_A: a must be >= 0");
  if (a > kBesselMaxArgument) throw std::overflow_error("bessel_A: a > 700 overflows the series");
  if (a == 0.0) return n == 0 ? kTwoPi : 0.0;
  double h = 0.5 * a;
  double term = std::exp(n * std::log(h) - std::lgamma(n + 1.0) - a);
  double sum = term;
  for (int k = 0; k < 100000; ++k) {
    term *= h * h / ((k + 1.0) * (k + n + 1.0));
    sum += term;
    if (term < 1e-15 * sum && (k + 1.0) * (k + n + 1.0) > h * h) break;
  }
  return kTwoPi * sum;
}

inline double bessel_A(int n, double a) {
  double s = bessel_A_scaled(n, a);
  return a == 0.0 ? s : s * std::exp(a);
}

inline double log_bessel_A(int n, double a) { return std::log(bessel_A_scaled(n, a)) + a; }

// Coefficient of a^j in the series of A_n.
inline double bessel_A_series_coefficient(int n, int j) {
  n = std::abs(n);
  if (j < n || (j - n) % 2 != 0) return 0.0;
  int k = (j - n) / 2;
  return kTwoPi * std::exp(-j * std::log(2.0) - std::lgamma(k + 1.0) - std::lgamma(k + n + 1.0));
}

// Periodic trapezoid rule for the defining integral on the contour
// u + i y, y = asinh(n / a), which passes through the saddle point and avoids
// the cancellation of the real-axis rule when A_n(a) is small.
inline double bessel_A_quadrature(int n, double a, int nodes = 4096) {
  n = std::abs(n);
  if (a < 0.0) throw std::invalid_argument("bessel_A_quadrature: a must be >= 0");
  double y = (a > 0.0) ? std::asinh(n / a) : 0.0;
  double h = kTwoPi / nodes;
  double s = 0.0;
  for (int j = 0; j < nodes; ++j) {
    double u = j * h;
    // a cos(u + i y) + i n (u + i y)
    double re = a * std::cos(u) * std::cosh(y) - n * y;
    double im = -a * std::sin(u) * std::sinh(y) + n * u;
    s += std::exp(re) * std::cos(im);
  }
  return s * h;
}

struct BesselEquivalents {
  int n = 0;
  double a = 0.0;
  double ratio_small = 0.0;  // A_n(a) n! / (2 pi (a/2)^n)
  double ratio_large = 0.0;  // A_n(a) sqrt(2 pi a) / (2 pi e^a)
  bool small_regime = false;  // a <= sqrt(n)
  bool large_regime = false;  // a >= 4 n^2
};

inline BesselEquivalents bessel_equivalents_check(int n, double a) {
  if (n < 1) throw std::invalid_argument("bessel_equivalents_check: n must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("bessel_equivalents_check: a must be > 0");
  BesselEquivalents r;
  r.n = n;
  r.a = a;
  double ls = std::log(bessel_A_scaled(n, a));  // log A_n - a
  r.ratio_small = std::exp(ls + a + std::lgamma(n + 1.0) - std::log(kTwoPi) - n * std::log(a / 2.0));
  r.ratio_large = std::exp(ls + 0.5 * std::log(kTwoPi * a) - std::log(kTwoPi));
  r.small_regime = a <= std::sqrt(static_cast<double>(n));
  r.large_regime = a >= 4.0 * n * n;
  return r;
}

// ============================================================================
// I_n(theta1) = int_0^inf rho exp(-(rho + theta1)^2) A_n(2 rho theta1)^2 drho
// ============================================================================

// log of the integrand; exp(-(rho+t)^2) A_n(2 rho t)^2 = exp(-(rho-t)^2) (e^{-a} A_n(a))^2.
inline double log_In_integrand(int n, double theta1, double rho) {
  if (rho <= 0.0) return -std::numeric_limits<double>::infinity();
  double a = 2.0 * rho * theta1;
  double s = bessel_A_scaled(n, a);
  if (s <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(rho) - (rho - theta1) * (rho - theta1) + 2.0 * std::log(s);
}

// Upper integration limit: the integrand peaks near max(theta1, sqrt(n)/...)
// and decays like exp(-(rho - theta1)^2), so the 40/theta1 cap is widened to
// cover the peak for large theta1.
inline double In_upper_limit(int n, double theta1) {
  return std::max(40.0 / theta1, theta1 + 12.0 + 2.0 * std::sqrt(static_cast<double>(n)));
}

inline double lower_bound_integral_In(int n, double theta1) {
  n = std::abs(n);
  if (!(theta1 > 0.0)) throw std::invalid_argument("lower_bound_integral_In: theta1 must be > 0");
  double upper = In_upper_limit(n, theta1);
  if (2.0 * upper * theta1 > kBesselMaxArgument)
    throw std::overflow_error("lower_bound_integral_In: theta1 too large for the Bessel series");
  auto f = [&](double rho) { return std::exp(log_In_integrand(n, theta1, rho)); };
  // Split at the bulk so the adaptive rule sees the peak.
  double peak = std::max(theta1, std::sqrt(n + 0.5));
  double split = std::min(upper * 0.5, peak + 4.0);
  double err1 = 0.0, err2 = 0.0;
  double v1 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, split, 15, 1e-13, &err1);
  double v2 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, split, upper, 15, 1e-13, &err2);
  return v1 + v2;
}

// (1 / 8 pi^2) sum_{|n| <= N} |c_n(g - g~)|^2 I_|n|(theta1): lower bound for
// the TV between the first-coefficient laws with shapes theta1 and shift laws g, g~.
inline double identifiability_quadratic_form(double theta1, const ShiftDensity& g, const ShiftDensity& gt, int N = 30) {
  if (!(theta1 > 0.0)) throw std::invalid_argument("identifiability_quadratic_form: theta1 must be > 0");
  if (g.M() != gt.M()) throw std::invalid_argument("identifiability_quadratic_form: densities on different grids");
  N = std::min(N, g.M() / 2);
  double s = 0.0;
  for (int n = -N; n <= N; ++n) {
    double c2 = std::norm(g.coeff(n) - gt.coeff(n));
    if (c2 == 0.0) continue;
    s += c2 * lower_bound_integral_In(std::abs(n), theta1);
  }
  return s / (8.0 * kPi * kPi);
}

inline MixtureLaw first_coefficient_law(cplx theta, const ShiftDensity& g, int k = 1) {
  FourierSeries f(std::abs(k));
  f.set(k, theta);
  return MixtureLaw{f, g};
}

// ============================================================================
// Disk lower bounds
// ============================================================================

struct Theta1DiskBound {
  double measured_tv = 0.0;
  double cubic_floor = 0.0;
  bool holds() const { return measured_tv >= cubic_floor; }
};

// (eta^2 / 32) |exp(-(3 t_min + t_max)^2 / 16) - exp(-(3 t_max + t_min)^2 / 16)|,
// eta = |theta1 - theta1_0|: mass difference of the two first-coefficient
// laws over the disk of radius eta / 2 around the midpoint direction.
inline double theta1_disk_floor(double theta1, double theta10) {
  double tmin = std::min(theta1, theta10), tmax = std::max(theta1, theta10);
  double eta = tmax - tmin;
  double a = (3.0 * tmin + tmax), b = (3.0 * tmax + tmin);
  return eta * eta / 32.0 * std::abs(std::exp(-a * a / 16.0) - std::exp(-b * b / 16.0));
}

inline Theta1DiskBound theta1_disk_lower_bound(double theta1, double theta10, const ShiftDensity& g,
                                               const ShiftDensity& g0, const PolarQuadrature& q = {}) {
  if (!(theta1 > 0.0 && theta10 > 0.0)) throw std::invalid_argument("theta1_disk_lower_bound: thetas must be > 0");
  double eta = std::abs(theta1 - theta10);
  if (!(eta > 0.0 && eta < theta10 / 2.0))
    throw std::invalid_argument("theta1_disk_lower_bound: need 0 < |theta1 - theta1_0| < theta1_0 / 2");
  Theta1DiskBound r;
  r.cubic_floor = theta1_disk_floor(theta1, theta10);
  r.measured_tv = tv_marginal(1, first_coefficient_law(theta1, g), first_coefficient_law(theta10, g0), q).value;
  return r;
}

// Constant of the linear phase floor c eta^3 e^{-|theta0|^2} |c_{-k}(g0)| |theta - theta0|.
// Calibrated on k = 1, |theta0| = 1, phase gap pi/2, g0 = 1 + 0.5 cos(2 pi t),
// eta = 0.25 by reference_phase_constant(), then halved.
inline constexpr double kPhaseFloorEta = 0.25;
inline constexpr double kPhaseFloorConstant = 39.3318;

struct PhaseBound {
  double measured_tv = 0.0;
  double linear_floor = 0.0;
  bool identifiable = true;  // false when c_{-k}(g0) vanishes
  bool holds() const { return measured_tv >= linear_floor; }
};

inline double phase_floor(int k, cplx theta, cplx theta0, const ShiftDensity& g0, double c = kPhaseFloorConstant,
                          double eta = kPhaseFloorEta) {
  return c * eta * eta * eta * std::exp(-std::norm(theta0)) * std::abs(g0.coeff(-k)) * std::abs(theta - theta0);
}

inline PhaseBound thetak_phase_lower_bound(int k, cplx theta, cplx theta0, const ShiftDensity& g0,
                                           double c = kPhaseFloorConstant, const PolarQuadrature& q = {}) {
  if (k == 0) throw std::invalid_argument("thetak_phase_lower_bound: k must be nonzero");
  if (std::abs(std::abs(theta) - std::abs(theta0)) > 1e-12 * std::max(1.0, std::abs(theta0)))
    throw std::invalid_argument("thetak_phase_lower_bound: |theta_k| must equal |theta_k^0|");
  PhaseBound r;
  r.identifiable = std::abs(g0.coeff(-k)) > 1e-12;
  r.linear_floor = r.identifiable ? phase_floor(k, theta, theta0, g0, c) : 0.0;
  r.measured_tv = tv_marginal(k, first_coefficient_law(theta, g0, k), first_coefficient_law(theta0, g0, k), q).value;
  return r;
}

// Measured TV divided by the floor shape at the reference case (the constant
// that makes the floor tight there).
inline double reference_phase_constant(int M = 256, const PolarQuadrature& q = {}) {
  auto g0 = ShiftDensity::from_function(M, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  cplx theta0{1.0, 0.0}, theta = std::polar(1.0, kPi / 2.0);
  double tv = tv_marginal(1, first_coefficient_law(theta, g0), first_coefficient_law(theta0, g0), q).value;
  double shape = phase_floor(1, theta, theta0, g0, 1.0);
  return tv / shape;
}

}  // namespace shapeinv
