#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fft.hpp"
#include "numerics.hpp"

namespace shapeinv {

// Probability density on the circle [0,1), stored by its values on the
// uniform grid tau_m = m / M. Two readings of the grid are used:
//  - atoms: mass g_m / M at tau_m (likelihood quadrature, distances);
//  - bins: constant g_m on [tau_m - 1/(2M), tau_m + 1/(2M)) wrapped at 0
//    (jittered shift sampling).
class ShiftDensity {
 public:
  static constexpr double kNormTol = 1e-10;

  explicit ShiftDensity(std::vector<double> values) : g_(std::move(values)) {
    if (g_.size() < 4) throw std::invalid_argument("ShiftDensity: need at least 4 grid points");
    double sum = 0.0;
    for (double v : g_) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("ShiftDensity: values must be finite and >= 0");
      sum += v;
    }
    double integral = sum / static_cast<double>(g_.size());
    if (std::abs(integral - 1.0) > kNormTol)
      throw std::invalid_argument("ShiftDensity: grid integral is not 1 (use ShiftDensity::normalized)");
    build_cache();
  }

  // Rescales nonnegative values to unit integral.
  static ShiftDensity normalized(std::vector<double> values) {
    double sum = 0.0;
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("ShiftDensity: values must be finite and >= 0");
      sum += v;
    }
    if (!(sum > 0.0)) throw std::invalid_argument("ShiftDensity: all-zero density");
    double scale = static_cast<double>(values.size()) / sum;
    for (double& v : values) v *= scale;
    return ShiftDensity(std::move(values));
  }

  static ShiftDensity uniform(int M) { return ShiftDensity(std::vector<double>(M, 1.0)); }

  // All mass on the grid node nearest to tau.
  static ShiftDensity delta(int M, double tau) {
    std::vector<double> v(M, 0.0);
    long long m = std::llround(tau * M);
    v[static_cast<std::size_t>(((m % M) + M) % M)] = static_cast<double>(M);
    return ShiftDensity(std::move(v));
  }

  static ShiftDensity from_function(int M, const std::function<double(double)>& fn) {
    std::vector<double> v(M);
    for (int m = 0; m < M; ++m) v[m] = fn(static_cast<double>(m) / M);
    return normalized(std::move(v));
  }

  // g(t) = 1 + 2 Re sum_{k>=1} c_k exp(i 2 pi k t); c[k-1] holds c_k.
  static ShiftDensity from_coefficients(int M, const std::vector<cplx>& c) {
    std::vector<double> v(M, 1.0);
    for (int m = 0; m < M; ++m) {
      for (std::size_t k = 1; k <= c.size(); ++k) {
        long long km = static_cast<long long>(k) * m % M;
        v[m] += 2.0 * std::real(c[k - 1] * std::polar(1.0, kTwoPi * static_cast<double>(km) / M));
      }
      if (v[m] < 0.0) {
        if (v[m] < -1e-12) throw std::invalid_argument("ShiftDensity::from_coefficients: negative density value");
        v[m] = 0.0;
      }
    }
    return normalized(std::move(v));
  }

  int M() const { return static_cast<int>(g_.size()); }
  const std::vector<double>& values() const { return g_; }
  double operator[](int m) const { return g_[static_cast<std::size_t>(m)]; }
  double integral() const {
    double s = 0.0;
    for (double v : g_) s += v;
    return s / static_cast<double>(g_.size());
  }

  // c_k(g) = (1/M) sum_m g_m exp(-i 2 pi k m / M), |k| <= M/2.
  cplx coeff(int k) const {
    int a = std::abs(k);
    if (a > M() / 2) throw std::out_of_range("ShiftDensity::coeff: |k| > M/2");
    return k >= 0 ? c_[a] : std::conj(c_[a]);
  }
  int K_g() const { return M() / 2 - 1; }

  // sqrt(sum_{0<|k|<=K_g} |k|^{2 nu} |c_k|^2).
  double sobolev_seminorm(double nu) const {
    double s = 0.0;
    for (int k = 1; k <= K_g(); ++k) s += 2.0 * std::pow(static_cast<double>(k), 2.0 * nu) * std::norm(c_[k]);
    return std::sqrt(s);
  }

  // Trigonometric interpolant through the grid values (Nyquist term as a cosine).
  double eval(double t) const {
    int M = this->M();
    double s = c_[0].real();
    int top = (M % 2 == 0) ? M / 2 - 1 : M / 2;
    for (int k = 1; k <= top; ++k) s += 2.0 * std::real(c_[k] * std::polar(1.0, kTwoPi * std::fmod(k * t, 1.0)));
    if (M % 2 == 0) s += c_[M / 2].real() * std::cos(kPi * std::fmod(M * t, 2.0));
    return s;
  }

  // Weights w_q of the rule sum_q w_q h(q / Q) ~ int h g on Q nodes. For Q = M
  // these are the atom masses; otherwise the interpolant is sampled, so
  // weights can be slightly negative for rough densities.
  std::vector<double> quadrature_weights(int Q) const {
    int M = this->M();
    std::vector<double> w;
    if (Q == M) {
      w = g_;
    } else if (Q > M) {
      std::vector<cplx> X(Q / 2 + 1, cplx{});
      int top = (M % 2 == 0) ? M / 2 - 1 : M / 2;
      for (int k = 0; k <= top; ++k) X[k] = c_[k];
      if (M % 2 == 0) X[M / 2] += 0.5 * c_[M / 2];
      w = fft::irfft(X, Q);
    } else {
      w.resize(Q);
      for (int q = 0; q < Q; ++q) w[q] = eval(static_cast<double>(q) / Q);
    }
    for (double& x : w) x /= static_cast<double>(Q);
    return w;
  }

  // Circular translation: result(t) = g(t - phi). Grid-aligned shifts are an
  // exact rotation; other shifts go through the interpolant.
  ShiftDensity translated(double phi) const {
    int M = this->M();
    double steps = phi * M;
    long long r = std::llround(steps);
    if (std::abs(steps - static_cast<double>(r)) < 1e-9) {
      std::vector<double> v(M);
      long long sh = ((r % M) + M) % M;
      for (int m = 0; m < M; ++m) v[static_cast<std::size_t>((m + sh) % M)] = g_[static_cast<std::size_t>(m)];
      return ShiftDensity(std::move(v));
    }
    std::vector<cplx> X(M / 2 + 1);
    for (int k = 0; k <= M / 2; ++k) X[k] = c_[k] * std::polar(1.0, -kTwoPi * std::fmod(k * phi, 1.0));
    if (M % 2 == 0) X[M / 2] = c_[M / 2].real() * std::cos(kPi * std::fmod(M * phi, 2.0));
    auto v = fft::irfft(X, M);
    for (double& x : v) {
      if (x < -1e-9) throw NumericError("ShiftDensity::translated: interpolant goes negative");
      x = std::max(0.0, x);
    }
    return normalized(std::move(v));
  }

  // Resampled on another grid through the interpolant.
  ShiftDensity resampled(int M2) const {
    if (M2 == M()) return *this;
    std::vector<double> v(M2);
    for (int m = 0; m < M2; ++m) v[m] = std::max(0.0, eval(static_cast<double>(m) / M2));
    return normalized(std::move(v));
  }

  // Index of the atom selected by a uniform u in [0,1).
  int node_from_uniform(double u) const {
    double target = u * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    int m = static_cast<int>(it - cum_.begin());
    m = std::min(m, M() - 1);
    while (g_[m] == 0.0 && m + 1 < M()) ++m;  // guard against ties at empty atoms
    return m;
  }

  // Shift drawn from the atom measure (no jitter).
  double sample_node(Rng& rng) const { return static_cast<double>(node_from_uniform(uniform01(rng))) / M(); }

  // Shift drawn from the bin measure: atom by inverse CDF, then uniform jitter
  // inside the centred bin, wrapped to [0,1).
  double sample(Rng& rng) const {
    int m = node_from_uniform(uniform01(rng));
    double t = (static_cast<double>(m) + uniform01(rng) - 0.5) / M();
    t -= std::floor(t);
    return t >= 1.0 ? 0.0 : t;
  }

  // Cumulative atom mass through node m (inclusive).
  double atom_cdf(int m) const { return cum_[m] / cum_.back(); }

 private:
  void build_cache() {
    auto X = fft::rfft(g_);
    c_.resize(X.size());
    double inv = 1.0 / static_cast<double>(g_.size());
    for (std::size_t k = 0; k < X.size(); ++k) c_[k] = X[k] * inv;
    cum_.resize(g_.size());
    double s = 0.0;
    for (std::size_t m = 0; m < g_.size(); ++m) cum_[m] = (s += g_[m]);
  }

  std::vector<double> g_;
  std::vector<cplx> c_;
  std::vector<double> cum_;
};

// L2 distance on [0,1) by the grid rule (exact Parseval for the interpolants).
inline double l2_distance(const ShiftDensity& a, const ShiftDensity& b) {
  if (a.M() != b.M()) throw std::invalid_argument("l2_distance: densities on different grids");
  double s = 0.0;
  for (int m = 0; m < a.M(); ++m) s += (a[m] - b[m]) * (a[m] - b[m]);
  return std::sqrt(s / a.M());
}

// Total variation between the atom measures, 1/2 sum |g_m - h_m| / M.
inline double tv_distance(const ShiftDensity& a, const ShiftDensity& b) {
  if (a.M() != b.M()) throw std::invalid_argument("tv_distance: densities on different grids");
  double s = 0.0;
  for (int m = 0; m < a.M(); ++m) s += std::abs(a[m] - b[m]);
  return 0.5 * s / a.M();
}

}  // namespace shapeinv
