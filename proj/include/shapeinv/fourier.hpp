#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "numerics.hpp"

namespace shapeinv {

// Truncated Fourier coefficient table theta_l, l in [-K, K].
class FourierSeries {
 public:
  FourierSeries() : coeffs_(1, cplx{}) {}
  explicit FourierSeries(int K) : K_(check_cutoff(K)), coeffs_(2 * K + 1, cplx{}) {}
  FourierSeries(int K, std::vector<cplx> coeffs, bool identifiable = false)
      : K_(check_cutoff(K)), coeffs_(std::move(coeffs)), identifiable_(identifiable) {
    if (coeffs_.size() != static_cast<std::size_t>(2 * K_ + 1))
      throw std::invalid_argument("FourierSeries: coefficient count must be 2K+1");
    if (identifiable_) check_identifiable();
  }

  // Smallest band holding every key of `m`.
  static FourierSeries from_map(const std::map<int, cplx>& m, bool identifiable = false) {
    int K = 0;
    for (auto& [l, v] : m) K = std::max(K, std::abs(l));
    FourierSeries f(K);
    for (auto& [l, v] : m) f.set(l, v);
    if (identifiable) f.set_identifiable(true);
    return f;
  }

  int K() const { return K_; }
  bool identifiable() const { return identifiable_; }

  cplx operator[](int l) const {
    if (l < -K_ || l > K_) return {};
    return coeffs_[l + K_];
  }
  void set(int l, cplx v) {
    if (l < -K_ || l > K_) throw std::out_of_range("FourierSeries::set: frequency outside [-K, K]");
    coeffs_[l + K_] = v;
  }

  void set_identifiable(bool on) {
    identifiable_ = on;
    if (on) check_identifiable();
  }

  const std::vector<cplx>& data() const { return coeffs_; }

  // Same coefficients on a band [-K2, K2]; entries beyond K2 are dropped.
  FourierSeries resized(int K2) const {
    FourierSeries r(K2);
    for (int l = -std::min(K_, K2); l <= std::min(K_, K2); ++l) r.set(l, (*this)[l]);
    r.identifiable_ = identifiable_ && K2 >= 1;
    return r;
  }

  // Largest |l| with a nonzero coefficient (0 if the series is zero).
  int support() const {
    for (int l = K_; l > 0; --l)
      if ((*this)[l] != cplx{} || (*this)[-l] != cplx{}) return l;
    return 0;
  }

  friend FourierSeries operator-(const FourierSeries& a, const FourierSeries& b) {
    int K = std::max(a.K_, b.K_);
    FourierSeries r(K);
    for (int l = -K; l <= K; ++l) r.set(l, a[l] - b[l]);
    return r;
  }
  friend FourierSeries operator+(const FourierSeries& a, const FourierSeries& b) {
    int K = std::max(a.K_, b.K_);
    FourierSeries r(K);
    for (int l = -K; l <= K; ++l) r.set(l, a[l] + b[l]);
    return r;
  }

 private:
  static int check_cutoff(int K) {
    if (K < 0) throw std::invalid_argument("FourierSeries: negative cutoff");
    return K;
  }
  void check_identifiable() const {
    cplx t = (*this)[1];
    if (!(t.real() > 0.0) || t.imag() != 0.0)
      throw std::invalid_argument("FourierSeries: identifiable shapes need real theta_1 > 0");
  }

  int K_ = 0;
  std::vector<cplx> coeffs_;
  bool identifiable_ = false;
};

// exp(-i 2 pi l phi), reduced so that l*phi is taken modulo 1 first.
inline cplx shift_phase(int l, double phi) {
  double x = std::fmod(static_cast<double>(l) * phi, 1.0);
  return std::polar(1.0, -kTwoPi * x);
}

// (theta . phi)_l = theta_l exp(-i 2 pi l phi).
inline FourierSeries shift_action(const FourierSeries& theta, double phi) {
  FourierSeries r(theta.K());
  for (int l = -theta.K(); l <= theta.K(); ++l) r.set(l, theta[l] * shift_phase(l, phi));
  return r;
}

namespace detail {
// exp(sign * i 2 pi j / M) for j = 0..M-1, indexed exactly by (l*m mod M).
inline std::vector<cplx> unit_roots(int M, double sign) {
  std::vector<cplx> w(M);
  for (int j = 0; j < M; ++j) w[j] = std::polar(1.0, sign * kTwoPi * j / M);
  return w;
}
inline int mod(long long a, int M) {
  long long r = a % M;
  return static_cast<int>(r < 0 ? r + M : r);
}
}  // namespace detail

// f(x_m) = sum_l theta_l exp(i 2 pi l m / M), x_m = m / M.
inline std::vector<cplx> evaluate_on_grid(const FourierSeries& f, int M) {
  if (M < 2 * f.K() + 1) throw std::invalid_argument("evaluate_on_grid: M < 2K+1 aliases frequencies");
  auto w = detail::unit_roots(M, +1.0);
  std::vector<cplx> out(M);
  for (int m = 0; m < M; ++m) {
    cplx s{};
    for (int l = -f.K(); l <= f.K(); ++l) s += f[l] * w[detail::mod(1LL * l * m, M)];
    out[m] = s;
  }
  return out;
}

inline FourierSeries coefficients_from_grid(const std::vector<cplx>& values, int K) {
  int M = static_cast<int>(values.size());
  if (K < 0) throw std::invalid_argument("coefficients_from_grid: negative cutoff");
  if (M < 2 * K + 1) throw std::invalid_argument("coefficients_from_grid: fewer than 2K+1 samples aliases frequencies");
  auto w = detail::unit_roots(M, -1.0);
  FourierSeries f(K);
  for (int l = -K; l <= K; ++l) {
    cplx s{};
    for (int m = 0; m < M; ++m) s += values[m] * w[detail::mod(1LL * l * m, M)];
    f.set(l, s / static_cast<double>(M));
  }
  return f;
}

struct NormReport {
  double l2 = 0.0;
  double h1 = 0.0;
  double sobolev_s = 0.0;
};

inline NormReport norms(const FourierSeries& f, double s = 1.0) {
  NormReport r;
  for (int l = -f.K(); l <= f.K(); ++l) {
    double a2 = std::norm(f[l]);
    double al = std::abs(l);
    r.l2 += a2;
    r.h1 += al * al * a2;
    r.sobolev_s += (1.0 + std::pow(al, 2.0 * s)) * a2;
  }
  r.l2 = std::sqrt(r.l2);
  r.h1 = std::sqrt(r.h1);
  r.sobolev_s = std::sqrt(r.sobolev_s);
  return r;
}

inline double l2_distance(const FourierSeries& a, const FourierSeries& b) { return norms(a - b).l2; }

// min over tau of ||f1 . tau - f2||: uniform tau grid, then golden-section
// search in the bracket around the best grid point.
inline double frechet_distance(const FourierSeries& f1, const FourierSeries& f2, int grid = 1024) {
  if (grid < 1) throw std::invalid_argument("frechet_distance: grid must be >= 1");
  int K = std::max(f1.K(), f2.K());
  auto dist2 = [&](double tau) {
    double s = 0.0;
    for (int l = -K; l <= K; ++l) s += std::norm(f1[l] * shift_phase(l, tau) - f2[l]);
    return s;
  };
  double best = dist2(0.0), best_tau = 0.0;
  for (int i = 1; i < grid; ++i) {
    double t = static_cast<double>(i) / grid;
    double d = dist2(t);
    if (d < best) best = d, best_tau = t;
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = best_tau - 1.0 / grid, b = best_tau + 1.0 / grid;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = dist2(c), fd = dist2(d);
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - gr * (b - a), fc = dist2(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + gr * (b - a), fd = dist2(d);
    }
  }
  best = std::min({best, fc, fd});
  return std::sqrt(std::max(0.0, best));
}

}  // namespace shapeinv
