#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "density.hpp"
#include "fourier.hpp"
#include "numerics.hpp"

namespace shapeinv {

// One observed curve: y_l = theta_l exp(-i 2 pi l tau) + xi_l, l in [-K, K].
struct CurveObservation {
  int K = 0;
  std::vector<cplx> y;                // index l + K
  std::optional<double> hidden_shift;  // diagnostics only
  double noise_level = 1.0;

  cplx operator[](int l) const { return (l < -K || l > K) ? cplx{} : y[static_cast<std::size_t>(l + K)]; }
};

struct Truth {
  FourierSeries f;
  ShiftDensity g;
};

struct Dataset {
  int K = 0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<CurveObservation> curves;
  std::optional<Truth> truth;
  std::vector<std::string> warnings;

  std::size_t n() const { return curves.size(); }
};

inline double sample_shift(const ShiftDensity& g, Rng& rng) {
  if (std::abs(g.integral() - 1.0) > ShiftDensity::kNormTol)
    throw std::invalid_argument("sample_shift: density is not normalized");
  return g.sample(rng);
}

// Draws n curves; curve j uses substream (seed, j). noise_scale is a debug
// knob (1 reproduces the model).
inline Dataset generate_dataset(const FourierSeries& f0, const ShiftDensity& g0, int n, int K, std::uint64_t seed,
                                double noise_scale = 1.0) {
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  if (K < 0) throw std::invalid_argument("generate_dataset: negative cutoff");
  Dataset d;
  d.K = K;
  d.seed = seed;
  d.truth = Truth{f0, g0};
  if (f0.support() > K)
    d.warnings.push_back("generate_dataset: shape has nonzero coefficients above K=" + std::to_string(K) +
                         "; they are truncated");
  d.curves.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    Rng rng = substream(seed, j);
    CurveObservation c;
    c.K = K;
    double tau = g0.sample(rng);
    c.hidden_shift = tau;
    c.y.resize(2 * K + 1);
    for (int l = -K; l <= K; ++l) {
      cplx xi = complex_normal(rng, 1.0);
      c.y[static_cast<std::size_t>(l + K)] = f0[l] * shift_phase(l, tau) + noise_scale * xi;
    }
    d.curves[j] = std::move(c);
  });
  return d;
}

inline int default_quadrature_size(int K) { return std::max(256, 8 * K); }

// Quadrature for the shift integral: nodes q / Q with weights from g.
class MixtureKernel {
 public:
  MixtureKernel(const ShiftDensity& g, int Q) : Q_(Q), w_(g.quadrature_weights(Q)) {
    bool any = false;
    for (double x : w_) any = any || x != 0.0;
    if (!any) throw std::invalid_argument("MixtureKernel: zero density");
    roots_.resize(static_cast<std::size_t>(Q));
    for (int j = 0; j < Q; ++j) roots_[j] = std::polar(1.0, -kTwoPi * j / Q);
  }

  int Q() const { return Q_; }
  const std::vector<double>& weights() const { return w_; }
  // exp(-i 2 pi l q / Q)
  cplx phase(int l, int q) const { return roots_[static_cast<std::size_t>(detail::mod(1LL * l * q, Q_))]; }

  // log sum_q w_q exp(S_q) with signed weights.
  double log_mix(const std::vector<double>& S) const {
    double m = -std::numeric_limits<double>::infinity();
    for (int q = 0; q < Q_; ++q)
      if (w_[q] != 0.0) m = std::max(m, S[q]);
    double s = 0.0;
    for (int q = 0; q < Q_; ++q)
      if (w_[q] != 0.0) s += w_[q] * std::exp(S[q] - m);
    if (!(s > 0.0)) throw NumericError("MixtureKernel: nonpositive mixture sum (quadrature too coarse for g)");
    return m + std::log(s);
  }

 private:
  int Q_;
  std::vector<double> w_;
  std::vector<cplx> roots_;
};

// log int prod_l gamma(y_l - theta_l exp(-i 2 pi l phi)) g(phi) dphi over the
// curve's band, gamma(z) = exp(-|z|^2) / pi.
inline double loglik_curve(const CurveObservation& y, const FourierSeries& f, const MixtureKernel& kern) {
  int K = y.K;
  double base = 0.0;
  for (int l = -K; l <= K; ++l) base += -std::log(kPi) - std::norm(y[l]) - std::norm(f[l]);
  std::vector<cplx> a;
  std::vector<int> ls;
  for (int l = -K; l <= K; ++l) {
    cplx t = f[l];
    if (t != cplx{}) {
      a.push_back(std::conj(y[l]) * t);
      ls.push_back(l);
    }
  }
  if (a.empty()) return base;
  std::vector<double> S(static_cast<std::size_t>(kern.Q()));
  for (int q = 0; q < kern.Q(); ++q) {
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * kern.phase(ls[i], q);
    S[q] = 2.0 * s.real();
  }
  return base + kern.log_mix(S);
}

inline double loglik_curve(const CurveObservation& y, const FourierSeries& f, const ShiftDensity& g, int Q = 0) {
  if (Q == 0) Q = default_quadrature_size(y.K);
  if (Q < 2 * y.K + 2) throw std::invalid_argument("loglik_curve: Q must be >= 2K+2");
  return loglik_curve(y, f, MixtureKernel(g, Q));
}

inline double loglik_dataset(const Dataset& d, const FourierSeries& f, const ShiftDensity& g, int Q = 0) {
  if (Q == 0) Q = default_quadrature_size(d.K);
  MixtureKernel kern(g, Q);
  double s = 0.0;
  for (auto& c : d.curves) s += loglik_curve(c, f, kern);
  return s;
}

}  // namespace shapeinv
