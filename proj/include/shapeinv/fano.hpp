#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "density.hpp"
#include "distance.hpp"
#include "fourier.hpp"
#include "numerics.hpp"

namespace shapeinv {

// Hypotheses (f_j, g_j), j = 1..p:
//   f_j(x) = e^{i 2 pi x} + p^{-s} e^{i 2 pi (j-1)/p} e^{i 2 pi p x},
//   c_0(g_j) = 1, c_q(g_j) = c_q(g_1) exp(-i 2 pi l(q) (j-1)/p), c_q(g_1) = a |q|^{-beta},
// with l(q) from fano_block_index.
struct FanoNet {
  int p = 0;
  double s = 1.0, nu = 1.6, beta = 2.5, A = 2.0;
  double a = 0.0;
  int M = 0;
  int K_g = 0;
  std::vector<FourierSeries> f;
  std::vector<ShiftDensity> g;
  std::vector<std::vector<cplx>> coeffs;  // c_q(g_j), q = 1..K_g

  int d() const { return p / 4; }
};

// l in q = m + l p. Frequencies with |m| <= p/4 are constrained and use the
// nearest multiple; the others are free and take the decomposition with the
// smallest moment order |m| + |l| (ties to the smaller |l|).
inline int fano_block_index(int q, int p) {
  int best = 0, cost = std::abs(q);
  int l0 = static_cast<int>(std::round(static_cast<double>(q) / p));
  for (int l = l0 - 1; l <= l0 + 1; ++l) {
    int c = std::abs(q - l * p) + std::abs(l);
    if (c < cost || (c == cost && std::abs(l) < std::abs(best))) best = l, cost = c;
  }
  return best;
}

// Amplitude making g_1 lie in the Sobolev-nu ball of radius A and
// sum_{k != 0} |c_k| <= 1 (nonnegativity).
inline double fano_amplitude(double nu, double beta, double A) {
  double a1 = A / std::sqrt(2.0 * std::riemann_zeta(2.0 * beta - 2.0 * nu));
  double a2 = 1.0 / std::sqrt(2.0 * std::riemann_zeta(2.0 * beta));
  double a3 = beta > 1.0 ? 1.0 / (2.0 * std::riemann_zeta(beta)) : 0.0;
  return std::min({a1, a2, a3});
}

inline FanoNet build_net(int p, double s, double nu, double beta, double A, int M = 0) {
  if (p < 4 || p % 4 != 0) throw std::invalid_argument("build_net: p must be a multiple of 4, >= 4");
  if (!(beta > nu + 0.5)) throw std::invalid_argument("build_net: need beta > nu + 1/2");
  if (!(beta > 1.0)) throw std::invalid_argument("build_net: need beta > 1 for summable coefficients");
  if (!(A > 0.0)) throw std::invalid_argument("build_net: A must be > 0");
  FanoNet net;
  net.p = p;
  net.s = s;
  net.nu = nu;
  net.beta = beta;
  net.A = A;
  net.M = M > 0 ? M : std::max(256, 8 * p);
  if (net.M < 2 * p + 2) throw std::invalid_argument("build_net: grid too coarse for frequency p");
  net.K_g = net.M / 2 - 1;
  net.a = fano_amplitude(nu, beta, A);
  for (int j = 1; j <= p; ++j) {
    FourierSeries f(p);
    f.set(1, 1.0);
    f.set(p, std::pow(static_cast<double>(p), -s) * std::polar(1.0, kTwoPi * (j - 1.0) / p));
    f.set_identifiable(true);
    net.f.push_back(f);
    std::vector<cplx> c(static_cast<std::size_t>(net.K_g));
    for (int q = 1; q <= net.K_g; ++q) {
      int l = fano_block_index(q, p);
      c[q - 1] = net.a * std::pow(static_cast<double>(q), -beta) *
                 std::polar(1.0, -kTwoPi * std::fmod(static_cast<double>(l) * (j - 1.0) / p, 1.0));
    }
    std::vector<double> v(static_cast<std::size_t>(net.M), 1.0);
    double mn = 1.0;
    for (int m = 0; m < net.M; ++m) {
      for (int q = 1; q <= net.K_g; ++q)
        v[m] += 2.0 * std::real(c[q - 1] * std::polar(1.0, kTwoPi * static_cast<double>((1LL * q * m) % net.M) / net.M));
      mn = std::min(mn, v[m]);
    }
    if (mn < 0.0)
      throw NumericError("build_net: g_" + std::to_string(j) + " has negative value " + std::to_string(mn) +
                         " (a=" + std::to_string(net.a) + ")");
    net.g.push_back(ShiftDensity::normalized(std::move(v)));
    net.coeffs.push_back(std::move(c));
  }
  return net;
}

struct SeparationReport {
  double min_f_sep2 = 0.0;         // min_{j != j'} ||f_j - f_j'||^2
  double f_formula_max_err = 0.0;  // max |brute force - 4 p^{-2s} sin^2(pi D / p)|
  double min_g_sep2 = 0.0;
  double g_floor = 0.0;            // |c_p(g_1)|^2 4 sin^2(pi / p)
  double reference_g_scale = 0.0;      // p^{-2 nu - 2}, printed rate, for reference
  bool f_ok = false;
  bool g_ok = false;
};

inline double fano_f_separation(int p, double s, int gap) {
  double x = std::sin(kPi * gap / p);
  return 4.0 * std::pow(static_cast<double>(p), -2.0 * s) * x * x;
}

inline SeparationReport verify_separation(const FanoNet& net) {
  SeparationReport r;
  r.min_f_sep2 = std::numeric_limits<double>::infinity();
  r.min_g_sep2 = std::numeric_limits<double>::infinity();
  for (int j = 0; j < net.p; ++j)
    for (int jp = j + 1; jp < net.p; ++jp) {
      double fs = std::pow(l2_distance(net.f[j], net.f[jp]), 2);
      r.min_f_sep2 = std::min(r.min_f_sep2, fs);
      r.f_formula_max_err = std::max(r.f_formula_max_err, std::abs(fs - fano_f_separation(net.p, net.s, jp - j)));
      r.min_g_sep2 = std::min(r.min_g_sep2, std::pow(l2_distance(net.g[j], net.g[jp]), 2));
    }
  double cp = net.a * std::pow(static_cast<double>(net.p), -net.beta);
  double x = std::sin(kPi / net.p);
  r.g_floor = cp * cp * 4.0 * x * x;
  r.reference_g_scale = std::pow(static_cast<double>(net.p), -2.0 * net.nu - 2.0);
  r.f_ok = r.f_formula_max_err <= 1e-12;
  r.g_ok = r.min_g_sep2 >= r.g_floor * (1.0 - 1e-9);
  return r;
}

// Laws restricted to the frequencies {1, p} (the only nonzero shape coefficients).
inline MixtureLaw fano_law(const FanoNet& net, int j, const ShiftDensity& g) {
  return MixtureLaw{net.f[static_cast<std::size_t>(j)], g};
}

struct ClosenessReport {
  std::vector<DistanceEstimate> tv;  // TV(P_j, P_1), j = 1..p
  double max_tv = 0.0;
  double max_tv_stderr = 0.0;
};

enum class FanoAblation {
  None,
  UniformShifts,  // g_j replaced by the uniform law for j >= 2
  SharedShift     // g_j replaced by g_1 for j >= 2
};

inline ClosenessReport verify_closeness(const FanoNet& net, std::size_t budget, std::uint64_t seed,
                                        FanoAblation ablation = FanoAblation::None) {
  ClosenessReport r;
  r.tv.resize(static_cast<std::size_t>(net.p));
  auto base = fano_law(net, 0, net.g[0]);
  auto uni = ShiftDensity::uniform(net.M);
  parallel_for(static_cast<std::size_t>(net.p), [&](std::size_t j) {
    if (j == 0) {
      r.tv[0] = DistanceEstimate{0.0, 0.0, DistanceMethod::MonteCarlo};
      return;
    }
    const ShiftDensity& gj = ablation == FanoAblation::UniformShifts ? uni
                             : ablation == FanoAblation::SharedShift ? net.g[0]
                                                                      : net.g[j];
    auto c = compare_laws(base, fano_law(net, static_cast<int>(j), gj), budget, seed);
    r.tv[j] = c.tv;
  });
  for (auto& e : r.tv)
    if (e.value > r.max_tv) r.max_tv = e.value, r.max_tv_stderr = e.stderr_;
  return r;
}

// (alpha / 2) (1 - (beta + log 2) / log r), clamped at 0.
inline double fano_bound(double alpha_r, double beta_r, double r) {
  if (r < 2.0) throw std::invalid_argument("fano_bound: r must be >= 2");
  double v = 0.5 * alpha_r * (1.0 - (beta_r + std::log(2.0)) / std::log(r));
  return std::max(0.0, v);
}

// KL proxy sqrt(eta) log(1/eta) from a TV level eta.
inline double kl_proxy(double eta) {
  if (eta <= 0.0) return 0.0;
  if (eta >= 1.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(eta) * std::log(1.0 / eta);
}

inline int fano_net_size(double n, double kappa = 12.5) {
  int p = static_cast<int>(std::ceil(kappa * std::log(n)));
  return std::max(4, (p + 3) / 4 * 4);
}

struct PipelineReport {
  double n = 0.0;
  int p = 0;
  double a = 0.0;
  double alpha_f = 0.0;  // min ||f_j - f_j'||^2
  double alpha_g = 0.0;  // min ||g_j - g_j'||^2
  double eta_measured = 0.0;
  double eta_stderr = 0.0;
  double beta_measured = 0.0;  // n * KL proxy(eta_measured)
  double bound_f_measured = 0.0;
  double bound_g_measured = 0.0;
  double eta_nominal = 0.0;  // (n log n)^{-2}
  double beta_nominal = 0.0;
  double bound_f_nominal = 0.0;
  double bound_g_nominal = 0.0;
  double R_n = 0.0;  // 3 sqrt(log n), reporting constant
  double rate_f = 0.0;          // (log n)^{-(2s+2)}
  double rate_g_statement = 0.0;  // (log n)^{-(2 nu + 1)}
  double rate_g_proof = 0.0;      // (log n)^{-(2 nu + 2)}
};

inline PipelineReport lower_bound_pipeline(double n, double s, double nu, double beta, double A, double kappa = 12.5,
                                           std::size_t budget = 20000, std::uint64_t seed = 1) {
  if (!(n >= 3.0)) throw std::invalid_argument("lower_bound_pipeline: n must be >= 3");
  PipelineReport r;
  r.n = n;
  r.p = fano_net_size(n, kappa);
  auto net = build_net(r.p, s, nu, beta, A);
  r.a = net.a;
  auto sep = verify_separation(net);
  r.alpha_f = sep.min_f_sep2;
  r.alpha_g = sep.min_g_sep2;
  auto close = verify_closeness(net, budget, seed);
  r.eta_measured = close.max_tv;
  r.eta_stderr = close.max_tv_stderr;
  double logn = std::log(n);
  r.beta_measured = n * kl_proxy(r.eta_measured);
  r.bound_f_measured = fano_bound(r.alpha_f, r.beta_measured, r.p);
  r.bound_g_measured = fano_bound(r.alpha_g, r.beta_measured, r.p);
  r.eta_nominal = std::pow(n * logn, -2.0);
  r.beta_nominal = n * kl_proxy(r.eta_nominal);
  r.bound_f_nominal = fano_bound(r.alpha_f, r.beta_nominal, r.p);
  r.bound_g_nominal = fano_bound(r.alpha_g, r.beta_nominal, r.p);
  r.R_n = 3.0 * std::sqrt(logn);
  r.rate_f = std::pow(logn, -(2.0 * s + 2.0));
  r.rate_g_statement = std::pow(logn, -(2.0 * nu + 1.0));
  r.rate_g_proof = std::pow(logn, -(2.0 * nu + 2.0));
  return r;
}

}  // namespace shapeinv
