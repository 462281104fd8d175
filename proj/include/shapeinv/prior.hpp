#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "density.hpp"
#include "fft.hpp"
#include "fourier.hpp"
#include "numerics.hpp"

namespace shapeinv {

// ============================================================================
// Sieve prior on shapes
// ============================================================================

struct SievePriorConfig {
  double n = 100.0;  // sample-size index of the prior
  double rho = 1.5;
  double c_lambda = 1.0;
  int K_max = 32;

  void validate() const {
    if (!(n > 1.0)) throw ConfigError("sieve prior: n must be > 1");
    if (!(rho > 1.0 && rho < 2.0)) throw ConfigError("sieve prior: rho must lie in (1, 2)");
    if (!(c_lambda > 0.0)) throw ConfigError("sieve prior: c_lambda must be > 0");
    if (K_max < 1) throw ConfigError("sieve prior: K_max must be >= 1");
  }

  // xi_n^2 = n^{-1/4} (log n)^{-3/2}
  double xi2() const { return std::pow(n, -0.25) * std::pow(std::log(n), -1.5); }

  double log_lambda_unnormalized(int l) const {
    return -c_lambda * l * l * std::pow(std::log(l + 1.0), rho);
  }

  // Normalized weights of levels 1..cap (cap defaults to K_max).
  std::vector<double> level_weights(int cap = 0) const {
    if (cap <= 0 || cap > K_max) cap = K_max;
    std::vector<double> lw(static_cast<std::size_t>(cap));
    for (int l = 1; l <= cap; ++l) lw[l - 1] = log_lambda_unnormalized(l);
    double z = log_sum_exp(lw);
    for (double& x : lw) x = std::exp(x - z);
    return lw;
  }
};

inline int sample_sieve_level(const SievePriorConfig& cfg, Rng& rng) {
  auto w = cfg.level_weights();
  double u = uniform01(rng), acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(w.size());
}

// Coefficient prior inside an active band: theta_1 ~ |N(0, xi^2)|, every other
// |k| <= level complex normal with variance xi^2.
inline cplx sample_sieve_coefficient(int k, double xi2, Rng& rng) {
  if (k == 1) {
    double t = 0.0;
    while (t == 0.0) t = std::abs(std::sqrt(xi2) * std_normal(rng));
    return {t, 0.0};
  }
  return complex_normal(rng, xi2);
}

inline double log_sieve_coefficient_density(int k, cplx v, double xi2) {
  if (k == 1) {
    if (!(v.real() > 0.0) || v.imag() != 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(2.0) - 0.5 * std::log(kTwoPi * xi2) - v.real() * v.real() / (2.0 * xi2);
  }
  return -std::log(kPi * xi2) - std::norm(v) / xi2;
}

inline FourierSeries sample_sieve_f_at_level(int level, double xi2, Rng& rng) {
  FourierSeries f(level);
  for (int k = -level; k <= level; ++k) f.set(k, sample_sieve_coefficient(k, xi2, rng));
  f.set_identifiable(true);
  return f;
}

inline FourierSeries sample_sieve_f(const SievePriorConfig& cfg, Rng& rng) {
  int level = sample_sieve_level(cfg, rng);
  return sample_sieve_f_at_level(level, cfg.xi2(), rng);
}

// ============================================================================
// Gaussian-process prior on log shift densities
// ============================================================================

// Function on [0,1] written as
//   sum_k s_k sin(pi k t) + sum_k c_k cos(pi k t) + sum_j p_j t^j,
// a basis closed under the centred integration J.
struct ModeSeries {
  std::vector<double> sin_c;  // index k, k >= 1 (index 0 unused)
  std::vector<double> cos_c;  // index k, k >= 1 (index 0 unused; constants live in poly)
  std::vector<double> poly;   // index j

  void ensure(std::size_t modes, std::size_t degree) {
    if (sin_c.size() < modes + 1) sin_c.resize(modes + 1, 0.0);
    if (cos_c.size() < modes + 1) cos_c.resize(modes + 1, 0.0);
    if (poly.size() < degree + 1) poly.resize(degree + 1, 0.0);
  }

  double eval(double t) const {
    double s = 0.0;
    for (std::size_t k = 1; k < sin_c.size(); ++k) s += sin_c[k] * std::sin(kPi * k * t);
    for (std::size_t k = 1; k < cos_c.size(); ++k) s += cos_c[k] * std::cos(kPi * k * t);
    double pw = 1.0;
    for (double p : poly) s += p * pw, pw *= t;
    return s;
  }
};

// J(f)(t) = int_0^t f - t int_0^1 f, applied exactly mode by mode.
inline ModeSeries apply_J(const ModeSeries& in) {
  ModeSeries out;
  std::size_t modes = std::max(in.sin_c.size(), in.cos_c.size());
  out.ensure(modes ? modes - 1 : 0, in.poly.size() + 1);
  for (std::size_t k = 1; k < in.sin_c.size(); ++k) {
    double a = in.sin_c[k];
    if (a == 0.0) continue;
    double w = a / (kPi * k);
    out.cos_c[k] -= w;
    out.poly[0] += w;
    out.poly[1] -= (k % 2 == 1) ? 2.0 * w : 0.0;
  }
  for (std::size_t k = 1; k < in.cos_c.size(); ++k) out.sin_c[k] += in.cos_c[k] / (kPi * k);
  for (std::size_t j = 0; j < in.poly.size(); ++j) {
    double p = in.poly[j] / (j + 1.0);
    out.poly[j + 1] += p;
    out.poly[1] -= p;
  }
  return out;
}

// Values at t_m = m / M, m = 0..M, through fast sine/cosine transforms. Modes
// above M are folded onto the grid exactly.
inline std::vector<double> evaluate_modes(const ModeSeries& s, int M) {
  if (M < 2) throw std::invalid_argument("evaluate_modes: grid size must be >= 2");
  std::vector<double> sa(static_cast<std::size_t>(M), 0.0), ca(static_cast<std::size_t>(M + 1), 0.0);
  for (std::size_t k = 1; k < s.sin_c.size(); ++k) {
    long long r = static_cast<long long>(k) % (2LL * M);
    if (r == 0 || r == M) continue;
    if (r < M) sa[r] += s.sin_c[k];
    else sa[2 * M - r] -= s.sin_c[k];
  }
  for (std::size_t k = 1; k < s.cos_c.size(); ++k) {
    long long r = static_cast<long long>(k) % (2LL * M);
    ca[r <= M ? r : 2 * M - r] += s.cos_c[k];
  }
  std::vector<double> out(static_cast<std::size_t>(M + 1), 0.0);
  if (M >= 2) {
    auto sv = fft::sine_synthesis(std::vector<double>(sa.begin() + 1, sa.end()));
    for (int m = 1; m < M; ++m) out[m] += sv[m - 1];
  }
  auto cv = fft::cosine_synthesis(ca);
  for (int m = 0; m <= M; ++m) {
    double t = static_cast<double>(m) / M, pw = 1.0, p = 0.0;
    for (double c : s.poly) p += c * pw, pw *= t;
    out[m] += cv[m] + p;
  }
  return out;
}

// Grid version of J for arbitrary samples f(t_m), m = 0..M: cumulative
// trapezoid rule.
inline std::vector<double> apply_J(const std::vector<double>& f) {
  if (f.size() < 2) throw std::invalid_argument("apply_J: grid size must be >= 2");
  std::size_t M = f.size() - 1;
  double h = 1.0 / static_cast<double>(M);
  std::vector<double> F(f.size(), 0.0);
  for (std::size_t m = 1; m <= M; ++m) F[m] = F[m - 1] + 0.5 * h * (f[m - 1] + f[m]);
  std::vector<double> out(f.size());
  for (std::size_t m = 0; m <= M; ++m) out[m] = F[m] - (static_cast<double>(m) * h) * F[M];
  return out;
}

inline int k_nu(double nu) {
  if (nu < 0.5) throw std::invalid_argument("k_nu: nu must be >= 1/2");
  return static_cast<int>(std::floor(nu - 0.5));
}

// w = J_{k_nu}(B) + sum_{i=1}^{k_nu} Z_i psi_i,  psi_i = sin(2 pi i t) + cos(2 pi i t),
// B = sum_k sqrt(2) sin(pi k t) xi_k / (pi k).
struct GpPath {
  int M = 0;
  int k_nu = 0;
  std::vector<double> xi;  // bridge coordinates, standard normal
  std::vector<double> z;   // Z_1..Z_{k_nu}
  std::vector<double> values;  // w(m / M), m = 0..M-1 (periodic)

  std::vector<double> bridge_coeffs() const {
    std::vector<double> a(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) a[k] = std::sqrt(2.0) * xi[k] / (kPi * (k + 1.0));
    return a;
  }

  ModeSeries modes() const {
    ModeSeries b;
    b.ensure(xi.size(), 0);
    auto a = bridge_coeffs();
    for (std::size_t k = 0; k < a.size(); ++k) b.sin_c[k + 1] = a[k];
    for (int i = 0; i < k_nu; ++i) b = apply_J(b);
    b.ensure(std::max<std::size_t>(b.sin_c.size() - 1, 2 * z.size()), 0);
    for (std::size_t i = 1; i <= z.size(); ++i) {
      b.sin_c[2 * i] += z[i - 1];
      b.cos_c[2 * i] += z[i - 1];
    }
    return b;
  }

  // Gaussian coordinates (xi then z); pCN acts on these.
  std::vector<double> coordinates() const {
    std::vector<double> u(xi);
    u.insert(u.end(), z.begin(), z.end());
    return u;
  }
};

inline GpPath gp_path_from_coordinates(double nu, int M, int N_kl, const std::vector<double>& u) {
  GpPath p;
  p.M = M;
  p.k_nu = k_nu(nu);
  if (u.size() != static_cast<std::size_t>(N_kl + p.k_nu)) throw std::invalid_argument("gp path: coordinate count");
  p.xi.assign(u.begin(), u.begin() + N_kl);
  p.z.assign(u.begin() + N_kl, u.end());
  auto full = evaluate_modes(p.modes(), M);
  p.values.assign(full.begin(), full.end() - 1);
  return p;
}

inline GpPath sample_gp_w(double nu, int M, int N_kl, Rng& rng) {
  if (nu < 0.5) throw std::invalid_argument("sample_gp_w: nu must be >= 1/2");
  if (M < 64) throw std::invalid_argument("sample_gp_w: M must be >= 64");
  if (N_kl < 16) throw std::invalid_argument("sample_gp_w: N_kl must be >= 16");
  std::vector<double> u(static_cast<std::size_t>(N_kl + k_nu(nu)));
  for (double& x : u) x = std_normal(rng);
  return gp_path_from_coordinates(nu, M, N_kl, u);
}

// p_w = exp(w) / int exp(w) on the periodic grid.
inline ShiftDensity normalize_to_density(const std::vector<double>& w) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : w) {
    if (!std::isfinite(x)) throw std::invalid_argument("normalize_to_density: non-finite path value");
    mx = std::max(mx, x);
  }
  std::vector<double> v(w.size());
  for (std::size_t m = 0; m < w.size(); ++m) v[m] = std::exp(w[m] - mx);
  return ShiftDensity::normalized(std::move(v));
}

inline ShiftDensity normalize_to_density(const GpPath& w) { return normalize_to_density(w.values); }

struct GPriorConfig {
  double nu = 1.6;
  double A = 2.0;
  int M = 256;
  int N_kl = 512;
  int max_attempts = 1000;

  void validate() const {
    if (nu < 0.5) throw ConfigError("g prior: nu must be >= 1/2");
    if (!(A > 0.0)) throw ConfigError("g prior: A must be > 0");
    if (M < 64) throw ConfigError("g prior: M must be >= 64");
    if (N_kl < 16) throw ConfigError("g prior: N_kl must be >= 16");
    if (max_attempts < 1) throw ConfigError("g prior: max_attempts must be >= 1");
  }
  bool in_ball(const ShiftDensity& g) const { return g.sobolev_seminorm(nu) <= 2.0 * A; }
};

struct GPriorDraw {
  GpPath path;
  ShiftDensity g;
  int attempts = 0;
};

// Rejection sampling of the ball-restricted prior.
inline GPriorDraw sample_g_prior(const GPriorConfig& cfg, Rng& rng) {
  if (!(cfg.A > 0.0)) throw std::invalid_argument("sample_g_prior: A must be > 0");
  for (int att = 1; att <= cfg.max_attempts; ++att) {
    GpPath w = sample_gp_w(cfg.nu, cfg.M, cfg.N_kl, rng);
    ShiftDensity g = normalize_to_density(w);
    if (cfg.in_ball(g)) return GPriorDraw{std::move(w), std::move(g), att};
  }
  throw BudgetError("sample_g_prior: no draw inside the Sobolev ball after " + std::to_string(cfg.max_attempts) +
                    " attempts (enlarge A)");
}

// ============================================================================
// Small-ball probabilities of J_k(B)
// ============================================================================

struct SmallBallPoint {
  int k = 0;
  double epsilon = 0.0;
  int reps = 0;
  double p_hat = 0.0;
  double stderr_ = 0.0;
  bool censored = false;   // no hit: p_hat = 0, only the upper bound is informative
  double upper95 = 0.0;    // one-sided 95% bound (3/reps when censored)
};

struct SmallBallConfig {
  int reps = 100000;
  int N_kl = 512;
  int M = 4096;
  bool continuity_correction = true;  // k = 0 only
  std::uint64_t seed = 1;
};

// Continuity correction for the maximum of Brownian motion monitored on a grid
// of step h: the continuous maximum exceeds the discrete one by about
// beta sqrt(h), beta = -zeta(1/2) / sqrt(2 pi).
inline constexpr double kDiscreteMaxBeta = 0.5825971579390106;

// sup_t |J_k(B)(t)| for independent replicates; replicate r uses substream r.
// For k = 0 the grid values are drawn from the exact law of the full sine
// series: modes above M fold onto mode r in (0, M) with total variance
// 1 / (2 M^2 sin^2(pi r / 2M)), so no truncation bias enters the supremum.
// For k >= 1 the series is truncated at N_kl (the remainder is O(N_kl^-3)).
inline std::vector<double> smallball_sups(int k, const SmallBallConfig& cfg) {
  if (cfg.reps < 100) throw std::invalid_argument("smallball: reps must be >= 100");
  if (cfg.M < 2) throw std::invalid_argument("smallball: M must be >= 2");
  std::vector<double> sups(static_cast<std::size_t>(cfg.reps));
  std::vector<double> sd0;
  if (k == 0) {
    sd0.assign(static_cast<std::size_t>(cfg.M), 0.0);
    for (int r = 1; r < cfg.M; ++r) sd0[r] = 1.0 / (std::sqrt(2.0) * cfg.M * std::sin(kPi * r / (2.0 * cfg.M)));
  }
  const double shift = (k == 0 && cfg.continuity_correction) ? kDiscreteMaxBeta / std::sqrt(static_cast<double>(cfg.M)) : 0.0;
  parallel_for(sups.size(), [&](std::size_t r) {
    Rng rng = substream(cfg.seed, (static_cast<std::uint64_t>(k) << 40) + r);
    ModeSeries b;
    if (k == 0) {
      b.ensure(static_cast<std::size_t>(cfg.M - 1), 0);
      for (int j = 1; j < cfg.M; ++j) b.sin_c[j] = sd0[j] * std_normal(rng);
    } else {
      b.ensure(static_cast<std::size_t>(cfg.N_kl), 0);
      for (int j = 1; j <= cfg.N_kl; ++j) b.sin_c[j] = std::sqrt(2.0) * std_normal(rng) / (kPi * j);
      for (int i = 0; i < k; ++i) b = apply_J(b);
    }
    auto v = evaluate_modes(b, cfg.M);
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    sups[r] = s + shift;
  });
  return sups;
}

inline std::vector<SmallBallPoint> smallball_curve(int k, const std::vector<double>& eps, const SmallBallConfig& cfg) {
  auto sups = smallball_sups(k, cfg);
  std::vector<SmallBallPoint> out;
  for (double e : eps) {
    SmallBallPoint p;
    p.k = k;
    p.epsilon = e;
    p.reps = cfg.reps;
    double hits = 0.0;
    for (double s : sups) hits += (s <= e) ? 1.0 : 0.0;
    p.p_hat = hits / cfg.reps;
    p.stderr_ = std::sqrt(p.p_hat * (1.0 - p.p_hat) / cfg.reps);
    p.censored = hits == 0.0;
    p.upper95 = p.censored ? 3.0 / cfg.reps : std::min(1.0, p.p_hat + 1.645 * p.stderr_);
    out.push_back(p);
  }
  return out;
}

inline SmallBallPoint smallball_probability(int k, double eps, const SmallBallConfig& cfg) {
  return smallball_curve(k, {eps}, cfg).front();
}

// Slope of log(-log P) against log(1/eps) over the uncensored points with 0 < P < 1.
inline LineFit smallball_rate_fit(const std::vector<SmallBallPoint>& pts) {
  std::vector<double> x, y;
  for (auto& p : pts) {
    if (p.censored || p.p_hat <= 0.0 || p.p_hat >= 1.0) continue;
    x.push_back(std::log(1.0 / p.epsilon));
    y.push_back(std::log(-std::log(p.p_hat)));
  }
  if (x.size() < 2) throw NumericError("smallball_rate_fit: fewer than two informative points");
  return fit_line(x, y);
}

// ============================================================================
// Hellinger distance of normalized exponentials versus sup-norm of log ratio
// ============================================================================

struct HellingerBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs + 1e-14; }
};

// lhs = (int (sqrt p_v - sqrt p_w)^2)^{1/2} on the grid; rhs = D exp(D/2), D = ||v - w||_inf.
inline HellingerBoundCheck hellinger_log_density_bound_check(const std::vector<double>& v, const std::vector<double>& w) {
  if (v.size() != w.size()) throw std::invalid_argument("hellinger bound check: paths on different grids");
  auto pv = normalize_to_density(v), pw = normalize_to_density(w);
  double s = 0.0, D = 0.0;
  for (std::size_t m = 0; m < v.size(); ++m) {
    double d = std::sqrt(pv[static_cast<int>(m)]) - std::sqrt(pw[static_cast<int>(m)]);
    s += d * d;
    D = std::max(D, std::abs(v[m] - w[m]));
  }
  return {std::sqrt(s / v.size()), D * std::exp(D / 2.0)};
}

}  // namespace shapeinv
