#pragma once

#include <algorithm>
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

// Law P_{f,g} of the observed coefficient vector: theta . tau + xi, tau ~ g
// (atom measure of the grid), xi standard complex Gaussian per frequency.
struct MixtureLaw {
  FourierSeries f;
  ShiftDensity g;
};

enum class DistanceMethod { Quadrature, MonteCarlo };

inline const char* to_string(DistanceMethod m) {
  return m == DistanceMethod::Quadrature ? "quadrature" : "monte-carlo";
}

struct DistanceEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  DistanceMethod method = DistanceMethod::MonteCarlo;
  double refinement_delta = 0.0;  // quadrature only
  bool budget_short = false;      // target stderr not reached
};

// ============================================================================
// Closed forms for complex Gaussians N_C(mu, 1)
// ============================================================================

// TV between N_C(mu, I) and N_C(nu, I) with |mu - nu| = d: erf(d / 2).
inline double gaussian_tv(double d) { return std::erf(std::abs(d) / 2.0); }

// Hellinger with d_H^2 = int (sqrt p - sqrt q)^2: sqrt(2 (1 - exp(-d^2 / 4))).
inline double gaussian_hellinger(double d) { return std::sqrt(2.0 * (1.0 - std::exp(-d * d / 4.0))); }

// ============================================================================
// Wasserstein-1 on the line
// ============================================================================

// W1 = int_0^1 |G(x) - H(x)| dx for the atom measures (equal to the quantile
// form int_0^1 |G^{-1}(u) - H^{-1}(u)| du in one dimension).
inline double w1_distance(const ShiftDensity& a, const ShiftDensity& b) {
  struct Ev {
    double x;
    double da;
    double db;
  };
  std::vector<Ev> ev;
  for (int m = 0; m < a.M(); ++m)
    if (a[m] != 0.0) ev.push_back({static_cast<double>(m) / a.M(), a[m] / a.M(), 0.0});
  for (int m = 0; m < b.M(); ++m)
    if (b[m] != 0.0) ev.push_back({static_cast<double>(m) / b.M(), 0.0, b[m] / b.M()});
  std::sort(ev.begin(), ev.end(), [](const Ev& p, const Ev& q) { return p.x < q.x; });
  double Ga = 0.0, Gb = 0.0, w = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    Ga += ev[i].da;
    Gb += ev[i].db;
    double next = (i + 1 < ev.size()) ? ev[i + 1].x : 1.0;
    w += std::abs(Ga - Gb) * (next - ev[i].x);
  }
  return w;
}

// ============================================================================
// Monte Carlo comparison of two mixture laws
// ============================================================================

namespace detail {

// Evaluates log p(y) up to terms shared by every law on the same band:
// -sum|theta|^2 + log sum_m w_m exp(2 Re sum_l conj(y_l) theta_l e^{-i 2 pi l m / M}).
class LawEvaluator {
 public:
  LawEvaluator(const MixtureLaw& law, const std::vector<int>& band) : band_(band), g_(law.g) {
    for (int l : band) {
      theta_.push_back(law.f[l]);
      shared_ -= std::norm(law.f[l]);
    }
    int M = law.g.M();
    for (int m = 0; m < M; ++m) {
      if (law.g[m] == 0.0) continue;
      nodes_.push_back(m);
      logw_.push_back(std::log(law.g[m] / M));
    }
    std::size_t F = band.size(), N = nodes_.size();
    tre_.resize(F * N);
    tim_.resize(F * N);
    for (std::size_t i = 0; i < F; ++i)
      for (std::size_t j = 0; j < N; ++j) {
        cplx t = theta_[i] * std::polar(1.0, -kTwoPi * static_cast<double>(detail::mod(1LL * band[i] * nodes_[j], M)) / M);
        tre_[i * N + j] = t.real();
        tim_[i * N + j] = t.imag();
      }
    S_.resize(N);
  }

  double log_density(const std::vector<cplx>& y) const {
    std::size_t F = band_.size(), N = nodes_.size();
    std::fill(S_.begin(), S_.end(), 0.0);
    for (std::size_t i = 0; i < F; ++i) {
      double yr = y[i].real(), yi = y[i].imag();
      if (yr == 0.0 && yi == 0.0) continue;
      const double* tr = &tre_[i * N];
      const double* ti = &tim_[i * N];
      for (std::size_t j = 0; j < N; ++j) S_[j] += yr * tr[j] + yi * ti[j];
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j) mx = std::max(mx, logw_[j] + 2.0 * S_[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < N; ++j) s += std::exp(logw_[j] + 2.0 * S_[j] - mx);
    return shared_ + mx + std::log(s);
  }

  // y = theta . tau + xi with tau the atom picked by u; normals has 2|band| entries.
  void draw(double u, const double* normals, std::vector<cplx>& y) const {
    int m = g_.node_from_uniform(u);
    int M = g_.M();
    const double s = std::sqrt(0.5);
    for (std::size_t i = 0; i < band_.size(); ++i) {
      cplx mean = theta_[i] * std::polar(1.0, -kTwoPi * static_cast<double>(detail::mod(1LL * band_[i] * m, M)) / M);
      y[i] = mean + cplx{s * normals[2 * i], s * normals[2 * i + 1]};
    }
  }

 private:
  std::vector<int> band_;
  const ShiftDensity& g_;
  std::vector<cplx> theta_;
  double shared_ = 0.0;
  std::vector<int> nodes_;
  std::vector<double> logw_;
  std::vector<double> tre_, tim_;
  mutable std::vector<double> S_;
};

}  // namespace detail

// Frequencies where at least one law has a nonzero coefficient; the others
// are identical pure-noise coordinates and do not change TV or Hellinger.
inline std::vector<int> active_band(const MixtureLaw& a, const MixtureLaw& b) {
  int K = std::max(a.f.K(), b.f.K());
  std::vector<int> band;
  for (int l = -K; l <= K; ++l)
    if (a.f[l] != cplx{} || b.f[l] != cplx{}) band.push_back(l);
  return band;
}

// Fixed random inputs for the balanced-mixture estimator: the first half of
// the draws is taken from law a, the second from law b. Reusing one set for
// many pairs gives common random numbers.
struct MonteCarloDraws {
  int dims = 0;  // |band|
  std::vector<double> u;
  std::vector<double> normals;

  static MonteCarloDraws make(std::size_t count, int dims, std::uint64_t seed) {
    MonteCarloDraws d;
    d.dims = dims;
    count += count % 2;
    d.u.resize(count);
    d.normals.resize(count * 2 * static_cast<std::size_t>(dims));
    Rng rng = substream(seed, 0x5eedULL);
    for (std::size_t i = 0; i < count; ++i) {
      d.u[i] = uniform01(rng);
      for (int j = 0; j < 2 * dims; ++j) d.normals[i * 2 * dims + j] = std_normal(rng);
    }
    return d;
  }
  std::size_t size() const { return u.size(); }
};

struct LawComparison {
  DistanceEstimate tv;
  DistanceEstimate hellinger;
  double bhattacharyya = 1.0;
};

// TV = E_m[|p_a - p_b| / (p_a + p_b)], BC = E_m[2 sqrt(p_a p_b) / (p_a + p_b)]
// under m = (p_a + p_b) / 2, stratified over the two components.
inline LawComparison compare_laws(const MixtureLaw& a, const MixtureLaw& b, const std::vector<int>& band,
                                  const MonteCarloDraws& draws) {
  LawComparison r;
  r.tv.method = r.hellinger.method = DistanceMethod::MonteCarlo;
  if (band.empty()) return r;
  if (draws.dims != static_cast<int>(band.size())) throw std::invalid_argument("compare_laws: draws/band size mismatch");
  detail::LawEvaluator ea(a, band), eb(b, band);
  std::size_t N = draws.size(), half = N / 2;
  std::vector<cplx> y(band.size());
  double sums[2][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}};  // per stratum: tv, tv^2, bc, bc^2
  for (std::size_t i = 0; i < N; ++i) {
    int stratum = i < half ? 0 : 1;
    (stratum == 0 ? ea : eb).draw(draws.u[i], &draws.normals[i * 2 * band.size()], y);
    double d = ea.log_density(y) - eb.log_density(y);
    double t = std::tanh(std::abs(d) / 2.0);
    double c = 1.0 / std::cosh(d / 2.0);
    sums[stratum][0] += t;
    sums[stratum][1] += t * t;
    sums[stratum][2] += c;
    sums[stratum][3] += c * c;
  }
  auto stat = [&](int idx, double& mean_out, double& se_out) {
    double m = 0.0, v = 0.0;
    for (int s = 0; s < 2; ++s) {
      double n = static_cast<double>(s == 0 ? half : N - half);
      double mu = sums[s][idx] / n;
      double var = std::max(0.0, sums[s][idx + 1] / n - mu * mu) * n / std::max(1.0, n - 1.0);
      m += 0.5 * mu;
      v += 0.25 * var / n;
    }
    mean_out = m;
    se_out = std::sqrt(v);
  };
  double bc, bc_se;
  stat(0, r.tv.value, r.tv.stderr_);
  stat(2, bc, bc_se);
  bc = std::min(1.0, bc);
  r.bhattacharyya = bc;
  r.hellinger.value = std::sqrt(std::max(0.0, 2.0 * (1.0 - bc)));
  r.hellinger.stderr_ = r.hellinger.value > 0.0 ? std::min(bc_se / r.hellinger.value, std::sqrt(2.0 * bc_se))
                                                : std::sqrt(2.0 * bc_se);
  return r;
}

inline LawComparison compare_laws(const MixtureLaw& a, const MixtureLaw& b, std::size_t budget, std::uint64_t seed) {
  auto band = active_band(a, b);
  if (band.empty()) return LawComparison{DistanceEstimate{0, 0, DistanceMethod::MonteCarlo},
                                         DistanceEstimate{0, 0, DistanceMethod::MonteCarlo}, 1.0};
  return compare_laws(a, b, band, MonteCarloDraws::make(budget, static_cast<int>(band.size()), seed));
}

// ============================================================================
// Marginal TV by polar quadrature
// ============================================================================

struct PolarQuadrature {
  int radial = 512;
  int angular = 512;
  bool refine = false;  // double node counts until the value moves by < tol
  double tol = 1e-6;
  int max_nodes = 2048;
};

namespace detail {

inline double marginal_tv_polar(int k, cplx ta, const ShiftDensity& ga, cplx tb, const ShiftDensity& gb, int Nr,
                                int Na) {
  double R = std::max(std::abs(ta), std::abs(tb)) + 6.0;
  double dr = R / Nr, da = kTwoPi / Na;
  struct Side {
    double rho, arg;
    const ShiftDensity* g;
    std::vector<double> hist;  // angular-offset masses when offsets land on the angular grid
    std::vector<int> offs;
  };
  auto make = [&](cplx t, const ShiftDensity& g) {
    Side s{std::abs(t), std::arg(t), &g, {}, {}};
    int M = g.M();
    if ((1LL * Na * k) % M == 0) {
      s.hist.assign(static_cast<std::size_t>(Na), 0.0);
      for (int m = 0; m < M; ++m) {
        if (g[m] == 0.0) continue;
        int off = mod(1LL * Na * k / M * m, Na);
        s.hist[off] += g[m] / M;
      }
      for (int o = 0; o < Na; ++o)
        if (s.hist[o] != 0.0) s.offs.push_back(o);
    }
    return s;
  };
  Side A = make(ta, ga), B = make(tb, gb);
  std::vector<double> pa(Na), pb(Na), E(Na);
  auto density = [&](const Side& s, double r, std::vector<double>& p) {
    double radial = std::exp(-(r - s.rho) * (r - s.rho)) / kPi;
    double c = 2.0 * r * s.rho;
    if (!s.hist.empty()) {
      for (int i = 0; i < Na; ++i) E[i] = std::exp(-c * (1.0 - std::cos(i * da - s.arg)));
      for (int j = 0; j < Na; ++j) {
        double acc = 0.0;
        for (int o : s.offs) {
          int idx = j + o;
          if (idx >= Na) idx -= Na;
          acc += s.hist[o] * E[idx];
        }
        p[j] = radial * acc;
      }
    } else {
      int M = s.g->M();
      for (int j = 0; j < Na; ++j) {
        double acc = 0.0;
        for (int m = 0; m < M; ++m) {
          double gm = (*s.g)[m];
          if (gm == 0.0) continue;
          acc += gm / M * std::exp(-c * (1.0 - std::cos(j * da - s.arg + kTwoPi * std::fmod(1.0 * k * m / M, 1.0))));
        }
        p[j] = radial * acc;
      }
    }
  };
  double total = 0.0;
  for (int i = 0; i < Nr; ++i) {
    double r = (i + 0.5) * dr;
    density(A, r, pa);
    density(B, r, pb);
    double ring = 0.0;
    for (int j = 0; j < Na; ++j) ring += std::abs(pa[j] - pb[j]);
    total += ring * r;
  }
  return 0.5 * total * dr * da;
}

}  // namespace detail

// TV between the laws of the k-th coefficient, theta_k . tau + xi.
inline DistanceEstimate tv_marginal(int k, const MixtureLaw& a, const MixtureLaw& b, const PolarQuadrature& q = {}) {
  int K = std::max(a.f.K(), b.f.K());
  if (std::abs(k) > K) throw std::invalid_argument("tv_marginal: |k| exceeds the cutoff");
  DistanceEstimate e;
  e.method = DistanceMethod::Quadrature;
  cplx ta = a.f[k], tb = b.f[k];
  bool same_g = a.g.M() == b.g.M() && a.g.values() == b.g.values();
  if (ta == tb && (same_g || ta == cplx{})) return e;
  e.value = detail::marginal_tv_polar(k, ta, a.g, tb, b.g, q.radial, q.angular);
  if (q.refine) {
    int nr = q.radial, na = q.angular;
    do {
      nr *= 2, na *= 2;
      double fine = detail::marginal_tv_polar(k, ta, a.g, tb, b.g, nr, na);
      e.refinement_delta = std::abs(fine - e.value);
      e.value = fine;
    } while (e.refinement_delta >= q.tol && std::max(nr, na) < q.max_nodes);
    e.budget_short = e.refinement_delta >= q.tol;
  }
  return e;
}

// ============================================================================
// Joint TV and Hellinger
// ============================================================================

struct MonteCarloBudget {
  std::size_t samples = 200000;
  std::uint64_t seed = 1;
  double target_stderr = 0.0;  // 0: no target
};

namespace detail {

inline bool is_point_mass(const ShiftDensity& g, int& node) {
  node = -1;
  for (int m = 0; m < g.M(); ++m) {
    if (g[m] == 0.0) continue;
    if (node >= 0) return false;
    node = m;
  }
  return node >= 0;
}

inline bool same_density(const ShiftDensity& a, const ShiftDensity& b) {
  return a.M() == b.M() && a.values() == b.values();
}

// Exact TV for the cases that reduce to Gaussians or to one marginal.
inline std::optional<DistanceEstimate> reducible_tv(const MixtureLaw& a, const MixtureLaw& b, const PolarQuadrature& q) {
  DistanceEstimate e;
  e.method = DistanceMethod::Quadrature;
  int K = std::max(a.f.K(), b.f.K());
  bool rest_equal = true;
  int nonzero_rest = 0, which = 0;
  for (int l = -K; l <= K; ++l) {
    if (l == 0) continue;
    if (a.f[l] != b.f[l]) rest_equal = false;
    if (a.f[l] != cplx{} || b.f[l] != cplx{}) ++nonzero_rest, which = l;
  }
  bool g_equal = same_density(a.g, b.g);
  // Frequency 0 is a Gaussian coordinate independent of the shift.
  if (rest_equal && (g_equal || nonzero_rest == 0)) {
    e.value = gaussian_tv(std::abs(a.f[0] - b.f[0]));
    return e;
  }
  int na, nb;
  if (is_point_mass(a.g, na) && is_point_mass(b.g, nb)) {
    double d2 = 0.0;
    for (int l = -K; l <= K; ++l)
      d2 += std::norm(a.f[l] * std::polar(1.0, -kTwoPi * detail::mod(1LL * l * na, a.g.M()) / a.g.M()) -
                      b.f[l] * std::polar(1.0, -kTwoPi * detail::mod(1LL * l * nb, b.g.M()) / b.g.M()));
    e.value = gaussian_tv(std::sqrt(d2));
    return e;
  }
  if (a.f[0] == b.f[0] && nonzero_rest == 1) return tv_marginal(which, a, b, q);
  return std::nullopt;
}

}  // namespace detail

inline DistanceEstimate tv_joint(const MixtureLaw& a, const MixtureLaw& b, DistanceMethod method,
                                 const MonteCarloBudget& budget = {}, const PolarQuadrature& q = {}) {
  if (a.f.K() != b.f.K()) throw std::invalid_argument("tv_joint: laws must share the cutoff K");
  if (method == DistanceMethod::Quadrature) {
    auto r = detail::reducible_tv(a, b, q);
    if (!r) throw std::invalid_argument("tv_joint: quadrature needs point-mass shifts or a single active frequency");
    return *r;
  }
  auto c = compare_laws(a, b, budget.samples, budget.seed);
  c.tv.budget_short = budget.target_stderr > 0.0 && c.tv.stderr_ > budget.target_stderr;
  return c.tv;
}

inline DistanceEstimate hellinger_joint(const MixtureLaw& a, const MixtureLaw& b, const MonteCarloBudget& budget = {}) {
  if (a.f.K() != b.f.K()) throw std::invalid_argument("hellinger_joint: laws must share the cutoff K");
  auto c = compare_laws(a, b, budget.samples, budget.seed);
  c.hellinger.budget_short = budget.target_stderr > 0.0 && c.hellinger.stderr_ > budget.target_stderr;
  return c.hellinger;
}

// ============================================================================
// Bound checks
// ============================================================================

struct ShapeBoundCheck {
  DistanceEstimate tv;
  double bound = 0.0;  // ||f - f~|| / sqrt 2
  bool violated() const { return tv.value > bound + 3.0 * tv.stderr_; }
};

inline ShapeBoundCheck check_shape_bound(const FourierSeries& f, const FourierSeries& ft, const ShiftDensity& g,
                                           const MonteCarloBudget& budget = {}) {
  int K = std::max(f.K(), ft.K());
  ShapeBoundCheck r;
  r.bound = l2_distance(f, ft) / std::sqrt(2.0);
  r.tv = tv_joint(MixtureLaw{f.resized(K), g}, MixtureLaw{ft.resized(K), g}, DistanceMethod::MonteCarlo, budget);
  return r;
}

struct ShiftBoundCheck {
  DistanceEstimate tv;
  double w1 = 0.0;
  double w1_bound = 0.0;  // sqrt2 pi ||f||_H1 W1(g, g~)
  double tv_bound = 0.0;  // sqrt2 pi ||f||_H1 d_TV(g, g~)
  double l2_bound = 0.0;  // pi ||f||_H1 ||g - g~|| / sqrt2
  bool tv_violated() const { return tv.value > w1_bound + 3.0 * tv.stderr_; }
  bool chain_violated() const { return w1_bound > tv_bound + 1e-12 || tv_bound > l2_bound + 1e-12; }
};

inline ShiftBoundCheck check_prop_g_bound(const FourierSeries& f, const ShiftDensity& g, const ShiftDensity& gt,
                                          const MonteCarloBudget& budget = {}) {
  ShiftBoundCheck r;
  double h1 = norms(f).h1;
  r.w1 = w1_distance(g, gt);
  r.w1_bound = std::sqrt(2.0) * kPi * h1 * r.w1;
  r.tv_bound = std::sqrt(2.0) * kPi * h1 * tv_distance(g, gt);
  r.l2_bound = kPi * h1 * l2_distance(g, gt) / std::sqrt(2.0);
  r.tv = tv_joint(MixtureLaw{f, g}, MixtureLaw{f, gt}, DistanceMethod::MonteCarlo, budget);
  return r;
}

}  // namespace shapeinv
