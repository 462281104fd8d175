#include <gtest/gtest.h>

#include "shapeinv/posterior.hpp"

using namespace shapeinv;

namespace {

Dataset scenario(int n, int K, std::uint64_t seed) {
  auto f0 = FourierSeries::from_map({{1, 1.2}, {2, 0.6}}, true);
  auto g0 = ShiftDensity::from_function(256, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t) + 0.2 * std::sin(2.0 * kTwoPi * t); });
  return generate_dataset(f0, g0, n, K, seed);
}

PosteriorPrior small_prior(int M = 64, int N_kl = 64) {
  PosteriorPrior p;
  p.sieve.n = 0.0;
  p.g.M = M;
  p.g.N_kl = N_kl;
  return p;
}

}  // namespace

TEST(Chain, RejectsEmptyDataset) {
  Dataset d;
  d.K = 2;
  EXPECT_THROW(PosteriorSampler(d, small_prior(), ChainConfig{}), std::invalid_argument);
}

TEST(Chain, SeededInitIsReproducibleAndValid) {
  auto d = scenario(10, 3, 1);
  PosteriorSampler a(d, small_prior(), ChainConfig{}), b(d, small_prior(), ChainConfig{});
  Rng ra = substream(5, 0), rb = substream(5, 0);
  a.init(ra);
  b.init(rb);
  const auto& s = a.state();
  EXPECT_EQ(s.level, b.state().level);
  EXPECT_EQ(s.f.data(), b.state().f.data());
  EXPECT_EQ(s.g.values(), b.state().g.values());
  EXPECT_GT(s.f[1].real(), 0.0);
  EXPECT_EQ(s.f[1].imag(), 0.0);
  for (int l = s.level + 1; l <= s.f.K(); ++l) {
    EXPECT_EQ(s.f[l], cplx{});
    EXPECT_EQ(s.f[-l], cplx{});
  }
  EXPECT_EQ(normalize_to_density(s.gp).values(), s.g.values());
  EXPECT_TRUE(small_prior().g.in_ball(s.g));
  EXPECT_TRUE(std::isfinite(s.log_post));
  EXPECT_NEAR(a.recompute_log_post(), s.log_post, 1e-8);
}

TEST(Chain, NanDataTripsGuard) {
  auto d = scenario(5, 2, 1);
  d.curves[0].y[1] = cplx{std::nan(""), 0.0};
  PosteriorSampler s(d, small_prior(), ChainConfig{});
  Rng rng = substream(1, 0);
  EXPECT_THROW(s.init(rng), NumericError);
}

TEST(Chain, ZeroScaleKeepsCoefficients) {
  auto d = scenario(10, 3, 2);
  ChainConfig c;
  c.birth_death = false;
  PosteriorSampler s(d, small_prior(), c);
  Rng rng = substream(2, 0);
  s.init(rng);
  auto before = s.state().f.data();
  for (int i = 0; i < 20; ++i) s.step_f(0.0, rng);
  EXPECT_EQ(s.state().f.data(), before);
}

TEST(Chain, CacheCoherenceAndAcceptanceRates) {
  auto d = scenario(30, 3, 3);
  ChainConfig c;
  c.debug_check = true;
  c.sweeps = 400;
  c.burn_frac = 0.25;
  c.hellinger_every = 0;
  auto r = run_chain(d, small_prior(), c);
  EXPECT_GT(r.summary.coherence_checks, 100);
  EXPECT_LE(r.summary.max_coherence_error, 1e-8);
  for (auto* m : {&r.summary.theta1, &r.summary.coef, &r.summary.pcn}) {
    EXPECT_GT(m->rate(), 0.0);
    EXPECT_LT(m->rate(), 1.0);
  }
}

TEST(Chain, PriorRecoveryOfShape) {
  auto d = scenario(5, 6, 4);
  PosteriorPrior p = small_prior();
  p.sieve.n = 100.0;
  p.sieve.c_lambda = 0.1;
  ChainConfig c;
  c.prior_only = true;
  c.update_g = false;
  c.f_step = std::sqrt(p.sieve.xi2());
  PosteriorSampler s(d, p, c);
  Rng rng = substream(4, 0);
  s.init(rng);
  const int cap = s.level_cap();
  ASSERT_EQ(cap, 6);
  std::vector<double> counts(cap, 0.0), re2, t0sq, t1sq;
  for (int it = 0; it < 200000; ++it) {
    s.sweep(rng);
    if (it % 10 != 0) continue;
    const auto& st = s.state();
    counts[st.level - 1] += 1.0;
    t0sq.push_back(std::norm(st.f[0]));
    t1sq.push_back(st.f[1].real() * st.f[1].real());
    if (st.level >= 2) re2.push_back(st.f[2].real());
  }
  auto w = p.sieve.level_weights(cap);
  EXPECT_GT(chi_square_test(counts, w).p_value, 0.01);
  double xi2 = p.sieve.xi2();
  EXPECT_NEAR(variance(re2) / (xi2 / 2.0), 1.0, 0.05);
  EXPECT_NEAR(mean(t0sq) / xi2, 1.0, 0.05);
  EXPECT_NEAR(mean(t1sq) / xi2, 1.0, 0.05);
}

TEST(Chain, FullPcnStepDrawsFromPrior) {
  auto d = scenario(5, 2, 5);
  ChainConfig c;
  c.prior_only = true;
  PosteriorPrior p = small_prior();
  PosteriorSampler s(d, p, c);
  Rng rng = substream(5, 0);
  s.init(rng);
  std::vector<double> x, y;
  long rejected_before = 0;
  for (int i = 0; i < 4000; ++i) {
    double prev = s.state().u[0];
    rejected_before = s.state().ball_rejections;
    s.step_g(1.0, rng);
    ASSERT_TRUE(p.g.in_ball(s.state().g));
    if (s.state().ball_rejections == rejected_before) {
      x.push_back(prev);
      y.push_back(s.state().u[0]);
    }
  }
  // every in-ball proposal is accepted and independent of the previous state
  EXPECT_EQ(s.state().pcn.accepted + s.state().ball_rejections, s.state().pcn.proposed);
  double mx = mean(x), my = mean(y), sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my);
  double corr = sxy / (x.size() * std::sqrt(variance(x) * variance(y)));
  EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(x.size())));
}

TEST(Chain, PcnPreservesPriorMeanDensity) {
  auto d = scenario(5, 2, 6);
  ChainConfig c;
  c.prior_only = true;
  PosteriorPrior p = small_prior();
  PosteriorSampler s(d, p, c);
  Rng rng = substream(6, 0);
  s.init(rng);
  // w(0) = Z_1 for nu = 1.6, so g(0) varies most; compare its mean and the mean of g(1/4)
  std::vector<double> chain0, chain1, direct0, direct1;
  for (int i = 0; i < 40000; ++i) {
    s.step_g(0.5, rng);
    ASSERT_TRUE(p.g.in_ball(s.state().g));
    if (i % 4 == 0) {
      chain0.push_back(s.state().g[0]);
      chain1.push_back(s.state().g[16]);
    }
  }
  Rng r2 = substream(7, 0);
  for (int i = 0; i < 10000; ++i) {
    auto g = sample_g_prior(p.g, r2).g;
    direct0.push_back(g[0]);
    direct1.push_back(g[16]);
  }
  auto se = [](const std::vector<double>& v) { return std::sqrt(variance(v) / v.size()); };
  // batch-means error for the chain
  auto bse = [](const std::vector<double>& v) {
    std::vector<double> b;
    std::size_t len = v.size() / 20;
    for (int k = 0; k < 20; ++k) b.push_back(mean(std::vector<double>(v.begin() + k * len, v.begin() + (k + 1) * len)));
    return std::sqrt(variance(b) / 20.0);
  };
  EXPECT_LE(std::abs(mean(chain0) - mean(direct0)), 4.0 * std::hypot(bse(chain0), se(direct0)));
  EXPECT_LE(std::abs(mean(chain1) - mean(direct1)), 4.0 * std::hypot(bse(chain1), se(direct1)));
}

TEST(Chain, StationaryForSingleCoefficient) {
  // only theta_1 moves: compare the chain's histogram with the normalized
  // prior x likelihood evaluated on a grid
  auto d = scenario(5, 1, 7);
  PosteriorPrior p = small_prior();
  p.sieve.K_max = 1;
  ChainConfig c;
  c.update_g = false;
  c.birth_death = false;
  c.update_freqs = {1};
  c.f_step = 0.4;
  PosteriorSampler s(d, p, c);
  Rng rng = substream(8, 0);
  s.init(rng);
  FourierSeries f = s.state().f;
  ShiftDensity g = s.state().g;
  const double xi2 = s.xi2();
  const int bins = 40;
  const double hi = 3.0;
  std::vector<double> target(bins, 0.0);
  const int sub = 50;
  for (int b = 0; b < bins; ++b)
    for (int k = 0; k < sub; ++k) {
      double t = (b + (k + 0.5) / sub) * hi / bins;
      auto ft = f;
      ft.set(1, t);
      target[b] += std::exp(log_sieve_coefficient_density(1, t, xi2) + loglik_dataset(d, ft, g, p.g.M));
    }
  double z = 0.0;
  for (double v : target) z += v;
  for (double& v : target) v /= z;
  std::vector<double> hist(bins, 0.0);
  const int steps = 1000000;
  int inside = 0;
  for (int i = 0; i < steps; ++i) {
    s.step_f(rng);
    double t = s.state().f[1].real();
    if (t < hi) {
      hist[static_cast<int>(t / hi * bins)] += 1.0;
      ++inside;
    }
  }
  double tv = 0.0;
  for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(hist[b] / inside - target[b]);
  EXPECT_GT(inside, steps * 0.99);
  EXPECT_LT(tv, 0.02);
}

TEST(Summary, MassCurvesMonotone) {
  auto d = scenario(20, 3, 9);
  ChainConfig c;
  c.sweeps = 200;
  c.hellinger_budget = 200;
  auto r = run_chain(d, small_prior(), c);
  ASSERT_FALSE(r.summary.mass.empty());
  for (auto& m : r.summary.mass)
    for (std::size_t i = 1; i < m.mass.size(); ++i) EXPECT_GE(m.mass[i], m.mass[i - 1]);
  for (auto& s : r.samples) {
    EXPECT_GE(s.dist_f, 0.0);
    EXPECT_GE(s.dist_g, 0.0);
    EXPECT_GE(s.dist_theta1, 0.0);
    EXPECT_GE(s.hellinger, 0.0);
  }
}

TEST(Summary, DeterministicUnderSeed) {
  auto d = scenario(15, 2, 10);
  ChainConfig c;
  c.sweeps = 120;
  c.hellinger_budget = 100;
  auto a = run_chain(d, small_prior(), c), b = run_chain(d, small_prior(), c);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].theta1, b.samples[i].theta1);
    EXPECT_EQ(a.samples[i].hellinger, b.samples[i].hellinger);
  }
}

TEST(Cutoffs, FormulaAndParseval) {
  double n = 1e4, nu = 1.6, s = 1.0;
  EXPECT_NEAR(shape_cutoff(n, s, nu), std::pow(std::log(1e4), 3.2 / 6.2), 1e-14);
  double eps = contraction_eps(n, s, nu);
  EXPECT_NEAR(eps, std::pow(n, -0.25), 1e-15);
  double k = shift_cutoff(eps, nu);
  EXPECT_NEAR((k + 2.0 * nu) * std::log(k), std::log(1.0 / eps) / 3.0, 1e-10);

  // g0 bandlimited below k_n: samples equal to g0 plus a first harmonic
  const int M = 64;
  auto g0 = ShiftDensity::from_function(M, [](double t) { return 1.0 + 0.3 * std::cos(kTwoPi * t); });
  std::vector<std::vector<double>> gs;
  for (double a : {0.05, -0.1, 0.2}) gs.push_back(ShiftDensity::from_function(M, [&](double t) { return 1.0 + (0.3 + a) * std::cos(kTwoPi * t); }).values());
  auto f0 = FourierSeries::from_map({{1, 1.0}, {3, 0.2}}, true);
  std::vector<FourierSeries> fs = {FourierSeries::from_map({{1, 0.9}, {3, 0.1}, {4, 0.05}}, true)};
  auto r = cutoff_diagnostics(1e4, s, nu, 2.5, fs, f0, gs, g0.values());
  EXPECT_EQ(r.k_split, static_cast<int>(std::floor(shape_cutoff(1e4, s, nu))));
  EXPECT_NEAR(r.g_median.tail, 0.0, 1e-28);
  EXPECT_LE(r.max_parseval_error, 1e-12);
  EXPECT_NEAR(r.exponent_statement, 2.0 * 2.0 * 1.6 / 6.2, 1e-15);
  EXPECT_NEAR(r.exponent_proof, 4.0 * 1.6 / 8.0, 1e-15);
}
