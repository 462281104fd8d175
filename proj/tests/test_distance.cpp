#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapeinv/distance.hpp"

using namespace shapeinv;

namespace {

ShiftDensity random_density(int M, Rng& rng) {
  std::vector<cplx> c(3);
  double budget = 0.45;
  for (auto& x : c) x = std::polar(budget * uniform01(rng) / 3.0, kTwoPi * uniform01(rng));
  return ShiftDensity::from_coefficients(M, c);
}

FourierSeries random_shape(int K, Rng& rng, double scale = 1.0) {
  FourierSeries f(K);
  for (int l = -K; l <= K; ++l) f.set(l, complex_normal(rng, scale));
  return f;
}

MonteCarloBudget budget(std::size_t n, std::uint64_t seed) {
  MonteCarloBudget b;
  b.samples = n;
  b.seed = seed;
  return b;
}

}  // namespace

TEST(Gaussian, ClosedFormsMatchGridIntegrals) {
  for (double d : {0.1, 0.5, 1.3}) {
    EXPECT_NEAR(gaussian_tv(d), oracle::complex_gaussian_tv_grid(d), 1e-6) << d;
    EXPECT_NEAR(gaussian_hellinger(d), oracle::complex_gaussian_hellinger_grid(d), 1e-6) << d;
  }
}

TEST(W1, Cases) {
  auto g = ShiftDensity::from_function(64, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  EXPECT_EQ(w1_distance(g, g), 0.0);
  EXPECT_NEAR(w1_distance(ShiftDensity::delta(64, 0.0), ShiftDensity::delta(64, 0.5)), 0.5, 1e-15);
}

TEST(W1, MatchesQuantileRiemannSum) {
  // smooth densities: atoms on a fine grid approximate the continuum to O(1/M)
  const int M = 8192;
  auto gf = [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); };
  auto g = ShiftDensity::from_function(M, gf), u = ShiftDensity::uniform(M);
  double oracle_w1 = oracle::w1_quantile([](double) { return 1.0; }, gf, 1000000);
  EXPECT_NEAR(w1_distance(u, g), oracle_w1, 1e-4);
}

TEST(W1, SymmetricAndTriangle) {
  Rng rng = substream(1, 0);
  for (int i = 0; i < 20; ++i) {
    auto a = random_density(64, rng), b = random_density(64, rng), c = random_density(64, rng);
    EXPECT_NEAR(w1_distance(a, b), w1_distance(b, a), 1e-14);
    EXPECT_LE(w1_distance(a, c), w1_distance(a, b) + w1_distance(b, c) + 1e-14);
  }
}

TEST(TvJoint, IdenticalLawsGiveZero) {
  Rng rng = substream(2, 0);
  MixtureLaw a{random_shape(2, rng), random_density(64, rng)};
  auto e = tv_joint(a, a, DistanceMethod::MonteCarlo, budget(2000, 1));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.stderr_, 0.0);
}

TEST(TvJoint, FrequencyZeroGapIsGaussian) {
  Rng rng = substream(3, 0);
  auto f = random_shape(2, rng);
  auto ft = f;
  ft.set(0, f[0] + cplx{0.3, 0.4});
  auto g = random_density(64, rng);
  MixtureLaw a{f, g}, b{ft, g};
  EXPECT_NEAR(tv_joint(a, b, DistanceMethod::Quadrature).value, std::erf(0.25), 1e-15);
  auto mc = tv_joint(a, b, DistanceMethod::MonteCarlo, budget(100000, 4));
  EXPECT_LE(std::abs(mc.value - std::erf(0.25)), 3.0 * mc.stderr_);
}

TEST(TvJoint, QuadratureAndMonteCarloAgree) {
  auto f = FourierSeries::from_map({{1, 1.0}});
  MixtureLaw a{f, ShiftDensity::uniform(64)}, b{f, ShiftDensity::delta(64, 0.0)};
  auto q = tv_joint(a, b, DistanceMethod::Quadrature);
  auto mc = tv_joint(a, b, DistanceMethod::MonteCarlo, budget(200000, 5));
  EXPECT_LE(std::abs(q.value - mc.value), 3.0 * mc.stderr_ + 1e-3);
}

TEST(TvJoint, QuadratureRejectsGeneralCase) {
  Rng rng = substream(4, 0);
  MixtureLaw a{random_shape(2, rng), random_density(32, rng)}, b{random_shape(2, rng), random_density(32, rng)};
  EXPECT_THROW(tv_joint(a, b, DistanceMethod::Quadrature), std::invalid_argument);
}

TEST(TvJoint, SymmetricWithinError) {
  Rng rng = substream(5, 0);
  MixtureLaw a{random_shape(1, rng), random_density(32, rng)}, b{random_shape(1, rng), random_density(32, rng)};
  auto ab = tv_joint(a, b, DistanceMethod::MonteCarlo, budget(40000, 6));
  auto ba = tv_joint(b, a, DistanceMethod::MonteCarlo, budget(40000, 7));
  EXPECT_LE(std::abs(ab.value - ba.value), 3.0 * std::hypot(ab.stderr_, ba.stderr_));
}

TEST(TvMarginal, TrivialCases) {
  auto f = FourierSeries::from_map({{1, 1.0}});
  auto g = ShiftDensity::from_function(64, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  EXPECT_EQ(tv_marginal(1, {f, g}, {f, g}).value, 0.0);
}

TEST(TvMarginal, GridRefinementIsStable) {
  auto g = ShiftDensity::from_function(64, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  PolarQuadrature q;
  q.refine = true;
  auto e = tv_marginal(1, {FourierSeries::from_map({{1, 1.0}}), g}, {FourierSeries::from_map({{1, 1.3}}), g}, q);
  EXPECT_LT(e.refinement_delta, 1e-6);
}

TEST(TvMarginal, PointMassesReduceToGaussian) {
  // with deterministic shifts the k-th coordinate is a single Gaussian
  auto a = FourierSeries::from_map({{2, 1.0}}), b = FourierSeries::from_map({{2, cplx{0.4, 0.7}}});
  auto ga = ShiftDensity::delta(64, 0.0), gb = ShiftDensity::delta(64, 0.125);
  double d = std::abs(1.0 - cplx{0.4, 0.7} * shift_phase(2, 0.125));
  PolarQuadrature q;
  q.refine = true;
  EXPECT_NEAR(tv_marginal(2, {a, ga}, {b, gb}, q).value, gaussian_tv(d), 1e-6);
}

TEST(TvMarginal, NoLargerThanJoint) {
  Rng rng = substream(6, 0);
  int violations = 0;
  for (int i = 0; i < 50; ++i) {
    MixtureLaw a{random_shape(1, rng), random_density(32, rng)}, b{random_shape(1, rng), random_density(32, rng)};
    auto m = tv_marginal(1, a, b);
    auto j = tv_joint(a, b, DistanceMethod::MonteCarlo, budget(20000, 100 + i));
    violations += m.value > j.value + 3.0 * j.stderr_;
  }
  EXPECT_EQ(violations, 0);
}

TEST(Hellinger, GaussianShiftClosedForm) {
  auto f = FourierSeries::from_map({{0, 0.0}, {1, 0.0}}), ft = FourierSeries::from_map({{0, 0.7}, {1, 0.0}});
  auto g = ShiftDensity::uniform(16);
  auto h = hellinger_joint({f, g}, {ft, g}, budget(200000, 3));
  EXPECT_LE(std::abs(h.value - gaussian_hellinger(0.7)), 3.0 * h.stderr_ + 1e-3);
  EXPECT_EQ(hellinger_joint({f, g}, {f, g}, budget(1000, 3)).value, 0.0);
}

TEST(Hellinger, DominatesTv) {
  Rng rng = substream(7, 0);
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    MixtureLaw a{random_shape(1, rng), random_density(32, rng)}, b{random_shape(1, rng), random_density(32, rng)};
    auto c = compare_laws(a, b, 4000, 200 + i);
    violations += c.tv.value > c.hellinger.value + 3.0 * (c.tv.stderr_ + c.hellinger.stderr_);
  }
  EXPECT_EQ(violations, 0);
}

TEST(ShapeBound, Cases) {
  Rng rng = substream(8, 0);
  auto f = random_shape(2, rng);
  auto g = random_density(32, rng);
  auto r = check_shape_bound(f, f, g, budget(1000, 1));
  EXPECT_EQ(r.bound, 0.0);
  EXPECT_EQ(r.tv.value, 0.0);
  auto ft = f;
  ft.set(2, f[2] + 0.2);
  EXPECT_NEAR(check_shape_bound(f, ft, g, budget(1000, 1)).bound, 0.2 / std::sqrt(2.0), 1e-15);
}

TEST(ShiftBound, Cases) {
  auto f = FourierSeries::from_map({{1, 1.0}});
  auto g = ShiftDensity::from_function(32, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  auto z = check_prop_g_bound(f, g, g, budget(1000, 1));
  EXPECT_EQ(z.tv.value, 0.0);
  EXPECT_EQ(z.w1_bound, 0.0);
  EXPECT_EQ(z.tv_bound, 0.0);
  EXPECT_EQ(z.l2_bound, 0.0);
  auto u = ShiftDensity::uniform(32);
  auto r = check_prop_g_bound(f, g, u, budget(20000, 1));
  EXPECT_NEAR(r.w1_bound, std::sqrt(2.0) * kPi * w1_distance(g, u), 1e-15);
  EXPECT_FALSE(r.tv_violated());
  EXPECT_FALSE(r.chain_violated());
}

TEST(Determinism, SameSeedSameEstimate) {
  Rng rng = substream(9, 0);
  MixtureLaw a{random_shape(2, rng), random_density(32, rng)}, b{random_shape(2, rng), random_density(32, rng)};
  unsigned saved = default_workers();
  auto x = tv_joint(a, b, DistanceMethod::MonteCarlo, budget(5000, 77));
  default_workers() = 3;
  auto y = tv_joint(a, b, DistanceMethod::MonteCarlo, budget(5000, 77));
  default_workers() = saved;
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.stderr_, y.stderr_);
}
