#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapeinv/identifiability.hpp"

using namespace shapeinv;

TEST(Bessel, SpecialValues) {
  EXPECT_NEAR(bessel_A(0, 0.0), kTwoPi, 1e-15);
  EXPECT_EQ(bessel_A(3, 0.0), 0.0);
  EXPECT_NEAR(bessel_A(1, 1.0), 3.5509994, 1e-6);
  EXPECT_THROW(bessel_A(0, 701.0), std::overflow_error);
}

TEST(Bessel, SeriesMatchesBoost) {
  for (int n = 0; n <= 20; ++n)
    for (double a : {0.01, 0.5, 1.0, 3.0, 7.5, 10.0, 50.0, 300.0}) {
      double ref = oracle::bessel_A(n, a);
      EXPECT_NEAR(bessel_A(n, a) / ref, 1.0, 1e-12) << n << " " << a;
    }
}

TEST(Bessel, SeriesMatchesContourQuadrature) {
  for (int n = 0; n <= 20; ++n)
    for (double a : {0.1, 1.0, 2.5, 5.0, 10.0}) {
      double q = bessel_A_quadrature(n, a);
      EXPECT_NEAR(bessel_A(n, a) / q, 1.0, 1e-10) << n << " " << a;
    }
}

TEST(Bessel, NthDerivativeAtZero) {
  for (int n = 0; n <= 12; ++n) {
    double d = std::tgamma(n + 1.0) * bessel_A_series_coefficient(n, n);
    EXPECT_NEAR(d / (std::pow(2.0, 1.0 - n) * kPi), 1.0, 1e-14) << n;
    for (int j = 0; j < n; ++j) EXPECT_EQ(bessel_A_series_coefficient(n, j), 0.0);
  }
}

TEST(Bessel, SmallArgumentEquivalent) {
  for (int n : {4, 9, 16, 25}) {
    double amax = std::sqrt(static_cast<double>(n));
    for (double a : {0.1 * amax, 0.5 * amax, amax}) {
      auto r = bessel_equivalents_check(n, a);
      EXPECT_TRUE(r.small_regime);
      EXPECT_LE(std::abs(r.ratio_small - 1.0), 2.0 * a / n) << n << " " << a;
    }
  }
  EXPECT_LE(std::abs(bessel_equivalents_check(9, 1.0).ratio_small - 1.0), 0.23);
}

TEST(Bessel, LargeArgumentEquivalent) {
  auto r = bessel_equivalents_check(1, 16.0);
  EXPECT_TRUE(r.large_regime);
  EXPECT_GE(r.ratio_large, 0.5);
  double prev = 0.0;
  for (double a : {16.0, 50.0, 150.0, 400.0, 700.0}) {
    double v = bessel_equivalents_check(1, a).ratio_large;
    EXPECT_GT(v, prev);
    EXPECT_LT(v, 1.0);
    prev = v;
  }
  EXPECT_GT(prev, 0.999);
}

TEST(InIntegral, PositiveOverGrid) {
  for (int n = 0; n <= 30; ++n)
    for (double t : {0.5, 1.0, 2.0}) EXPECT_GT(lower_bound_integral_In(n, t), 0.0) << n << " " << t;
}

TEST(InIntegral, MatchesRiemannSum) {
  double ref = oracle::In_riemann(0, 1.0, 40.0, 1000000);
  EXPECT_NEAR(lower_bound_integral_In(0, 1.0) / ref, 1.0, 1e-8);
  double ref5 = oracle::In_riemann(5, 2.0, 40.0, 1000000);
  EXPECT_NEAR(lower_bound_integral_In(5, 2.0) / ref5, 1.0, 1e-8);
}

TEST(InIntegral, SuperExponentialDecayInN) {
  std::vector<double> x, y;
  for (int n = 2; n <= 30; ++n) {
    x.push_back(n * std::log(n));
    y.push_back(std::log(lower_bound_integral_In(n, 1.0)));
  }
  EXPECT_LT(fit_line(x, y).slope, 0.0);
}

TEST(QuadraticForm, Cases) {
  auto g = ShiftDensity::from_function(64, [](double t) { return 1.0 + 0.3 * std::sin(kTwoPi * t); });
  EXPECT_EQ(identifiability_quadratic_form(1.0, g, g), 0.0);
  auto gt = ShiftDensity::from_function(64, [](double t) { return 1.0 + 0.3 * std::sin(kTwoPi * t) + 0.2 * std::cos(kTwoPi * t); });
  double expect = 2.0 * 0.01 * lower_bound_integral_In(1, 1.0) / (8.0 * kPi * kPi);
  EXPECT_NEAR(identifiability_quadratic_form(1.0, g, gt) / expect, 1.0, 1e-10);
}

TEST(QuadraticForm, BelowMeasuredMarginalTv) {
  Rng rng = substream(1, 0);
  int violations = 0;
  for (int i = 0; i < 50; ++i) {
    auto mk = [&] {
      std::vector<cplx> c(3);
      for (auto& x : c) x = std::polar(0.15 * uniform01(rng), kTwoPi * uniform01(rng));
      return ShiftDensity::from_coefficients(64, c);
    };
    auto g = mk(), gt = mk();
    double t = 0.5 + 1.5 * uniform01(rng);
    double lb = identifiability_quadratic_form(t, g, gt);
    double tv = tv_marginal(1, first_coefficient_law(t, g), first_coefficient_law(t, gt)).value;
    violations += lb > tv;
  }
  EXPECT_EQ(violations, 0);
}

TEST(QuadraticForm, UniformShiftsArePhaseInvariant) {
  auto u = ShiftDensity::uniform(64);
  for (double phase : {0.3, 1.1, 2.7}) {
    double tv = tv_marginal(1, first_coefficient_law(1.0, u), first_coefficient_law(std::polar(1.0, phase), u)).value;
    EXPECT_LT(tv, 1e-10);
  }
}

TEST(DiskBound, Cases) {
  auto g = ShiftDensity::from_function(64, [](double t) { return 1.0 + 0.4 * std::cos(kTwoPi * t); });
  EXPECT_EQ(theta1_disk_floor(1.0, 1.0), 0.0);
  EXPECT_THROW(theta1_disk_lower_bound(1.0, 1.0, g, g), std::invalid_argument);
  EXPECT_THROW(theta1_disk_lower_bound(1.6, 1.0, g, g), std::invalid_argument);
  std::vector<double> x, y;
  for (double eta : {0.05, 0.1, 0.2}) {
    auto r = theta1_disk_lower_bound(1.0 + eta, 1.0, g, g);
    EXPECT_TRUE(r.holds());
    x.push_back(std::log(eta));
    y.push_back(std::log(r.measured_tv));
  }
  EXPECT_LE(fit_line(x, y).slope, 3.0);
}

TEST(DiskBound, FloorBelowMeasuredOnGrid) {
  int violations = 0;
  for (double t0 : {0.6, 0.9, 1.2, 1.6, 2.0})
    for (double amp : {0.0, 0.2, 0.4, 0.6, 0.8}) {
      auto g = ShiftDensity::from_function(64, [&](double t) { return 1.0 + amp * std::cos(kTwoPi * t); });
      auto r = theta1_disk_lower_bound(t0 * 1.2, t0, g, g);
      violations += !r.holds();
    }
  EXPECT_EQ(violations, 0);
}

TEST(PhaseBound, Cases) {
  auto g = ShiftDensity::from_function(256, [](double t) { return 1.0 + 0.5 * std::cos(kTwoPi * t); });
  auto same = thetak_phase_lower_bound(1, 1.0, 1.0, g);
  EXPECT_EQ(same.measured_tv, 0.0);
  EXPECT_EQ(same.linear_floor, 0.0);
  auto u = ShiftDensity::uniform(256);
  auto uni = thetak_phase_lower_bound(1, std::polar(1.0, 1.0), 1.0, u);
  EXPECT_FALSE(uni.identifiable);
  EXPECT_EQ(uni.linear_floor, 0.0);
  EXPECT_LT(uni.measured_tv, 1e-10);
  auto r = thetak_phase_lower_bound(1, std::polar(1.0, kPi / 4.0), 1.0, g);
  EXPECT_TRUE(r.holds());
  EXPECT_THROW(thetak_phase_lower_bound(1, 2.0, 1.0, g), std::invalid_argument);
}

TEST(PhaseBound, ShippedConstantIsHalfTheCalibration) {
  EXPECT_NEAR(kPhaseFloorConstant, reference_phase_constant() / 2.0, 1e-4);
}
