#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shapeinv/fano.hpp"

using namespace shapeinv;

TEST(FanoNet, Construction) {
  auto net = build_net(8, 1.0, 1.6, 2.5, 2.0);
  ASSERT_EQ(net.f.size(), 8u);
  EXPECT_EQ(net.d(), 2);
  for (int j = 0; j < 8; ++j) {
    EXPECT_EQ(net.f[j][1], cplx(1.0, 0.0));
    EXPECT_NEAR(std::abs(net.f[j][8]), 1.0 / 8.0, 1e-15);
    EXPECT_NEAR(net.g[j].integral(), 1.0, 1e-12);
    for (double v : net.g[j].values()) EXPECT_GE(v, 0.0);
    for (int q = 1; q <= net.K_g; ++q) {
      EXPECT_NEAR(std::abs(net.g[j].coeff(q)), net.a * std::pow(q, -2.5), 1e-13) << j << " " << q;
      EXPECT_NEAR(std::abs(net.g[j].coeff(q) - net.coeffs[j][q - 1]), 0.0, 1e-13);
    }
  }
  for (int q = 1; q <= net.K_g; ++q) EXPECT_NEAR(std::arg(net.coeffs[0][q - 1]), 0.0, 1e-15);
  // Sobolev-nu norm of g_1 by direct sum
  double s = 0.0;
  for (int q = 1; q <= net.K_g; ++q) s += 2.0 * std::pow(q, 3.2) * std::norm(net.coeffs[0][q - 1]);
  EXPECT_LE(std::sqrt(s), 2.0);
}

TEST(FanoNet, PhasesOnConstrainedFrequencies) {
  // q = m + l p with |m| <= p/4 carries phase exp(-i 2 pi l (j-1) / p)
  const int p = 8;
  auto net = build_net(p, 1.0, 1.6, 2.5, 2.0);
  for (int j = 0; j < p; ++j)
    for (int l = 0; l <= 3; ++l)
      for (int m = -p / 4; m <= p / 4; ++m) {
        int q = m + l * p;
        if (q < 1 || q > net.K_g) continue;
        EXPECT_EQ(fano_block_index(q, p), l);
        cplx expect = net.coeffs[0][q - 1] * std::polar(1.0, -kTwoPi * l * j / p);
        EXPECT_NEAR(std::abs(net.coeffs[j][q - 1] - expect), 0.0, 1e-13);
      }
}

TEST(FanoNet, Preconditions) {
  EXPECT_THROW(build_net(6, 1.0, 1.6, 2.5, 2.0), std::invalid_argument);
  EXPECT_THROW(build_net(8, 1.0, 1.6, 2.0, 2.0), std::invalid_argument);
}

TEST(Separation, FormulasAgainstBruteForce) {
  auto net = build_net(4, 1.0, 1.6, 2.5, 2.0);
  EXPECT_NEAR(std::pow(l2_distance(net.f[0], net.f[1]), 2), 0.125, 1e-15);
  for (int p : {4, 8, 12}) {
    auto n = build_net(p, 1.0, 1.6, 2.5, 2.0);
    auto r = verify_separation(n);
    EXPECT_TRUE(r.f_ok);
    EXPECT_TRUE(r.g_ok);
    for (int j = 0; j < p; ++j)
      for (int jp = j + 1; jp < p; ++jp) {
        auto fj = [&](double x) {
          return std::polar(1.0, kTwoPi * x) + n.f[j][p] * std::polar(1.0, kTwoPi * p * x);
        };
        auto fk = [&](double x) {
          return std::polar(1.0, kTwoPi * x) + n.f[jp][p] * std::polar(1.0, kTwoPi * p * x);
        };
        EXPECT_NEAR(oracle::l2_sq_grid(fj, fk, 4 * p), fano_f_separation(p, 1.0, jp - j), 1e-12);
      }
  }
}

TEST(Closeness, SelfDistanceZeroAndDecay) {
  auto n4 = build_net(4, 1.0, 1.6, 2.5, 2.0), n8 = build_net(8, 1.0, 1.6, 2.5, 2.0);
  auto c4 = verify_closeness(n4, 20000, 1), c8 = verify_closeness(n8, 20000, 1);
  EXPECT_EQ(c4.tv[0].value, 0.0);
  EXPECT_LT(c8.max_tv, 0.05);
  EXPECT_LT(c8.max_tv, c4.max_tv);
}

TEST(Closeness, SymmetricWithinError) {
  auto net = build_net(4, 1.0, 1.6, 2.5, 2.0);
  auto a = compare_laws(fano_law(net, 0, net.g[0]), fano_law(net, 2, net.g[2]), 20000, 5).tv;
  auto b = compare_laws(fano_law(net, 2, net.g[2]), fano_law(net, 0, net.g[0]), 20000, 6).tv;
  EXPECT_LE(std::abs(a.value - b.value), 3.0 * std::hypot(a.stderr_, b.stderr_));
}

TEST(FanoBound, Arithmetic) {
  EXPECT_NEAR(fano_bound(1.0, 0.0, std::exp(2.0)), 0.5 * (1.0 - std::log(2.0) / 2.0), 1e-15);
  EXPECT_NEAR(fano_bound(1.0, 0.0, std::exp(2.0)), 0.3267, 1e-4);
  EXPECT_EQ(fano_bound(1.0, 3.0, 8.0), 0.0);
  EXPECT_EQ(fano_bound(0.0, 0.1, 100.0), 0.0);
  EXPECT_NEAR(fano_bound(0.2, 0.5, 60.0), 0.1 * (1.0 - (0.5 + std::log(2.0)) / std::log(60.0)), 1e-15);
  EXPECT_THROW(fano_bound(1.0, 0.0, 1.5), std::invalid_argument);
}

TEST(Pipeline, NetSizeAndSeparationScaling) {
  EXPECT_EQ(fano_net_size(100.0), 60);
  int p1 = fano_net_size(100.0), p2 = fano_net_size(200.0);
  EXPECT_GT(p2, p1);
  // adjacent f-separation 4 p^{-2s} sin^2(pi/p) ~ 4 pi^2 p^{-2s-2}
  double a1 = fano_f_separation(p1, 1.0, 1), a2 = fano_f_separation(p2, 1.0, 1);
  EXPECT_LT(a2, a1);
  EXPECT_NEAR(a1 / (4.0 * kPi * kPi * std::pow(p1, -4.0)), 1.0, 5e-3);
}

TEST(Pipeline, RunsEndToEnd) {
  auto r = lower_bound_pipeline(100.0, 1.0, 1.6, 2.5, 2.0, 12.5, 2000, 1);
  EXPECT_EQ(r.p, 60);
  EXPECT_GE(r.bound_f_measured, 0.0);
  EXPECT_GE(r.bound_f_nominal, 0.0);
  EXPECT_GE(r.bound_g_nominal, 0.0);
  EXPECT_NEAR(r.rate_g_statement, std::pow(std::log(100.0), -4.2), 1e-15);
  EXPECT_NEAR(r.rate_g_proof, std::pow(std::log(100.0), -5.2), 1e-15);
}
