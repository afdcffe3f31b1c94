#include <uam/estimator.hpp>

#include <gtest/gtest.h>

using namespace uam;

namespace {

struct Excitation {
  double x, xd;
};

// Penetration and rate of a sinusoidal press against a surface at 0.
Excitation press(double t) {
  const double w1 = 2.0 * kPi * 0.5, w2 = 2.0 * kPi * 1.7;
  return {0.02 + 0.008 * std::sin(w1 * t) + 0.004 * std::sin(w2 * t),
          0.008 * w1 * std::cos(w1 * t) + 0.004 * w2 * std::cos(w2 * t)};
}

}  // namespace

TEST(Rlse, InitialIsBoxMidpoint) {
  const EnvEstimate e = EnvEstimate::initial(EnvBounds{});
  EXPECT_DOUBLE_EQ(e.k_hat, 275.0);
  EXPECT_DOUBLE_EQ(e.b_hat, 0.55);
  EXPECT_EQ(e.P, 100.0 * Mat2::Identity());
}

TEST(Rlse, ExactFitLeavesEstimateUnchanged) {
  const RlseParams prm;
  EnvEstimate e{200.0, 0.5, 10.0 * Mat2::Identity()};
  const EnvEstimate n = rlse_update(e, 0.01, 0.1, -200.0 * 0.01 - 0.5 * 0.1, 0.0, prm, 2e-3);
  EXPECT_NEAR(n.k_hat, 200.0, 1e-12);
  EXPECT_NEAR(n.b_hat, 0.5, 1e-12);
}

TEST(Rlse, ConvergesOnPersistentExcitation) {
  const RlseParams prm;
  EnvEstimate e = EnvEstimate::initial(prm.bounds);
  const double dt = 2e-3;
  double max_eig = 0.0;
  for (int i = 0; i < 5000; ++i) {
    const double t = i * dt;
    const Excitation ex = press(t);
    e = rlse_update(e, ex.x, ex.xd, -200.0 * ex.x - 0.5 * ex.xd, 0.0, prm, dt);
    max_eig = std::max(max_eig, max_eigenvalue(e.P));
  }
  EXPECT_NEAR(e.k_hat, 200.0, 2.0);
  EXPECT_NEAR(e.b_hat, 0.5, 0.025);
  EXPECT_LE(max_eig, prm.rho_max);
}

TEST(Rlse, EstimatesStayInBounds) {
  const RlseParams prm;
  EnvEstimate e = EnvEstimate::initial(prm.bounds);
  for (int i = 0; i < 2000; ++i) {
    e = rlse_update(e, 0.01, 0.0, -1e4, 0.0, prm, 2e-3);
    ASSERT_GE(e.k_hat, prm.bounds.k_min);
    ASSERT_LE(e.k_hat, prm.bounds.k_max);
    ASSERT_GE(e.b_hat, prm.bounds.b_min);
    ASSERT_LE(e.b_hat, prm.bounds.b_max);
  }
  EXPECT_EQ(e.k_hat, prm.bounds.k_max);
}

TEST(Rlse, CovarianceFreezesWithoutExcitation) {
  RlseParams prm;
  EnvEstimate e = EnvEstimate::initial(prm.bounds);
  for (int i = 0; i < 20000; ++i) {
    e = rlse_update(e, 0.0, 0.0, 0.0, 0.0, prm, 2e-3);
    ASSERT_LE(max_eigenvalue(e.P), prm.rho_max);
  }
  EXPECT_GT(max_eigenvalue(e.P), 0.9 * prm.rho_max);
}

TEST(Rlse, RejectsNonFinite) {
  const RlseParams prm;
  const EnvEstimate e;
  EXPECT_THROW(rlse_update(e, std::nan(""), 0, 0, 0, prm, 1e-3), NonFiniteInput);
  EXPECT_THROW(rlse_update(e, 0, 0, 0, 0, prm, 0.0), std::invalid_argument);
}

TEST(ContactDetector, DebouncesAndLatchesFirstSample) {
  ContactDetector d(0.1, 3);
  EXPECT_FALSE(d.update(-0.05, 0.0));
  EXPECT_FALSE(d.update(-0.5, 1.0));
  EXPECT_FALSE(d.update(-0.5, 1.1));
  EXPECT_TRUE(d.update(-0.5, 1.2));
  EXPECT_DOUBLE_EQ(d.latched_surface(), 1.0);
  // Single-sample dropout does not break contact.
  EXPECT_TRUE(d.update(0.0, 1.2));
  EXPECT_TRUE(d.update(-0.5, 1.2));
  EXPECT_TRUE(d.update(0.0, 1.2));
  EXPECT_TRUE(d.update(0.0, 1.2));
  EXPECT_FALSE(d.update(0.0, 1.2));
}

TEST(ContactDetector, InterruptedRunRestarts) {
  ContactDetector d(0.1, 3);
  d.update(-1.0, 0.5);
  d.update(-1.0, 0.6);
  d.update(0.0, 0.7);
  d.update(-1.0, 0.8);
  d.update(-1.0, 0.9);
  EXPECT_TRUE(d.update(-1.0, 1.0));
  EXPECT_DOUBLE_EQ(d.latched_surface(), 0.8);
}
