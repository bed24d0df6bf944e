#include <gtest/gtest.h>

#include "specrecon/stability.hpp"

using namespace specrecon;

namespace {

Potential pot(std::function<cplx(double)> f, int M = 2048) { return Potential::sample(Grid(kPi, M), f); }

const Potential& one() {
  static const Potential q = pot([](double) { return cplx(1.0); });
  return q;
}

void expect_finite_nonnegative(const PerturbationReport& r) {
  for (double v : {r.delta, r.Xi, r.q_err, r.xi_l2, r.M_gamma0_err, r.C_est, r.mean_diff}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
  }
}

}  // namespace

TEST(PerturbCauchy, DeterministicAndScaled) {
  const auto cd = cauchy_data_of(pot([](double x) { return cplx(std::cos(x)); }));
  const auto a = perturb_cauchy(cd, {1e-3, 8}, 7);
  const auto b = perturb_cauchy(cd, {1e-3, 8}, 7);
  const auto c = perturb_cauchy(cd, {1e-3, 8}, 8);
  EXPECT_EQ(a.K, b.K);
  EXPECT_EQ(a.N, b.N);
  EXPECT_NE(a.K, c.K);
  EXPECT_EQ(a.omega, cd.omega);
  const auto w = quadrature_weights(cd.grid);
  EXPECT_NEAR(l2_distance(w, a.K, cd.K), 1e-3, 1e-12);
  EXPECT_NEAR(l2_distance(w, a.N, cd.N), 1e-3, 1e-12);
  EXPECT_NEAR(cauchy_distance(a, cd), 1e-3, 1e-12);
  cplx dk = 0.0;
  for (int k = 0; k < cd.grid.nodes(); ++k) dk += w[k] * (a.K[k] - cd.K[k]);
  EXPECT_LE(std::abs(dk), 1e-12);
  EXPECT_THROW(perturb_cauchy(cd, {-1.0, 8}, 1), Error);
}

TEST(PerturbAndMeasure, ZeroAmplitudeReproducesPotential) {
  const auto reps = perturb_and_measure(one(), {0.0, 8}, 1, 1);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_TRUE(reps[0].ok) << reps[0].error;
  EXPECT_EQ(reps[0].Xi, 0.0);
  EXPECT_LE(reps[0].q_err, 1e-3);
  EXPECT_LE(reps[0].xi_l2, 1e-8);
  EXPECT_LE(reps[0].M_gamma0_err, 1e-8);
}

TEST(PerturbAndMeasure, ConstantStableAcrossTrials) {
  const auto reps = perturb_and_measure(one(), {1e-3, 8}, 20, 100);
  ASSERT_EQ(reps.size(), 20u);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : reps) {
    ASSERT_TRUE(r.ok) << r.error;
    expect_finite_nonnegative(r);
    EXPECT_EQ(r.seed, 100u + static_cast<unsigned>(r.trial));
    EXPECT_NEAR(r.Xi, 1e-3, 1e-12);
    EXPECT_LE(r.mean_diff, 1e-10);
    lo = std::min(lo, r.C_est);
    hi = std::max(hi, r.C_est);
  }
  EXPECT_LE(hi / lo, 3.0);
}

TEST(StabilitySweep, LinearScalingAndStableRatios) {
  const auto res = stability_sweep(one(), {1e-4, 1e-3, 1e-2}, 8, 3, 12345);
  ASSERT_EQ(res.levels.size(), 3u);
  ASSERT_EQ(res.reports.size(), 9u);
  for (const auto& l : res.levels) EXPECT_EQ(l.failures, 0);
  EXPECT_GE(res.slope, 0.8);
  EXPECT_LE(res.slope, 1.2);
  EXPECT_LE(res.ratio_variation_gamma0, 3.0);
  EXPECT_LE(res.ratio_variation_xi, 3.0);
  EXPECT_EQ(res.reports[3].seed, 13345u);
}

TEST(StabilitySweep, SingleLevelHasNoSlope) {
  StabilityOptions opt;
  opt.count = 10;
  const auto res = stability_sweep(one(), {1e-3}, 4, 1, 1, opt);
  EXPECT_TRUE(std::isnan(res.slope));
  EXPECT_TRUE(std::isnan(res.ratio_variation_gamma0));
}

TEST(Lemma53Check, IdenticalPotentials) {
  const auto q = pot([](double x) { return cplx(std::cos(x)); });
  const auto r = lemma53_check(q, q);
  EXPECT_EQ(r.Xi, 0.0);
  EXPECT_EQ(r.q_err, 0.0);
  EXPECT_EQ(r.xi_l2, 0.0);
  EXPECT_EQ(r.M_gamma0_err, 0.0);
  EXPECT_EQ(r.mean_diff, 0.0);
}

TEST(Lemma53Check, ConstantShiftMovesRootsByHalfOverN) {
  const auto q0 = pot([](double) { return cplx(0.0); });
  const auto q1 = pot([](double) { return cplx(1e-3); });
  const auto cd0 = cauchy_data_of(q0), cd1 = cauchy_data_of(q1);
  const auto wd0 = weyl_data(cd0, 40), wd1 = weyl_data(cd1, 40);
  const auto d = weyl_distance(cd0, wd0, cd1, wd1);
  ASSERT_FALSE(d.xi.empty());
  for (std::size_t i = 0; i < d.xi.size(); ++i) {
    const int n = d.n1 + static_cast<int>(i);
    EXPECT_NEAR(d.xi[i], 5e-4 / n, 5e-2 * 5e-4 / n) << "n = " << n;
  }
  const auto r = lemma53_check(q0, q1);
  expect_finite_nonnegative(r);
  EXPECT_NEAR(r.q_err, 1e-3 * std::sqrt(kPi), 1e-9);
  EXPECT_NEAR(r.mean_diff, 1e-3 * kPi, 1e-12);
}

TEST(Lemma53Check, RatioStableUnderScaling) {
  const auto q = pot([](double x) { return cplx(std::cos(x)); });
  auto ratios = [&](double d) {
    const auto r = lemma53_check(q, pot([d](double x) { return cplx(std::cos(x) + d * std::cos(2.0 * x)); }));
    expect_finite_nonnegative(r);
    return std::pair{r.xi_l2 / r.Xi, r.M_gamma0_err / r.Xi};
  };
  const auto a = ratios(1e-3), b = ratios(1e-4);
  EXPECT_NEAR(a.first / b.first, 1.0, 0.1);
  EXPECT_NEAR(a.second / b.second, 1.0, 0.1);
}

TEST(WeylDistance, PairingAmbiguous) {
  const auto cd = CauchyData::zero(Grid(kPi, 256));
  WeylData a, b;
  a.poles = {{1.0, 1, {1.0}}, {4.0, 1, {1.0}}, {9.0, 1, {1.0}}};
  b.poles = {{1.0, 1, {1.0}}, {4.0, 1, {1.0}}, {100.0, 1, {1.0}}};
  a.n1 = b.n1 = 2;
  a.gamma0_radius = b.gamma0_radius = 2.5;
  try {
    weyl_distance(cd, a, cd, b);
    FAIL() << "expected PairingAmbiguous";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PairingAmbiguous);
  }
}

TEST(Median, Examples) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_THROW(median({}), Error);
}
