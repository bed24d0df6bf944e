#include <gtest/gtest.h>

#include "specrecon/half_inverse.hpp"
#include "specrecon/recon.hpp"

using namespace specrecon;

namespace {

Potential pot(std::function<cplx(double)> f, int M = 2048) { return Potential::sample(Grid(kPi, M), f); }

EigenvalueList list_of(std::function<cplx(int)> f, int N) {
  std::vector<cplx> v;
  for (int n = 1; n <= N; ++n) v.push_back(f(n));
  return EigenvalueList::from_values(v);
}

double cauchy_err_K(const CauchyData& a, const CauchyData& b) {
  return l2_distance(quadrature_weights(a.grid), a.K, b.K);
}

BoundaryPair hl_zero() {
  return build_boundary_pair(Potential::sample(Grid(2.0 * kPi, 4096), [](double) { return cplx(0.0); }));
}

}  // namespace

TEST(HElement, InnerProductConjugatesFirstArgument) {
  const Grid g(kPi, 64);
  const auto w = quadrature_weights(g);
  HElement a{std::vector<cplx>(g.nodes(), cplx(0.0, 1.0)), std::vector<cplx>(g.nodes(), 0.0)};
  HElement b{std::vector<cplx>(g.nodes(), 1.0), std::vector<cplx>(g.nodes(), 0.0)};
  EXPECT_NEAR(std::abs(inner(w, a, b) - cplx(0.0, -kPi)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(inner(w, b, a) - cplx(0.0, kPi)), 0.0, 1e-12);
  EXPECT_NEAR(norm(w, a), std::sqrt(kPi), 1e-12);
}

TEST(VSystem, FirstVectorAndNumber) {
  const auto evs = list_of([](int n) { return cplx(n * n + 0.5, 0.1 * n); }, 6);
  for (const char* b : {"dirichlet", "neumann", "robin 1:2", "poly 1 1 | 0 2"}) {
    const auto vs = build_vsystem(boundary_preset(b), evs, cplx(0.3, -0.2), 6, Grid(kPi, 256));
    for (int k = 0; k < vs.grid.nodes(); ++k) {
      EXPECT_EQ(vs.v[0].h1[k], cplx(0.0));
      EXPECT_EQ(vs.v[0].h2[k], cplx(1.0));
    }
    EXPECT_EQ(vs.w[0], cplx(0.3, -0.2));
  }
}

TEST(VSystem, DirichletSquares) {
  const cplx omega(0.7, 0.2);
  const auto evs = list_of([](int n) { return cplx(n * n); }, 10);
  const auto vs = build_vsystem(boundary_preset("dirichlet"), evs, omega, 10, Grid(kPi, 512));
  for (int n = 1; n <= 10; ++n) {
    for (int k = 0; k < vs.grid.nodes(); ++k) {
      EXPECT_EQ(vs.v[n].h1[k], cplx(0.0));
      EXPECT_LE(std::abs(vs.v[n].h2[k] - std::cos(n * vs.grid.x(k))), 1e-12);
    }
    EXPECT_LE(std::abs(vs.w[n] - omega * std::pow(-1.0, n)), 1e-12);
  }
}

TEST(VSystem, DoubleEigenvalueIsLambdaDerivative) {
  const auto bp = boundary_preset("poly 1 0.5 | 2 0 0.1");
  const cplx mu(7.3, 0.4), omega(0.5, 0.1);
  const auto evs = EigenvalueList::from_values({2.0, mu, mu, 15.0});
  ASSERT_EQ(evs.multiplicity_at(2), 2);
  const Grid g(kPi, 256);
  const auto vs = build_vsystem(bp, evs, omega, 4, g);
  auto v_at = [&](cplx l, int k) {
    const auto [f1, f2] = bp(l);
    return std::pair{f1 * s_value(g.x(k), l), f2 * c_value(g.x(k), l)};
  };
  auto w_at = [&](cplx l) {
    const auto [f1, f2] = bp(l);
    const cplx s = s_value(kPi, l), c = c_value(kPi, l);
    return -f1 * (l * c + omega * s) - f2 * (s - omega * c);
  };
  const double h = 1e-5;
  for (int k = 0; k < g.nodes(); k += 17) {
    const auto p = v_at(mu + h, k), m = v_at(mu - h, k);
    const cplx d1 = (p.first - m.first) / (2.0 * h), d2 = (p.second - m.second) / (2.0 * h);
    EXPECT_LE(std::abs(vs.v[3].h1[k] - d1), 1e-6 * std::max(1.0, std::abs(d1)));
    EXPECT_LE(std::abs(vs.v[3].h2[k] - d2), 1e-6 * std::max(1.0, std::abs(d2)));
  }
  const cplx dw = (w_at(mu + h) - w_at(mu - h)) / (2.0 * h);
  EXPECT_LE(std::abs(vs.w[3] - dw), 1e-6 * std::max(1.0, std::abs(dw)));
  EXPECT_LE(std::abs(vs.w[2] - w_at(mu)), 1e-12 * std::max(1.0, std::abs(vs.w[2])));
}

TEST(VSystem, SeparationViolationRaised) {
  const auto evs = list_of([](int n) { return cplx(n * n); }, 5);
  try {
    build_vsystem(boundary_preset("poly -4 1 | -4 1"), evs, 0.0, 5, Grid(kPi, 128));
    FAIL() << "expected SeparationViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SeparationViolation);
  }
}

TEST(SolveMoment, ZeroData) {
  const auto evs = list_of([](int n) { return cplx(n * n); }, 20);
  const auto vs = build_vsystem(boundary_preset("dirichlet"), evs, 0.0, 20, Grid(kPi, 512));
  const auto sol = solve_moment(vs);
  const auto wq = quadrature_weights(vs.grid);
  // w_n = -sin(n pi)/n vanishes only up to round-off.
  EXPECT_LE(norm(wq, sol.u), 1e-12);
  const auto cd = recovered_cauchy(sol.u, 0.0, vs.grid);
  EXPECT_LE(l2_norm(wq, cd.K), 1e-12);
  EXPECT_LE(l2_norm(wq, cd.N), 1e-12);
}

TEST(SolveMoment, OrthonormalSystemPicksBasisVector) {
  const Grid g(kPi, 1024);
  VSystem vs;
  vs.grid = g;
  for (int n = 0; n <= 8; ++n) {
    HElement h{std::vector<cplx>(g.nodes(), 0.0), std::vector<cplx>(g.nodes())};
    for (int k = 0; k < g.nodes(); ++k)
      h.h2[k] = n == 0 ? 1.0 / std::sqrt(kPi) : std::sqrt(2.0 / kPi) * std::cos(n * g.x(k));
    vs.v.push_back(h);
    vs.w.push_back(n == 3 ? 1.0 : 0.0);
  }
  const auto sol = solve_moment(vs);
  for (int k = 0; k < g.nodes(); ++k) {
    EXPECT_LE(std::abs(sol.u.h2[k] - vs.v[3].h2[k]), 1e-8);
    EXPECT_EQ(sol.u.h1[k], cplx(0.0));
  }
  EXPECT_NEAR(sol.gram_cond, 1.0, 1e-8);
}

TEST(SolveMoment, ConstantPotentialDirichletK) {
  const auto truth = cauchy_data_of(pot([](double) { return cplx(1.0); }));
  const auto evs = list_of([](int n) { return cplx(n * n + 1.0); }, 40);
  const auto vs = build_vsystem(boundary_preset("dirichlet"), evs, kPi / 2, 40);
  const auto sol = solve_moment(vs);
  const auto cd = recovered_cauchy(sol.u, kPi / 2, vs.grid);
  EXPECT_LE(cauchy_err_K(cd, truth), 1e-3);
}

TEST(SolveMoment, TruncationMonotone) {
  const auto truth = cauchy_data_of(pot([](double) { return cplx(1.0); }));
  double prev = std::numeric_limits<double>::infinity();
  for (int N : {10, 20, 40}) {
    const auto evs = list_of([](int n) { return cplx(n * n + 1.0); }, N);
    const auto sol = solve_moment(build_vsystem(boundary_preset("dirichlet"), evs, kPi / 2, N));
    const double err = cauchy_err_K(recovered_cauchy(sol.u, kPi / 2), truth);
    EXPECT_LE(err, 1.1 * prev) << "N = " << N;
    prev = err;
  }
}

TEST(SolveMoment, ResidualSmallWhenWellConditioned) {
  const auto q = Potential::piecewise(
      Grid(2.0 * kPi, 4096), kPi, [](double x) { return cplx(std::cos(x)); }, [](double) { return cplx(0.0); });
  const auto evs = dirichlet_spectrum(q, 30);
  const auto bp = hl_zero();
  const auto vs = build_vsystem(bp, evs, 0.0, 30);
  const auto sol = solve_moment(vs);
  ASSERT_FALSE(sol.ill_conditioned);
  double wmax = 0.0;
  for (cplx w : vs.w) wmax = std::max(wmax, 1.0 + std::abs(w));
  EXPECT_LE(sol.max_residual(), 1e-6 * wmax);
}

TEST(RecoveredCauchy, ConjugationConvention) {
  const Grid g(kPi, 16);
  const HElement u{std::vector<cplx>(g.nodes(), 0.0), std::vector<cplx>(g.nodes(), cplx(1.0, 1.0))};
  const auto cd = recovered_cauchy(u, 2.0, g);
  EXPECT_EQ(cd.omega, cplx(2.0));
  for (int k = 0; k < g.nodes(); ++k) {
    EXPECT_EQ(cd.K[k], cplx(1.0, -1.0));
    EXPECT_EQ(cd.N[k], cplx(0.0));
  }
  const auto z = recovered_cauchy({std::vector<cplx>(g.nodes(), 0.0), std::vector<cplx>(g.nodes(), 0.0)}, 0.0, g);
  EXPECT_EQ(z.omega, cplx(0.0));
}

TEST(ForwardConsistency, TrueSpectrumSatisfiesMoments) {
  const auto q = pot([](double x) { return cplx(std::cos(x), 0.2 * x); });
  const auto cd = cauchy_data_of(q);
  const auto u = u_of(cd);
  for (const char* b : {"dirichlet", "neumann", "robin 1:0.5"}) {
    const auto bp = boundary_preset(b);
    SearchRegion region;
    region.re_min = -3.0;
    region.max_count = 20;
    const auto evs = find_eigenvalues(bp, q, region);
    const auto vs = build_vsystem(bp, evs, cd.omega, 20);
    const auto r = moment_residuals(vs, u);
    for (std::size_t n = 0; n < r.size(); ++n) EXPECT_LE(std::abs(r[n]), 1e-6) << b << " n = " << n;
  }
}

TEST(ForwardConsistency, HalfInverseSetup) {
  const auto full = Potential::piecewise(
      Grid(2.0 * kPi, 4096), kPi, [](double x) { return cplx(std::cos(x)); }, [](double) { return cplx(0.0); });
  const auto cd = cauchy_data_of(pot([](double x) { return cplx(std::cos(x)); }));
  const auto evs = dirichlet_spectrum(full, 40);
  const auto vs = build_vsystem(hl_zero(), evs, cd.omega, 40);
  const auto r = moment_residuals(vs, u_of(cd));
  for (std::size_t n = 0; n < r.size(); ++n) EXPECT_LE(std::abs(r[n]), 1e-6) << "n = " << n;
}

TEST(ForwardConsistency, DistinctPotentialsGiveDistinctW) {
  const auto bp = hl_zero();
  auto w_of = [&](std::function<cplx(double)> f) {
    const auto full = Potential::piecewise(Grid(2.0 * kPi, 4096), kPi, f, [](double) { return cplx(0.0); });
    const auto evs = dirichlet_spectrum(full, 40);
    return build_vsystem(bp, evs, 0.5 * full.integral(), 40, Grid(kPi, 512)).w;
  };
  const auto a = w_of([](double x) { return cplx(std::cos(x)); });
  const auto b = w_of([](double x) { return cplx(std::cos(x) + 0.1 * std::sin(2.0 * x)); });
  double diff = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) diff = std::max(diff, std::abs(a[n] - b[n]));
  EXPECT_GT(diff, 1e-4);
}

TEST(ConditionReport, ZeroPotentialHalfInverseData) {
  const auto evs = list_of([](int n) { return cplx(0.25 * n * n); }, 40);
  const auto rep = condition_report(hl_zero(), evs);
  EXPECT_TRUE(rep.separation_ok);
  EXPECT_GT(rep.separation_min, 0.0);
  EXPECT_EQ(rep.simple_last, 0);
  EXPECT_TRUE(rep.simple_ok);
  EXPECT_TRUE(rep.asymptotics_ok);
  EXPECT_LE(rep.kappa_tail_l2, 1e-12);
  EXPECT_TRUE(rep.basis2_ok);
  EXPECT_TRUE(rep.all_ok());
}

TEST(ConditionReport, InjectedSeparationViolation) {
  const auto evs = list_of([](int n) { return cplx(n * n); }, 10);
  const auto rep = condition_report(boundary_preset("poly -4 1 | -4 1"), evs);
  EXPECT_FALSE(rep.separation_ok);
  const auto v = rep.violations();
  EXPECT_NE(std::find(v.begin(), v.end(), "Separation"), v.end());
}

TEST(ConditionReport, InjectedAsymptoticsViolation) {
  const auto evs = list_of([](int n) { return std::pow(cplx(0.5 * n, double(n)), 2); }, 40);
  const auto rep = condition_report(hl_zero(), evs);
  EXPECT_FALSE(rep.asymptotics_ok);
  EXPECT_GE(rep.asym_max_im_rho, 39.0);
}

TEST(ConditionReport, MultipleEigenvalueMovesSimpleIndex) {
  std::vector<cplx> v;
  for (int n = 1; n <= 20; ++n) v.push_back(0.25 * n * n);
  v[3] = v[2];  // lambda_3 = lambda_4
  const auto rep = condition_report(hl_zero(), EigenvalueList::from_values(v));
  EXPECT_EQ(rep.simple_last, 4);
  EXPECT_EQ(rep.n0, 5);
}
