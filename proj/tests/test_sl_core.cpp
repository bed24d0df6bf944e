#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "specrecon/sl_core.hpp"

using namespace specrecon;

namespace {

Potential constant(double c, double a = kPi, int M = 2048) {
  return Potential::sample(Grid(a, M), [c](double) { return cplx(c); });
}

Potential cosine(int M = 2048) {
  return Potential::sample(Grid(kPi, M), [](double x) { return cplx(std::cos(x)); });
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Grid, SpacingAndNodes) {
  const Grid g(kPi, 8);
  EXPECT_EQ(g.nodes(), 9);
  EXPECT_DOUBLE_EQ(g.spacing(), kPi / 8);
  EXPECT_DOUBLE_EQ(g.x(8), kPi);
  EXPECT_THROW(Grid(kPi, 0), Error);
  EXPECT_THROW(Grid(-1.0, 4), Error);
}

TEST(Potential, RejectsNonFiniteAndWrongLength) {
  EXPECT_THROW(Potential(Grid(kPi, 4), std::vector<cplx>(4, 0.0)), Error);
  std::vector<cplx> v(5, 0.0);
  v[2] = cplx(std::nan(""), 0.0);
  EXPECT_THROW(Potential(Grid(kPi, 4), v), Error);
}

TEST(Potential, FileRoundTripKeepsJumps) {
  const Grid g(2.0 * kPi, 64);
  const auto q = Potential::piecewise(
      g, kPi, [](double x) { return cplx(std::cos(x), 0.5); }, [](double) { return cplx(2.0); });
  ASSERT_EQ(q.jumps().size(), 1u);
  const auto path = std::filesystem::temp_directory_path() / "specrecon_pot_test.txt";
  write_potential(path.string(), q);
  const auto r = read_potential(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(r.grid().nodes(), q.grid().nodes());
  ASSERT_EQ(r.jumps().size(), 1u);
  EXPECT_EQ(r.jumps()[0].node, 32);
  for (int k = 0; k < g.nodes(); ++k) EXPECT_EQ(r.values()[k], q.values()[k]);
  EXPECT_EQ(r.right_value(32), cplx(2.0));
}

TEST(Potential, PresetsParse) {
  const Grid g(kPi, 16);
  EXPECT_NEAR(make_preset("cosine 2 0 3", g).values()[1].real(), 2.0 * std::cos(3.0 * g.x(1)), 1e-15);
  EXPECT_NEAR(make_preset("linear 1 1", g).values()[16].imag(), 1.0, 1e-15);
  EXPECT_THROW(make_preset("nonsense", g), Error);
  EXPECT_THROW(make_preset("constant x", g), Error);
}

TEST(SpectralPoint, BranchAndSquare) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    const SpectralPoint p(cplx(u(rng), u(rng)));
    EXPECT_LE(std::abs(p.rho * p.rho - p.lambda), 1e-12 * std::abs(p.lambda));
    const double arg = std::arg(p.rho);
    EXPECT_GE(arg, -kPi / 2);
    EXPECT_LT(arg, kPi / 2);
  }
  // Negative reals sit on the branch cut: rho = -i sqrt(|lambda|).
  EXPECT_EQ(SpectralPoint(-4.0).rho, cplx(0.0, -2.0));
}

TEST(IntegrateS, InitialConditionsExact) {
  const auto sol = integrate_S(cosine(256), cplx(3.0, 1.0));
  EXPECT_EQ(sol.front().S, cplx(0.0));
  EXPECT_EQ(sol.front().Sprime, cplx(1.0));
  EXPECT_EQ(sol.front().x, 0.0);
}

TEST(IntegrateS, ZeroPotentialAtLambdaOne) {
  const auto [S, dS] = S_endpoint(constant(0.0), 1.0);
  EXPECT_NEAR(std::abs(S), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(dS + 1.0), 0.0, 1e-13);
}

TEST(IntegrateS, ConstantPotentialShift) {
  const auto [S, dS] = S_endpoint(constant(1.0), 2.0);
  EXPECT_NEAR(std::abs(S), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(dS + 1.0), 0.0, 1e-13);
}

TEST(IntegrateS, ZeroPotentialMatchesClosedFormEverywhere) {
  const cplx l(12.5, -3.0);
  const cplx rho = sqrt_branch(l);
  for (const auto& s : integrate_S(constant(0.0), l)) {
    EXPECT_LE(std::abs(s.S - std::sin(rho * s.x) / rho), 1e-11);
    EXPECT_LE(std::abs(s.Sprime - std::cos(rho * s.x)), 1e-11);
  }
}

TEST(IntegrateS, CosinePotentialHalfStepReference) {
  const cplx l(4.0, 3.0);
  const auto coarse = S_endpoint(cosine(2048), l);
  const auto fine = S_endpoint(cosine(4096), l);
  EXPECT_LE(rel(coarse.first, fine.first), 1e-8);
  EXPECT_LE(rel(coarse.second, fine.second), 1e-8);
}

TEST(IntegrateS, GridRefinementOrderIsFour) {
  const cplx l(40.0, 6.0);
  const cplx ref = S_endpoint(cosine(8192), l).first;
  std::vector<double> err;
  for (int M : {32, 64, 128}) err.push_back(std::abs(S_endpoint(cosine(M), l).first - ref));
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double order = std::log2(err[i] / err[i + 1]);
    EXPECT_NEAR(order, 4.0, 0.5) << "errors " << err[i] << " -> " << err[i + 1];
  }
}

TEST(IntegrateS, WronskianIsOne) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  const auto q = Potential::sample(Grid(kPi, 1024), [](double x) { return cplx(std::cos(x), 0.3 * x); });
  for (int i = 0; i < 5; ++i) {
    const cplx l(u(rng), u(rng) / 10.0);
    const auto S = integrate_S(q, l);
    const auto C = integrate_initial(q, l, 1.0, 0.0);
    // Relative to the size of the products: for growing solutions the difference cancels.
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double size = std::max(1.0, std::abs(C[k].S * S[k].Sprime));
      EXPECT_LE(std::abs(C[k].S * S[k].Sprime - C[k].Sprime * S[k].S - 1.0), 1e-8 * size);
    }
  }
}

TEST(IntegrateS, ConstantShiftProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  const double c = 2.5;
  for (int i = 0; i < 10; ++i) {
    const cplx l(u(rng), u(rng) / 4.0);
    const auto a = S_endpoint(constant(c), l);
    const auto b = S_endpoint(constant(0.0), l - c);
    EXPECT_LE(rel(a.first, b.first), 1e-10);
    EXPECT_LE(rel(a.second, b.second), 1e-10);
  }
}

TEST(IntegrateS, OverflowGuards) {
  EXPECT_THROW(S_endpoint(constant(0.0), 1e9), Error);
  IntegratorOptions opt;
  opt.overflow_guard = 1e10;
  try {
    S_endpoint(constant(0.0), cplx(0.0, 2000.0), opt);
    FAIL() << "expected OverflowGuard";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OverflowGuard);
  }
}

TEST(IntegratePsi, ZeroPotentialExamples) {
  const auto q = constant(0.0, 2.0 * kPi, 4096);
  const auto [p1, dp1] = psi_at(q, 1.0, 2048);
  EXPECT_NEAR(std::abs(p1), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(dp1 - 1.0), 0.0, 1e-12);
  const auto [p2, dp2] = psi_at(q, 0.25, 2048);
  EXPECT_NEAR(std::abs(p2 - 2.0), 0.0, 1e-12);
  const auto sol = integrate_psi(q, cplx(3.0, 2.0));
  const cplx rho = sqrt_branch(cplx(3.0, 2.0));
  for (const auto& s : sol) EXPECT_LE(std::abs(s.S - std::sin(rho * (2.0 * kPi - s.x)) / rho), 1e-10);
  EXPECT_EQ(sol.back().S, cplx(0.0));
  EXPECT_EQ(sol.back().Sprime, cplx(-1.0));
}

TEST(IntegratePsi, ConstantPotentialShift) {
  const auto [p, dp] = psi_at(constant(1.0, 2.0 * kPi, 4096), 1.25, 2048);
  EXPECT_NEAR(std::abs(p - 2.0), 0.0, 1e-12);
}

TEST(OmegaOf, Examples) {
  EXPECT_EQ(omega_of(constant(0.0)), cplx(0.0));
  EXPECT_NEAR(std::abs(omega_of(constant(1.0)) - kPi / 2), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(omega_of(cosine())), 0.0, 1e-14);
}
