#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specrecon/analytic.hpp"
#include "specrecon/common.hpp"
#include "specrecon/grid.hpp"
#include "specrecon/kernels.hpp"
#include "specrecon/potential.hpp"
#include "specrecon/sl_core.hpp"

namespace specrecon {

/// Cauchy data {K, N, omega}: kernels sampled on a grid over [0, pi].
struct CauchyData {
  Grid grid;
  std::vector<cplx> K;
  std::vector<cplx> N;
  cplx omega = 0.0;

  static CauchyData zero(const Grid& g, cplx omega = 0.0) {
    return {g, std::vector<cplx>(g.nodes(), 0.0), std::vector<cplx>(g.nodes(), 0.0), omega};
  }

  void validate() const {
    require(static_cast<int>(K.size()) == grid.nodes() && static_cast<int>(N.size()) == grid.nodes(),
            ErrorKind::InvalidInput, "Cauchy data length does not match its grid");
    require(std::abs(grid.endpoint() - kPi) < 1e-12, ErrorKind::InvalidGrid, "Cauchy data live on [0, pi]");
    for (std::size_t k = 0; k < K.size(); ++k)
      require(is_finite(K[k]) && is_finite(N[k]), ErrorKind::InvalidInput, "non-finite Cauchy data sample");
    require(is_finite(omega), ErrorKind::InvalidInput, "non-finite omega");
  }
};

struct CauchyOptions {
  int n_modes = 64;
  IntegratorOptions integrator{};
};

namespace detail {

// Least-squares fit of y_n ~ sum_b c_b basis_b(n) over the given indices.
inline std::vector<cplx> fit_tail(const std::vector<cplx>& y, int from, int to,
                                  const std::vector<std::function<double(int)>>& basis) {
  const int rows = to - from + 1;
  const int cols = static_cast<int>(basis.size());
  Eigen::MatrixXd A(rows, cols);
  Eigen::VectorXcd b(rows);
  for (int i = 0; i < rows; ++i) {
    const int n = from + i;
    for (int j = 0; j < cols; ++j) A(i, j) = basis[j](n);
    b(i) = y[n];
  }
  const Eigen::MatrixXcd Ac = A.cast<cplx>();
  const Eigen::VectorXcd c = Ac.colPivHouseholderQr().solve(b);
  return {c.data(), c.data() + c.size()};
}

inline double sign_alt(int n) { return n % 2 == 0 ? 1.0 : -1.0; }

// Closed forms on [0, 2 pi] of sum_{n>=1} sin(n u)/n^p (p odd) and cos(n u)/n^p (p even).
inline double sin_sum(int p, double u) {
  switch (p) {
    case 1: return 0.5 * (kPi - u);
    case 3: return kPi * kPi * u / 6.0 - kPi * u * u / 4.0 + u * u * u / 12.0;
  }
  fail(ErrorKind::InvalidInput, "unsupported sine sum order");
}

inline double cos_sum(int p, double u) {
  const double u2 = u * u;
  switch (p) {
    case 2: return kPi * kPi / 6.0 - kPi * u / 2.0 + u2 / 4.0;
    case 4: return std::pow(kPi, 4) / 90.0 - kPi * kPi * u2 / 12.0 + kPi * u2 * u / 12.0 - u2 * u2 / 48.0;
  }
  fail(ErrorKind::InvalidInput, "unsupported cosine sum order");
}

}  // namespace detail

/// Forward map q -> {K, N, omega}. Fourier coefficients come from the endpoint values of S at
/// lambda = n^2; the slowly decaying endpoint behaviour of K and N is fitted from the upper
/// half of the modes and synthesized in closed form, the remainder by a truncated series.
inline CauchyData cauchy_data_of(const Potential& q, const CauchyOptions& opt = {}) {
  const Grid& g = q.grid();
  require(std::abs(g.endpoint() - kPi) < 1e-12, ErrorKind::InvalidGrid, "potential must live on [0, pi]");
  const int nm = opt.n_modes;
  require(nm >= 8, ErrorKind::InvalidInput, "n_modes must be at least 8");
  require(nm <= g.intervals() / 4, ErrorKind::AliasGuard,
          "n_modes " + std::to_string(nm) + " exceeds a quarter of the grid intervals");
  const cplx omega = omega_of(q);

  std::vector<cplx> kc(nm + 1), ns(nm + 1, 0.0);
  parallel_for(static_cast<std::size_t>(nm) + 1, [&](std::size_t i) {
    const int n = static_cast<int>(i);
    const double lam = static_cast<double>(n) * n;
    const auto [S, dS] = S_endpoint(q, lam, opt.integrator);
    kc[n] = lam * S + omega * detail::sign_alt(n);
    if (n > 0) ns[n] = static_cast<double>(n) * (dS - detail::sign_alt(n));
  });

  // Endpoint behaviour: coefficients sigma_n / n^p with sigma_n in {1, (-1)^n}. The two
  // leading orders are summed in closed form; one more order only sharpens the fit.
  const int from = nm / 2;
  struct Term {
    int p;
    bool alternating;
  };
  const std::vector<Term> k_terms{{2, false}, {2, true}, {4, false}, {4, true}, {6, false}, {6, true}};
  const std::vector<Term> n_terms{{1, false}, {1, true}, {3, false}, {3, true}, {5, false}, {5, true}};
  auto basis_of = [](const std::vector<Term>& terms) {
    std::vector<std::function<double(int)>> out;
    for (const Term& tm : terms)
      out.push_back([tm](int n) { return (tm.alternating ? detail::sign_alt(n) : 1.0) / std::pow(double(n), tm.p); });
    return out;
  };
  const auto bk = basis_of(k_terms), bn = basis_of(n_terms);
  const auto ck = detail::fit_tail(kc, from, nm, bk);
  const auto cn = detail::fit_tail(ns, from, nm, bn);
  constexpr std::size_t kClosed = 4;

  std::vector<cplx> rk(kc), rn(ns);
  for (int n = 1; n <= nm; ++n) {
    for (std::size_t j = 0; j < kClosed; ++j) {
      rk[n] -= ck[j] * bk[j](n);
      rn[n] -= cn[j] * bn[j](n);
    }
  }

  CauchyData cd = CauchyData::zero(g, omega);
  parallel_for(static_cast<std::size_t>(g.nodes()), [&](std::size_t k) {
    const double t = g.x(static_cast<int>(k));
    cplx K = rk[0] / kPi, N = 0.0;
    for (std::size_t j = 0; j < kClosed; ++j) {
      const double uk = k_terms[j].alternating ? t + kPi : t;
      const double un = n_terms[j].alternating ? t + kPi : t;
      K += (2.0 / kPi) * ck[j] * detail::cos_sum(k_terms[j].p, uk);
      N += (2.0 / kPi) * cn[j] * detail::sin_sum(n_terms[j].p, un);
    }
    for (int n = 1; n <= nm; ++n) {
      K += (2.0 / kPi) * rk[n] * std::cos(n * t);
      N += (2.0 / kPi) * rn[n] * std::sin(n * t);
    }
    cd.K[k] = K;
    cd.N[k] = N;
  });
  return cd;
}

/// (eta1, eta2) = (S(pi, lambda), S'(pi, lambda)) rebuilt from Cauchy data:
///   eta1 = s(pi)/lambda - omega c(pi)/lambda + (1/lambda) int K c dt
///   eta2 = c(pi) + omega s(pi)/lambda + (1/lambda) int N s dt
/// evaluated in a form that is regular at lambda = 0.
inline std::pair<cplx, cplx> rebuild_eta(const CauchyData& cd, cplx lambda) {
  const Grid& g = cd.grid;
  const auto w = quadrature_weights(g);
  const cplx rho = sqrt_branch(lambda);
  cplx intK = 0.0, intK_cm1 = 0.0, intN = 0.0;
  for (int k = 0; k < g.nodes(); ++k) {
    const double t = g.x(k);
    intK += w[k] * cd.K[k];
    intK_cm1 += w[k] * cd.K[k] * cosm1_over_lambda(rho, t);
    intN += w[k] * cd.N[k] * sin_over_rho(rho, t);
  }
  cplx eta1 = sin_over_rho(rho, kPi) + intK_cm1 - cd.omega * cosm1_over_lambda(rho, kPi);
  if (lambda != 0.0) eta1 += (intK - cd.omega) / lambda;
  const cplx eta2 = std::cos(rho * kPi) + cd.omega * sin_over_rho(rho, kPi) + intN;
  return {eta1, eta2};
}

/// Weyl function eta2/eta1.
inline cplx weyl(const CauchyData& cd, cplx lambda) {
  const auto [e1, e2] = rebuild_eta(cd, lambda);
  const double h = 1e-6 * std::max(1.0, std::abs(lambda));
  const cplx de1 = (rebuild_eta(cd, lambda + h).first - rebuild_eta(cd, lambda - h).first) / (2.0 * h);
  const double dist = de1 == 0.0 ? std::abs(e1) : std::abs(e1 / de1);
  require(dist >= 1e-8 * std::max(1.0, std::abs(lambda)), ErrorKind::NearPole,
          "lambda lies within tolerance of a zero of eta1");
  return e2 / e1;
}

/// lambda * Delta(lambda) assembled from Cauchy data:
///   f1 (lambda c + omega s + int N s) + f2 (s - omega c + int K c), all at (pi, lambda).
inline cplx lambda_delta_from_cauchy(const BoundaryPair& bp, const CauchyData& cd, cplx lambda) {
  const Grid& g = cd.grid;
  const auto w = quadrature_weights(g);
  const cplx rho = sqrt_branch(lambda);
  cplx intNs = 0.0, intKc = 0.0;
  for (int k = 0; k < g.nodes(); ++k) {
    const double t = g.x(k);
    intNs += w[k] * cd.N[k] * lambda * sin_over_rho(rho, t);
    intKc += w[k] * cd.K[k] * std::cos(rho * t);
  }
  const cplx s = lambda * sin_over_rho(rho, kPi);
  const cplx c = std::cos(rho * kPi);
  const auto [f1, f2] = bp(lambda);
  return f1 * (lambda * c + cd.omega * s + intNs) + f2 * (s - cd.omega * c + intKc);
}

/// CSV: `omega <re> <im>`, then header `t,re_K,im_K,re_N,im_N`, then one row per node.
inline void write_cauchy(const std::string& path, const CauchyData& cd) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  char buf[256];
  std::snprintf(buf, sizeof buf, "omega %.17g %.17g\n", cd.omega.real(), cd.omega.imag());
  out << buf << "t,re_K,im_K,re_N,im_N\n";
  for (int k = 0; k < cd.grid.nodes(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", cd.grid.x(k), cd.K[k].real(),
                  cd.K[k].imag(), cd.N[k].real(), cd.N[k].imag());
    out << buf;
  }
}

inline CauchyData read_cauchy(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read " + path);
  std::string word;
  double ore = 0.0, oim = 0.0;
  in >> word >> ore >> oim;
  require(!in.fail() && word == "omega", ErrorKind::Io, path + ": expected 'omega <re> <im>'");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  require(line.rfind("t,", 0) == 0, ErrorKind::Io, path + ": missing column header");
  std::vector<double> ts;
  std::vector<cplx> K, N;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t, a, b, c, d;
    require(static_cast<bool>(row >> t >> a >> b >> c >> d), ErrorKind::Io, path + ": malformed row");
    ts.push_back(t);
    K.emplace_back(a, b);
    N.emplace_back(c, d);
  }
  require(ts.size() >= 3, ErrorKind::Io, path + ": too few rows");
  const Grid g(kPi, static_cast<int>(ts.size()) - 1);
  for (std::size_t k = 0; k < ts.size(); ++k)
    require(std::abs(ts[k] - g.x(static_cast<int>(k))) < 1e-9, ErrorKind::InvalidGrid,
            path + ": abscissas are not a uniform grid on [0, pi]");
  CauchyData cd{g, std::move(K), std::move(N), cplx(ore, oim)};
  cd.validate();
  return cd;
}

}  // namespace specrecon
