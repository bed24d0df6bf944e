#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "specrecon/analytic.hpp"
#include "specrecon/cauchy.hpp"
#include "specrecon/common.hpp"
#include "specrecon/grid.hpp"
#include "specrecon/kernels.hpp"

namespace specrecon {

/// Element [h1, h2] of H = L2(0, pi) + L2(0, pi).
struct HElement {
  std::vector<cplx> h1;
  std::vector<cplx> h2;
};

/// (g, h) = int conj(g1) h1 + conj(g2) h2, conjugate-linear in g.
inline cplx inner(const std::vector<double>& w, const HElement& g, const HElement& h) {
  cplx acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * (std::conj(g.h1[k]) * h.h1[k] + std::conj(g.h2[k]) * h.h2[k]);
  return acc;
}

inline double norm(const std::vector<double>& w, const HElement& h) { return std::sqrt(std::abs(inner(w, h, h))); }

struct VSystem {
  Grid grid;
  std::vector<HElement> v;
  std::vector<cplx> w;
  cplx omega = 0.0;
  EigenvalueList evs;
};

namespace detail {

// Product-rule Taylor coefficient: sum_{k=0..nu} a[k] b[nu-k].
inline cplx cauchy_product(const std::vector<cplx>& a, const std::vector<cplx>& b, int nu) {
  cplx acc = 0.0;
  for (int k = 0; k <= nu; ++k) acc += a[k] * b[nu - k];
  return acc;
}

inline double boundary_scale(const BoundaryPair& bp, const EigenvalueList& evs) {
  double scale = 1.0;
  for (cplx l : evs.values) {
    const auto [f1, f2] = bp(l);
    scale = std::max({scale, std::abs(f1), std::abs(f2)});
  }
  return scale;
}

}  // namespace detail

/// Vectors v_n and numbers w_n, n = 0..N: v_0 = [0, 1], w_0 = omega, and for n + nu >= 1
/// the nu-th normalized lambda-derivatives at lambda_n of
///   v(t, lambda) = [f1 s(t, lambda), f2 c(t, lambda)],
///   w(lambda) = -f1 (lambda c(pi) + omega s(pi)) - f2 (s(pi) - omega c(pi)).
inline VSystem build_vsystem(const BoundaryPair& bp, const EigenvalueList& evs_in, cplx omega, int N,
                             const Grid& grid = Grid(kPi, 2048)) {
  require(N >= 0 && N < static_cast<int>(evs_in.size()), ErrorKind::InvalidInput,
          "need " + std::to_string(N + 1) + " eigenvalues including lambda_0, have " + std::to_string(evs_in.size()));
  const EigenvalueList evs = evs_in.truncated(N);
  VSystem vs;
  vs.grid = grid;
  vs.omega = omega;
  vs.evs = evs;
  vs.v.resize(static_cast<std::size_t>(N) + 1);
  vs.w.resize(static_cast<std::size_t>(N) + 1);
  vs.v[0] = {std::vector<cplx>(grid.nodes(), 0.0), std::vector<cplx>(grid.nodes(), 1.0)};
  vs.w[0] = omega;

  const double scale = detail::boundary_scale(bp, evs);
  struct Block {
    int n;
    int m;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < evs.index_set.size(); ++i) blocks.push_back({evs.index_set[i], evs.multiplicities[i]});

  parallel_for(blocks.size(), [&](std::size_t b) {
    const auto [n, m] = blocks[b];
    const int first_nu = n == 0 ? 1 : 0;
    if (first_nu >= m) return;
    const cplx l0 = evs.values[n];
    const int jmax = m - 1;
    const auto [f1v, f2v] = bp(l0);
    require(std::abs(f1v) + std::abs(f2v) >= 1e-12 * scale, ErrorKind::SeparationViolation,
            "f1 and f2 both vanish at lambda_" + std::to_string(n));
    const std::vector<cplx> f1 = jmax == 0 ? std::vector<cplx>{f1v} : bp.f1.taylor(l0, jmax);
    const std::vector<cplx> f2 = jmax == 0 ? std::vector<cplx>{f2v} : bp.f2.taylor(l0, jmax);

    for (int nu = first_nu; nu < m; ++nu) {
      vs.v[n + nu].h1.resize(grid.nodes());
      vs.v[n + nu].h2.resize(grid.nodes());
    }
    for (int k = 0; k < grid.nodes(); ++k) {
      const double t = grid.x(k);
      if (jmax == 0) {
        vs.v[n].h1[k] = f1[0] * s_value(t, l0);
        vs.v[n].h2[k] = f2[0] * c_value(t, l0);
        continue;
      }
      const auto st = s_taylor(t, l0, jmax);
      const auto ct = c_taylor(t, l0, jmax);
      for (int nu = first_nu; nu < m; ++nu) {
        vs.v[n + nu].h1[k] = detail::cauchy_product(f1, st, nu);
        vs.v[n + nu].h2[k] = detail::cauchy_product(f2, ct, nu);
      }
    }
    const auto sp = s_taylor(kPi, l0, jmax);
    const auto cp = c_taylor(kPi, l0, jmax);
    std::vector<cplx> g1(m), g2(m);
    for (int j = 0; j < m; ++j) {
      g1[j] = l0 * cp[j] + (j > 0 ? cp[j - 1] : 0.0) + omega * sp[j];
      g2[j] = sp[j] - omega * cp[j];
    }
    for (int nu = first_nu; nu < m; ++nu)
      vs.w[n + nu] = -detail::cauchy_product(f1, g1, nu) - detail::cauchy_product(f2, g2, nu);
  });
  return vs;
}

struct Regularization {
  /// Tikhonov parameter on the diagonally scaled Gram matrix; negative selects relative_tau * ||G||.
  double tau = -1.0;
  double relative_tau = 1e-10;
};

struct MomentSolution {
  HElement u;
  std::vector<cplx> coeffs;     // u = sum_k coeffs[k] v_k
  std::vector<cplx> residuals;  // (u, v_n) - w_n
  double gram_cond = 0.0;       // condition number of the scaled Gram matrix
  double tau = 0.0;
  bool ill_conditioned = false;

  double max_residual() const {
    double r = 0.0;
    for (cplx x : residuals) r = std::max(r, std::abs(x));
    return r;
  }
};

/// Gram matrix G_nk = (v_n, v_k).
inline Eigen::MatrixXcd gram_matrix(const std::vector<double>& w, const std::vector<HElement>& v) {
  const int n = static_cast<int>(v.size());
  Eigen::MatrixXcd G(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (std::size_t k = i; k < static_cast<std::size_t>(n); ++k) {
      const cplx g = inner(w, v[i], v[k]);
      G(i, k) = g;
      G(k, i) = std::conj(g);
    }
    G(i, i) = G(i, i).real();
  });
  return G;
}

inline double hermitian_condition(const Eigen::MatrixXcd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Least-squares solution u in span{v_n} of (u, v_n) = w_n: with u = sum c_k v_k the
/// conditions read G c = conj(w).
inline MomentSolution solve_moment(const VSystem& vs, const Regularization& reg = {}) {
  const int n = static_cast<int>(vs.v.size());
  require(n >= 1 && vs.w.size() == vs.v.size(), ErrorKind::InvalidInput, "malformed vector system");
  const auto wq = quadrature_weights(vs.grid);
  const Eigen::MatrixXcd G = gram_matrix(wq, vs.v);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    require(G(i, i).real() > 0.0, ErrorKind::IllConditioned, "zero vector v_" + std::to_string(i));
    d(i) = 1.0 / std::sqrt(G(i, i).real());
  }
  const Eigen::MatrixXcd Gs = d.asDiagonal() * G * d.asDiagonal();
  MomentSolution sol;
  sol.gram_cond = hermitian_condition(Gs);
  sol.ill_conditioned = !(sol.gram_cond <= 1e12);
  const double gnorm = Gs.operatorNorm();
  sol.tau = reg.tau >= 0.0 ? reg.tau : reg.relative_tau * gnorm;
  Eigen::VectorXcd rhs(n);
  for (int i = 0; i < n; ++i) rhs(i) = d(i) * std::conj(vs.w[i]);
  const Eigen::MatrixXcd A = Gs + sol.tau * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::VectorXcd cs = A.ldlt().solve(rhs);
  sol.coeffs.resize(n);
  for (int i = 0; i < n; ++i) sol.coeffs[i] = d(i) * cs(i);

  const int nodes = vs.grid.nodes();
  sol.u = {std::vector<cplx>(nodes, 0.0), std::vector<cplx>(nodes, 0.0)};
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < nodes; ++k) {
      sol.u.h1[k] += sol.coeffs[i] * vs.v[i].h1[k];
      sol.u.h2[k] += sol.coeffs[i] * vs.v[i].h2[k];
    }
  sol.residuals.resize(n);
  for (int i = 0; i < n; ++i) sol.residuals[i] = inner(wq, sol.u, vs.v[i]) - vs.w[i];
  return sol;
}

/// Residuals (u, v_n) - w_n for a given u.
inline std::vector<cplx> moment_residuals(const VSystem& vs, const HElement& u) {
  const auto wq = quadrature_weights(vs.grid);
  std::vector<cplx> r(vs.v.size());
  for (std::size_t i = 0; i < vs.v.size(); ++i) r[i] = inner(wq, u, vs.v[i]) - vs.w[i];
  return r;
}

/// u = [conj N, conj K].
inline HElement u_of(const CauchyData& cd) {
  HElement u{cd.N, cd.K};
  for (auto& x : u.h1) x = std::conj(x);
  for (auto& x : u.h2) x = std::conj(x);
  return u;
}

/// Inverse of u_of: N = conj(u1), K = conj(u2).
inline CauchyData recovered_cauchy(const HElement& u, cplx omega, const Grid& grid = Grid(kPi, 2048)) {
  require(static_cast<int>(u.h1.size()) == grid.nodes() && static_cast<int>(u.h2.size()) == grid.nodes(),
          ErrorKind::InvalidInput, "u does not match the grid");
  CauchyData cd{grid, u.h2, u.h1, omega};
  for (auto& x : cd.K) x = std::conj(x);
  for (auto& x : cd.N) x = std::conj(x);
  return cd;
}

struct ConditionRow {
  int n;
  cplx lambda;
  cplx rho;
  double abs_f1;
  double abs_f2;
  double kappa;  // |sqrt(lambda_n) - n/2|
};

struct ConditionReport {
  std::vector<ConditionRow> rows;
  double separation_min = 0.0;
  double separation_scale = 1.0;
  bool separation_ok = true;
  int simple_last = 0;  // largest index with m_n > 1 or lambda_n = 0
  int n0 = 1;
  bool simple_ok = true;
  double asym_max_im_rho = 0.0;
  double asym_sum_inv_rho2 = 0.0;
  bool asymptotics_ok = true;
  double kappa_tail_l2 = 0.0;
  double gram_cond = 0.0;
  bool basis2_ok = true;

  bool all_ok() const { return separation_ok && simple_ok && asymptotics_ok && basis2_ok; }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!separation_ok) out.push_back("Separation");
    if (!simple_ok) out.push_back("Simple");
    if (!asymptotics_ok) out.push_back("Asymptotics");
    if (!basis2_ok) out.push_back("Basis2");
    return out;
  }
};

struct ConditionThresholds {
  double separation_rel = 1e-9;  // local ratio, see condition_report
  double max_im_rho = 5.0;
  double kappa_tail = 0.5;
  double gram_cond = 1e12;
};

/// Diagnostics for the sufficient conditions (Separation), (Simple), (Asymptotics), (Basis2).
inline ConditionReport condition_report(const BoundaryPair& bp, const EigenvalueList& evs,
                                        const Grid& grid = Grid(kPi, 1024), const ConditionThresholds& th = {}) {
  ConditionReport rep;
  const int N = evs.N();
  // Separation is judged locally: max(|f1|, |f2|) at lambda_n against its size on a small
  // circle around lambda_n, so that a common zero shows up regardless of growth elsewhere.
  rep.separation_min = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= N; ++n) {
    const cplx l = evs.values[n];
    const auto [f1, f2] = bp(l);
    const cplx rho = sqrt_branch(l);
    rep.rows.push_back({n, l, rho, std::abs(f1), std::abs(f2), std::abs(rho - 0.5 * n)});
    const double r = 1e-2 * std::max(1.0, std::abs(l));
    double local = 0.0;
    for (int p = 0; p < 8; ++p) {
      const auto [g1, g2] = bp(l + r * std::polar(1.0, 2.0 * kPi * p / 8));
      local = std::max({local, std::abs(g1), std::abs(g2)});
    }
    const double ratio = local > 0.0 ? std::max(std::abs(f1), std::abs(f2)) / local : 0.0;
    if (ratio < rep.separation_min) {
      rep.separation_min = ratio;
      rep.separation_scale = local;
    }
  }
  rep.separation_ok = rep.separation_min >= th.separation_rel;

  for (std::size_t i = 0; i < evs.index_set.size(); ++i) {
    const int n = evs.index_set[i];
    if (evs.multiplicities[i] > 1 || evs.values[n] == 0.0) rep.simple_last = n + evs.multiplicities[i] - 1;
  }
  rep.n0 = rep.simple_last + 1;
  rep.simple_ok = rep.simple_last < std::max(1, N / 2);

  for (int n = rep.n0; n <= N; ++n) {
    const cplx rho = rep.rows[n].rho;
    rep.asym_max_im_rho = std::max(rep.asym_max_im_rho, std::abs(rho.imag()));
    rep.asym_sum_inv_rho2 += 1.0 / std::norm(rho);
  }
  rep.asymptotics_ok = rep.asym_max_im_rho <= th.max_im_rho;

  double tail = 0.0;
  for (int n = std::max(rep.n0, N / 2); n <= N; ++n) tail += rep.rows[n].kappa * rep.rows[n].kappa;
  rep.kappa_tail_l2 = std::sqrt(tail);
  rep.gram_cond = std::numeric_limits<double>::infinity();
  if (rep.separation_ok) {
    try {
      const VSystem vs = build_vsystem(bp, evs, 0.0, N, grid);
      const auto wq = quadrature_weights(grid);
      std::vector<HElement> unit = vs.v;
      for (auto& h : unit) {
        const double nv = norm(wq, h);
        for (auto& x : h.h1) x /= nv;
        for (auto& x : h.h2) x /= nv;
      }
      rep.gram_cond = hermitian_condition(gram_matrix(wq, unit));
    } catch (const Error&) {
      // leave the condition number infinite
    }
  }
  rep.basis2_ok = rep.kappa_tail_l2 <= th.kappa_tail && rep.gram_cond <= th.gram_cond;
  return rep;
}

}  // namespace specrecon
