#pragma once

#include <vector>

#include "specrecon/common.hpp"
#include "specrecon/potential.hpp"

namespace specrecon {

/// Square root pair (lambda, rho) with arg rho in [-pi/2, pi/2).
struct SpectralPoint {
  cplx lambda;
  cplx rho;

  explicit SpectralPoint(cplx l) : lambda(l), rho(sqrt_branch(l)) {}
};

struct SolutionSample {
  cplx S;
  cplx Sprime;
  double x;
  cplx lambda;
};

struct IntegratorOptions {
  double lambda_guard = 1e8;
  double overflow_guard = 1e300;
};

namespace detail {

// One step of the fourth-order Magnus integrator for (y, y')' = [[0,1],[q-lambda,0]] (y, y').
// The exponential of a traceless 2x2 matrix Omega is cosh(s) I + sinh(s)/s Omega, s^2 = -det Omega.
struct Propagator {
  cplx m00, m01, m10, m11;
};

inline Propagator magnus_step(cplx a_first, cplx a_second, double h) {
  // a_first is sampled at the Gauss point visited first along the direction of integration.
  const cplx abar = 0.5 * (a_first + a_second);
  const cplx d = (std::sqrt(3.0) / 12.0) * h * h * (a_first - a_second);
  const cplx s2 = d * d + h * h * abar;
  cplx ch;
  cplx sh;  // sinh(s)/s
  if (std::abs(s2) < 1e-6) {
    ch = 1.0 + s2 / 2.0 * (1.0 + s2 / 12.0 * (1.0 + s2 / 30.0));
    sh = 1.0 + s2 / 6.0 * (1.0 + s2 / 20.0 * (1.0 + s2 / 42.0));
  } else {
    const cplx s = std::sqrt(s2);
    ch = std::cosh(s);
    sh = std::sinh(s) / s;
  }
  return {ch + sh * d, sh * h, sh * h * abar, ch - sh * d};
}

template <class Visit>
void propagate(const Potential& q, cplx lambda, cplx y, cplx dy, bool backward, int stop_node,
               const IntegratorOptions& opt, Visit&& visit) {
  require(q.grid().intervals() >= 1, ErrorKind::InvalidGrid, "empty grid");
  require(std::abs(lambda) <= opt.lambda_guard, ErrorKind::OverflowGuard, "|lambda| above guard");
  require(is_finite(lambda), ErrorKind::InvalidInput, "non-finite lambda");
  const double h = q.grid().spacing();
  const int n = q.grid().intervals();
  auto check = [&](int k) {
    if (!(std::abs(y) < opt.overflow_guard && std::abs(dy) < opt.overflow_guard))
      fail(ErrorKind::OverflowGuard, "solution magnitude exceeded guard at node " + std::to_string(k));
  };
  if (!backward) {
    visit(0, y, dy);
    for (int k = 0; k < std::min(n, stop_node); ++k) {
      const auto [g1, g2] = q.gauss(k);
      const Propagator p = magnus_step(g1 - lambda, g2 - lambda, h);
      const cplx ny = p.m00 * y + p.m01 * dy;
      dy = p.m10 * y + p.m11 * dy;
      y = ny;
      check(k + 1);
      visit(k + 1, y, dy);
    }
  } else {
    visit(n, y, dy);
    for (int k = n - 1; k >= stop_node; --k) {
      const auto [g1, g2] = q.gauss(k);
      const Propagator p = magnus_step(g2 - lambda, g1 - lambda, -h);
      const cplx ny = p.m00 * y + p.m01 * dy;
      dy = p.m10 * y + p.m11 * dy;
      y = ny;
      check(k);
      visit(k, y, dy);
    }
  }
}

}  // namespace detail

/// Solution of -y'' + q y = lambda y with y(0) = y0, y'(0) = dy0 at every node.
inline std::vector<SolutionSample> integrate_initial(const Potential& q, cplx lambda, cplx y0, cplx dy0,
                                                     const IntegratorOptions& opt = {}) {
  std::vector<SolutionSample> out(q.grid().nodes());
  detail::propagate(q, lambda, y0, dy0, false, q.grid().intervals(), opt, [&](int k, cplx y, cplx dy) {
    out[k] = {y, dy, q.grid().x(k), lambda};
  });
  return out;
}

/// S(x, lambda): S(0) = 0, S'(0) = 1.
inline std::vector<SolutionSample> integrate_S(const Potential& q, cplx lambda, const IntegratorOptions& opt = {}) {
  return integrate_initial(q, lambda, 0.0, 1.0, opt);
}

/// (S, S') at the right endpoint only.
inline std::pair<cplx, cplx> S_endpoint(const Potential& q, cplx lambda, const IntegratorOptions& opt = {}) {
  cplx S = 0.0, dS = 1.0;
  detail::propagate(q, lambda, 0.0, 1.0, false, q.grid().intervals(), opt, [&](int, cplx y, cplx dy) {
    S = y;
    dS = dy;
  });
  return {S, dS};
}

/// Backward solution psi: psi(a) = 0, psi'(a) = -1, sampled on nodes stop_node..M.
inline std::vector<SolutionSample> integrate_psi(const Potential& q, cplx lambda, int stop_node = 0,
                                                 const IntegratorOptions& opt = {}) {
  const int n = q.grid().intervals();
  require(stop_node >= 0 && stop_node <= n, ErrorKind::InvalidInput, "stop node outside grid");
  std::vector<SolutionSample> out(static_cast<std::size_t>(n - stop_node) + 1);
  detail::propagate(q, lambda, 0.0, -1.0, true, stop_node, opt, [&](int k, cplx y, cplx dy) {
    out[k - stop_node] = {y, dy, q.grid().x(k), lambda};
  });
  return out;
}

/// (psi, psi') at node stop_node.
inline std::pair<cplx, cplx> psi_at(const Potential& q, cplx lambda, int stop_node,
                                    const IntegratorOptions& opt = {}) {
  cplx y = 0.0, dy = -1.0;
  detail::propagate(q, lambda, 0.0, -1.0, true, stop_node, opt, [&](int, cplx a, cplx b) {
    y = a;
    dy = b;
  });
  return {y, dy};
}

/// omega = (1/2) * integral of q over the grid.
inline cplx omega_of(const Potential& q) { return 0.5 * q.integral(); }

}  // namespace specrecon
