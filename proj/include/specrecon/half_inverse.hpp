#pragma once

#include <optional>
#include <vector>

#include "specrecon/analytic.hpp"
#include "specrecon/cauchy.hpp"
#include "specrecon/gl_inverse.hpp"
#include "specrecon/recon.hpp"
#include "specrecon/sl_core.hpp"

namespace specrecon {

/// Potential known on (pi, 2 pi) together with the Dirichlet spectrum of the whole interval.
struct HalfInverseInstance {
  Potential q_known;  // grid on [0, 2 pi]; samples on [0, pi) are ignored
  EigenvalueList spectrum;
  std::optional<cplx> Omega;  // (1/2) int_0^{2 pi} q; estimated from the spectrum when absent
};

inline int midpoint_node(const Potential& q) {
  const Grid& g = q.grid();
  require(std::abs(g.endpoint() - 2.0 * kPi) < 1e-12, ErrorKind::InvalidGrid, "known half must live on a [0, 2 pi] grid");
  require(g.intervals() % 2 == 0, ErrorKind::InvalidGrid, "[0, 2 pi] grid needs an even interval count");
  return g.intervals() / 2;
}

/// f1 = psi(pi, lambda), f2 = -psi'(pi, lambda) for the backward solution psi(2 pi) = 0, psi'(2 pi) = -1.
inline BoundaryPair build_boundary_pair(const Potential& q_known, const IntegratorOptions& opt = {}) {
  const int mid = midpoint_node(q_known);
  auto joint = [q_known, mid, opt](cplx l) {
    const auto [psi, dpsi] = psi_at(q_known, l, mid, opt);
    return std::pair<cplx, cplx>{psi, -dpsi};
  };
  AnalyticHandle f1([joint](cplx l) { return joint(l).first; });
  AnalyticHandle f2([joint](cplx l) { return joint(l).second; });
  return {std::move(f1), std::move(f2), "hl", joint};
}

/// Fits (sqrt(lambda_n) - n pi/length) pi n = Omega + beta / n^2 over the upper half of the
/// indices, for a Dirichlet spectrum on (0, length); Omega = (1/2) int q.
inline cplx estimate_Omega(const EigenvalueList& spectrum, double length = 2.0 * kPi) {
  const int N = spectrum.N();
  require(N >= 20, ErrorKind::InvalidInput, "estimating Omega needs at least 20 eigenvalues");
  std::vector<cplx> y(N + 1, 0.0);
  for (int n = 1; n <= N; ++n) y[n] = (sqrt_branch(spectrum.values[n]) - n * kPi / length) * kPi * static_cast<double>(n);
  const int from = N / 2;
  const auto c = detail::fit_tail(y, from, N, {[](int) { return 1.0; }, [](int n) { return 1.0 / (double(n) * n); }});
  double rms = 0.0;
  for (int n = from; n <= N; ++n) rms += std::norm(y[n] - c[0] - c[1] / (double(n) * n));
  rms = std::sqrt(rms / (N - from + 1));
  require(rms <= 0.1 * std::abs(c[0]) + 0.1, ErrorKind::FitUnstable,
          "eigenvalue asymptotics do not fit sqrt(lambda_n) = n pi/length + Omega/(pi n)");
  return c[0];
}

/// omega = Omega - (1/2) int_pi^{2 pi} q_known.
inline cplx omega_from_instance(const HalfInverseInstance& inst) {
  const cplx Omega = inst.Omega ? *inst.Omega : estimate_Omega(inst.spectrum);
  const int mid = midpoint_node(inst.q_known);
  return Omega - 0.5 * inst.q_known.integral(mid, inst.q_known.grid().intervals());
}

/// Dirichlet eigenvalues of q on its whole grid (endpoint a): zeros of S(a, lambda).
inline EigenvalueList dirichlet_spectrum(const Potential& q, int count, double half_height = 25.0) {
  const double a = q.grid().endpoint();
  const double scale = kPi / a;  // sqrt(lambda_n) ~ n pi / a
  double qmax = 0.0;
  for (cplx v : q.values()) qmax = std::max(qmax, std::abs(v));
  SearchRegion region;
  region.re_min = -1.0 - qmax;
  region.re_max = std::pow((count + 1.5) * scale, 2) + qmax;
  region.half_height = half_height + qmax;
  region.max_count = count;
  const auto list = find_eigenvalues(boundary_preset("dirichlet"), q, region);
  require(list.N() >= count, ErrorKind::RootCountMismatch,
          "found " + std::to_string(list.N()) + " eigenvalues, need " + std::to_string(count));
  return list;
}

struct HalfInverseOptions {
  Grid grid{kPi, 2048};
  Regularization reg{};
  int count = -1;  // Weyl poles used for reconstruction; negative selects N / 2
  bool check_conditions = true;
  ConditionThresholds thresholds{};
};

struct HalfInverseResult {
  Potential q;
  cplx omega = 0.0;
  ConditionReport conditions;
  MomentSolution moment;
  CauchyData cauchy;
  WeylData weyl;
};

/// Hochstadt-Lieberman reconstruction of q on (0, pi): boundary pair from the known half,
/// moment problem for the Cauchy data, Weyl data and Gelfand-Levitan reconstruction.
inline HalfInverseResult solve_half_inverse(const HalfInverseInstance& inst, int N, const HalfInverseOptions& opt = {}) {
  require(N >= 5, ErrorKind::InvalidInput, "N must be at least 5");
  HalfInverseResult res;
  const BoundaryPair bp = build_boundary_pair(inst.q_known);
  const EigenvalueList evs = inst.spectrum.truncated(N);
  res.conditions = condition_report(bp, evs, Grid(kPi, 1024), opt.thresholds);
  if (opt.check_conditions && !res.conditions.all_ok()) {
    std::string what;
    for (const auto& v : res.conditions.violations()) what += (what.empty() ? "" : ", ") + v;
    fail(ErrorKind::ConditionAbort, "sufficient conditions violated: " + what);
  }
  res.omega = omega_from_instance(inst);
  const VSystem vs = build_vsystem(bp, evs, res.omega, N, opt.grid);
  res.moment = solve_moment(vs, opt.reg);
  res.cauchy = recovered_cauchy(res.moment.u, res.omega, opt.grid);
  const int count = opt.count > 0 ? opt.count : N / 2;
  res.weyl = weyl_data(res.cauchy, count);
  res.q = reconstruct_q(res.weyl, res.omega, opt.grid);
  return res;
}

/// Concatenates q on [0, pi] with the known half into a potential on [0, 2 pi].
inline Potential join_halves(const Potential& left, const Potential& q_known) {
  const int mid = midpoint_node(q_known);
  const Grid& g = q_known.grid();
  std::vector<cplx> v(q_known.values());
  for (int k = 0; k <= mid; ++k) v[k] = left.at(g.x(k));
  std::vector<Potential::Jump> jumps;
  const cplx right = q_known.right_value(mid);
  if (right != v[mid]) jumps.push_back({mid, right});
  return Potential(g, std::move(v), "joined", std::move(jumps));
}

}  // namespace specrecon
