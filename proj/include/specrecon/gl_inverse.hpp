#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <vector>

#include "specrecon/analytic.hpp"
#include "specrecon/cauchy.hpp"
#include "specrecon/common.hpp"
#include "specrecon/potential.hpp"
#include "specrecon/zeros.hpp"

namespace specrecon {

/// A pole theta of the Weyl function with M[nu] = Res_{lambda=theta} (lambda - theta)^nu M(lambda).
struct WeylPole {
  cplx theta;
  int multiplicity = 1;
  std::vector<cplx> M;
};

struct WeylData {
  std::vector<WeylPole> poles;  // ordered by real part
  int n1 = 2;                   // first index (counting multiplicity, from 1) past gamma_0
  double gamma0_radius = 0.0;

  /// Pole values repeated by multiplicity: theta_1, theta_2, ...
  std::vector<cplx> thetas() const {
    std::vector<cplx> out;
    for (const auto& p : poles)
      for (int m = 0; m < p.multiplicity; ++m) out.push_back(p.theta);
    return out;
  }

  bool all_simple() const {
    for (const auto& p : poles)
      if (p.multiplicity != 1) return false;
    return true;
  }
};

struct WeylOptions {
  double half_height = -1.0;  // negative: 25 + 4 |omega|
  double re_min = 0.0;        // used when re_max > 0 ... otherwise -1 - 4 |omega|
  double re_max = -1.0;       // negative: (count + 0.5)^2 + 2 |omega|
  double cluster_tol = 1e-6;
};

/// Contour residues of (lambda - theta)^nu f(lambda), nu = 0..jmax, on a circle of radius r.
inline std::vector<cplx> contour_residues(const std::function<cplx(cplx)>& f, cplx theta, double r, int jmax,
                                          int points = 128) {
  std::vector<cplx> res(static_cast<std::size_t>(jmax) + 1, 0.0);
  for (int p = 0; p < points; ++p) {
    const cplx d = r * std::polar(1.0, 2.0 * kPi * p / points);
    const cplx fv = f(theta + d);
    cplx pw = d;  // (z - theta)^(nu+1) dz/(2 pi i dtheta) reduces to d^(nu+1)
    for (int nu = 0; nu <= jmax; ++nu) {
      res[nu] += fv * pw;
      pw *= d;
    }
  }
  for (auto& x : res) x /= static_cast<double>(points);
  return res;
}

/// Poles theta_n (zeros of eta1) and residues of M = eta2/eta1, for the first `count` poles.
inline WeylData weyl_data(const CauchyData& cd, int count, const WeylOptions& opt = {}) {
  cd.validate();
  require(count >= 2, ErrorKind::InvalidInput, "weyl_data needs at least two poles");
  const double wabs = std::abs(cd.omega);
  SearchRegion region;
  region.re_min = -1.0 - 4.0 * wabs;
  region.re_max = opt.re_max > 0.0 ? opt.re_max : (count + 0.5) * (count + 0.5) + 2.0 * wabs;
  region.half_height = opt.half_height > 0.0 ? opt.half_height : 25.0 + 4.0 * wabs;
  region.max_count = count;
  auto eta1 = [&](cplx l) { return rebuild_eta(cd, l).first; };
  auto zeros = locate_zeros(eta1, region);
  std::sort(zeros.begin(), zeros.end(), [](const Zero& a, const Zero& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  WeylData wd;
  int have = 0;
  for (const Zero& z : zeros) {
    if (have >= count) break;
    wd.poles.push_back({z.value, z.multiplicity, {}});
    have += z.multiplicity;
  }
  require(have >= count, ErrorKind::RootCountMismatch,
          "found " + std::to_string(have) + " poles, need " + std::to_string(count));

  // gamma_0: smallest n1 >= 2 with simple poles from n1 on and |theta_n1| > |theta_{n1-1}|.
  const auto th = wd.thetas();
  const int total = static_cast<int>(th.size());
  std::vector<int> mult_at(total);
  {
    int idx = 0;
    for (const auto& p : wd.poles)
      for (int m = 0; m < p.multiplicity; ++m) mult_at[idx++] = p.multiplicity;
  }
  int n1 = total;
  for (int cand = total; cand >= 2; --cand) {
    bool simple_tail = true;
    for (int i = cand - 1; i < total; ++i) simple_tail = simple_tail && mult_at[i] == 1;
    if (!simple_tail) break;
    if (std::abs(th[cand - 1]) > std::abs(th[cand - 2])) n1 = cand;
  }
  wd.n1 = n1;
  wd.gamma0_radius = 0.5 * (std::abs(th[n1 - 1]) + std::abs(th[n1 - 2]));

  auto M = [&](cplx l) {
    const auto [e1, e2] = rebuild_eta(cd, l);
    return e2 / e1;
  };
  const std::size_t np = wd.poles.size();
  for (std::size_t i = 0; i < np; ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < zeros.size(); ++j)
      if (zeros[j].value != wd.poles[i].theta) nn = std::min(nn, std::abs(zeros[j].value - wd.poles[i].theta));
    const double scale = std::max(1.0, std::abs(wd.poles[i].theta));
    if (wd.poles[i].multiplicity == 1 && i + 1 < np && wd.poles[i + 1].multiplicity == 1)
      require(std::abs(wd.poles[i + 1].theta - wd.poles[i].theta) > opt.cluster_tol * scale,
              ErrorKind::PoleClusterError, "two simple poles closer than the contour radius");
    const double r = std::min(0.25 * nn, 0.5);
    wd.poles[i].M = contour_residues(M, wd.poles[i].theta, r, wd.poles[i].multiplicity - 1);
  }
  return wd;
}

/// Reconstruction by the Gelfand-Levitan equation from {theta_n, 1/M_n}.
///
/// Reference problem: constant potential c = 2 omega / pi with Dirichlet data
/// theta~_n = n^2 + c, alpha~_n = pi/(2 n^2). The kernel F is degenerate (finite sum of products),
/// so the integral equation reduces at each x to a linear system of size 2 * count.
/// Norming constants 1/M_n belong to the reflected potential q(pi - x), so the result is
/// reflected back; the additive constant is then fixed by (1/2) int q = omega.
inline Potential reconstruct_q(const WeylData& wd, cplx omega, const Grid& grid = Grid(kPi, 2048)) {
  require(wd.all_simple(), ErrorKind::NotSupported, "reconstruction requires simple Weyl poles");
  require(std::abs(grid.endpoint() - kPi) < 1e-12, ErrorKind::InvalidGrid, "reconstruction grid must be [0, pi]");
  const int count = static_cast<int>(wd.poles.size());
  const cplx c = 2.0 * omega / kPi;
  const int m = 2 * count;
  std::vector<cplx> a(m), weight(m);
  for (int n = 1; n <= count; ++n) {
    const auto& p = wd.poles[n - 1];
    require(!p.M.empty() && p.M[0] != 0.0, ErrorKind::InvalidInput, "zero Weyl residue");
    a[n - 1] = sqrt_branch(p.theta - c);
    weight[n - 1] = p.M[0];
    a[count + n - 1] = static_cast<double>(n);
    weight[count + n - 1] = -2.0 * n * n / kPi;
  }
  for (auto& x : a)
    if (std::abs(x) < 1e-8) x = 1e-8;

  std::vector<cplx> dd(grid.nodes(), 0.0);  // d/dx A(x, x)
  parallel_for(static_cast<std::size_t>(grid.nodes()), [&](std::size_t kk) {
    const double x = grid.x(static_cast<int>(kk));
    Eigen::VectorXcd phi(m), dphi(m);
    for (int i = 0; i < m; ++i) {
      phi(i) = sin_over_rho(a[i], x);
      dphi(i) = std::cos(a[i] * x);
    }
    Eigen::MatrixXcd A(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        const cplx pij = 0.5 * x * (sinc((a[i] - a[j]) * x) - sinc((a[i] + a[j]) * x)) / (a[i] * a[j]);
        A(i, j) = weight[i] * pij;
        A(j, i) = weight[j] * pij;
      }
    A += Eigen::MatrixXcd::Identity(m, m);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    require(lu.rcond() > 1e-12, ErrorKind::SingularNystrom,
            "Gelfand-Levitan system is singular at x = " + std::to_string(x));
    Eigen::VectorXcd wphi(m);
    for (int i = 0; i < m; ++i) wphi(i) = weight[i] * phi(i);
    const Eigen::VectorXcd rphi = lu.solve(wphi);  // R phi with R = (I + W P)^{-1} W
    const cplx D = -phi.transpose() * rphi;
    const cplx dphiR = dphi.transpose() * rphi;
    dd[kk] = -2.0 * dphiR + D * D;
  });

  // Residues behave like 2 n^2/pi + m1 + O(n^-2). The truncated tail m1 sum_{n>count}
  // sin(nx) sin(nt)/n^2 of the kernel is restored to first order:
  //   q += -2 m1 sum_{n>count} sin(2nx)/n,  with sum_{n>=1} sin(2nx)/n = (pi - 2x)/2 on (0, pi).
  cplx m1 = 0.0;
  if (count >= 8) {
    std::vector<cplx> dm(count + 1, 0.0);
    for (int n = 1; n <= count; ++n) dm[n] = wd.poles[n - 1].M[0] - 2.0 * n * n / kPi;
    m1 = detail::fit_tail(dm, count / 2, count, {[](int) { return 1.0; }, [](int n) { return 1.0 / (double(n) * n); }})[0];
  }
  auto tail = [&](double x) {
    double partial = 0.0;
    for (int n = 1; n <= count; ++n) partial += std::sin(2.0 * n * x) / n;
    return 0.5 * (kPi - 2.0 * x) - partial;
  };

  std::vector<cplx> qv(grid.nodes());
  for (int k = 0; k < grid.nodes(); ++k) {
    const int kr = grid.intervals() - k;
    qv[k] = c + 2.0 * dd[kr] - 2.0 * m1 * tail(grid.x(kr));
  }
  Potential raw(grid, qv);
  const cplx shift = (2.0 * omega - raw.integral()) / kPi;
  for (auto& v : qv) v += shift;
  return Potential(grid, std::move(qv), "reconstructed");
}

/// Columns: n, Re theta, Im theta, multiplicity, Re M, Im M; one row per index n + nu.
inline void write_weyl(const std::string& path, const WeylData& wd) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  out << "n,re_theta,im_theta,multiplicity,re_M,im_M\n";
  char buf[256];
  int n = 1;
  for (const auto& p : wd.poles)
    for (int nu = 0; nu < p.multiplicity; ++nu, ++n) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d,%.17g,%.17g\n", n, p.theta.real(), p.theta.imag(),
                    p.multiplicity, p.M[nu].real(), p.M[nu].imag());
      out << buf;
    }
}

}  // namespace specrecon
