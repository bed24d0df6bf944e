#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "specrecon/cauchy.hpp"
#include "specrecon/gl_inverse.hpp"
#include "specrecon/potential.hpp"

namespace specrecon {

struct PerturbationReport {
  int trial = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;
  double Xi = 0.0;            // max(||K - K~||, ||N - N~||)
  double q_err = 0.0;         // ||q - q~||
  double xi_l2 = 0.0;         // (sum_{n >= n1} (n xi_n)^2)^{1/2}
  double M_gamma0_err = 0.0;  // max over gamma_0 of |M - M~|
  double C_est = 0.0;         // q_err / Xi
  double mean_diff = 0.0;     // |int (q - q~)|
  bool ok = true;
  std::string error;
};

struct NoiseSpec {
  double delta = 1e-3;
  int modes = 8;
};

struct StabilityOptions {
  int count = 40;  // Weyl poles per reconstruction and terms in the xi sum
  Grid grid{kPi, 2048};
  int gamma0_points = 128;
};

/// Adds sum_{m=1..modes} a_m cos(m t) to K and sum b_m sin(m t) to N with complex normal
/// coefficients, each perturbation scaled to L2 norm delta. The cosine sum has zero mean, so
/// int K and hence the mean of the potential are unchanged; omega is kept fixed.
inline CauchyData perturb_cauchy(const CauchyData& cd, const NoiseSpec& noise, std::uint64_t seed) {
  require(noise.delta >= 0.0 && noise.modes >= 1, ErrorKind::InvalidInput, "bad noise specification");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Grid& g = cd.grid;
  const auto w = quadrature_weights(g);
  std::vector<cplx> a(noise.modes), b(noise.modes);
  for (int m = 0; m < noise.modes; ++m) a[m] = {gauss(rng), gauss(rng)};
  for (int m = 0; m < noise.modes; ++m) b[m] = {gauss(rng), gauss(rng)};
  std::vector<cplx> dK(g.nodes(), 0.0), dN(g.nodes(), 0.0);
  for (int k = 0; k < g.nodes(); ++k) {
    const double t = g.x(k);
    for (int m = 1; m <= noise.modes; ++m) {
      dK[k] += a[m - 1] * std::cos(m * t);
      dN[k] += b[m - 1] * std::sin(m * t);
    }
  }
  const double nk = l2_norm(w, dK), nn = l2_norm(w, dN);
  CauchyData out = cd;
  for (int k = 0; k < g.nodes(); ++k) {
    out.K[k] += noise.delta * dK[k] / nk;
    out.N[k] += noise.delta * dN[k] / nn;
  }
  return out;
}

inline double cauchy_distance(const CauchyData& a, const CauchyData& b) {
  const auto w = quadrature_weights(a.grid);
  return std::max(l2_distance(w, a.K, b.K), l2_distance(w, a.N, b.N));
}

struct WeylDistance {
  double Xi = 0.0;
  double xi_l2 = 0.0;
  double M_gamma0_err = 0.0;
  std::vector<double> xi;  // xi_n for n = n1..count (index 0 is n1)
  int n1 = 2;
};

/// Both sides of the perturbation estimates for two sets of Cauchy data and their Weyl data.
inline WeylDistance weyl_distance(const CauchyData& cd, const WeylData& wd, const CauchyData& cdt, const WeylData& wdt,
                                  int gamma0_points = 128) {
  WeylDistance out;
  out.Xi = cauchy_distance(cd, cdt);
  out.n1 = wd.n1;
  const auto th = wd.thetas();
  const auto tht = wdt.thetas();
  auto residue = [](const WeylData& d, int n) {
    int idx = 0;
    for (const auto& p : d.poles)
      for (int m = 0; m < p.multiplicity; ++m, ++idx)
        if (idx == n - 1) return p.M[m];
    return cplx(0.0);
  };
  std::vector<int> partner(th.size() + 1, -1);
  std::vector<int> used(tht.size() + 1, 0);
  for (int n = wd.n1; n <= static_cast<int>(th.size()); ++n) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= static_cast<int>(tht.size()); ++j) {
      const double d = std::abs(tht[j - 1] - th[n - 1]);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    require(best > 0 && used[best] == 0, ErrorKind::PairingAmbiguous,
            "nearest-pole pairing is not injective at n = " + std::to_string(n));
    used[best] = 1;
    partner[n] = best;
  }
  double acc = 0.0;
  for (int n = wd.n1; n <= static_cast<int>(th.size()); ++n) {
    const int j = partner[n];
    const double xi = std::abs(sqrt_branch(th[n - 1]) - sqrt_branch(tht[j - 1])) +
                      std::abs(residue(wd, n) - residue(wdt, j)) / (double(n) * n);
    out.xi.push_back(xi);
    acc += std::pow(n * xi, 2);
  }
  out.xi_l2 = std::sqrt(acc);
  for (int p = 0; p < gamma0_points; ++p) {
    const cplx l = wd.gamma0_radius * std::polar(1.0, 2.0 * kPi * (p + 0.5) / gamma0_points);
    const auto [e1, e2] = rebuild_eta(cd, l);
    const auto [f1, f2] = rebuild_eta(cdt, l);
    out.M_gamma0_err = std::max(out.M_gamma0_err, std::abs(e2 / e1 - f2 / f1));
  }
  return out;
}

/// Spectral-data distances and reconstruction error between two potentials on (0, pi).
inline PerturbationReport lemma53_check(const Potential& q, const Potential& q_tilde, const StabilityOptions& opt = {}) {
  const CauchyData cd = cauchy_data_of(q), cdt = cauchy_data_of(q_tilde);
  const WeylData wd = weyl_data(cd, opt.count), wdt = weyl_data(cdt, opt.count);
  const WeylDistance l = weyl_distance(cd, wd, cdt, wdt, opt.gamma0_points);
  PerturbationReport r;
  r.Xi = l.Xi;
  r.xi_l2 = l.xi_l2;
  r.M_gamma0_err = l.M_gamma0_err;
  r.q_err = l2_distance(quadrature_weights(q.grid()), q.values(), q_tilde.values());
  r.mean_diff = std::abs(q.integral() - q_tilde.integral());
  r.C_est = r.Xi > 0.0 ? r.q_err / r.Xi : 0.0;
  return r;
}

/// Random perturbations of the Cauchy data of q, each reconstructed and measured. Trial i
/// uses seed + i. Failed trials are recorded with ok = false.
inline std::vector<PerturbationReport> perturb_and_measure(const Potential& q, const NoiseSpec& noise, int trials,
                                                           std::uint64_t seed, const StabilityOptions& opt = {}) {
  require(trials >= 1, ErrorKind::InvalidInput, "need at least one trial");
  const CauchyData cd = cauchy_data_of(q);
  const WeylData wd = weyl_data(cd, opt.count);
  const auto w = quadrature_weights(q.grid());
  std::vector<PerturbationReport> out;
  for (int t = 0; t < trials; ++t) {
    PerturbationReport r;
    r.trial = t;
    r.seed = seed + static_cast<std::uint64_t>(t);
    r.delta = noise.delta;
    try {
      const CauchyData cdt = perturb_cauchy(cd, noise, r.seed);
      const WeylData wdt = weyl_data(cdt, opt.count);
      const Potential qt = reconstruct_q(wdt, cdt.omega, q.grid());
      const WeylDistance l = weyl_distance(cd, wd, cdt, wdt, opt.gamma0_points);
      r.Xi = l.Xi;
      r.xi_l2 = l.xi_l2;
      r.M_gamma0_err = l.M_gamma0_err;
      r.q_err = l2_distance(w, q.values(), qt.values());
      r.mean_diff = std::abs(q.integral() - qt.integral());
      r.C_est = r.Xi > 0.0 ? r.q_err / r.Xi : 0.0;
      r.ok = is_finite(r.q_err) && is_finite(r.xi_l2) && is_finite(r.M_gamma0_err);
      if (!r.ok) r.error = "non-finite measurement";
    } catch (const Error& e) {
      r.ok = false;
      r.error = e.what();
    }
    out.push_back(r);
  }
  return out;
}

inline double median(std::vector<double> v) {
  require(!v.empty(), ErrorKind::InvalidInput, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SweepLevel {
  double delta;
  double median_Xi;
  double median_q_err;
  double median_ratio_gamma0;  // M_gamma0_err / Xi
  double median_ratio_xi;      // xi_l2 / Xi
  int failures;
};

struct SweepResult {
  std::vector<PerturbationReport> reports;
  std::vector<SweepLevel> levels;
  double slope = 0.0;  // d log(median q_err) / d log(median Xi)
  double ratio_variation_gamma0 = 0.0;  // max/min across levels
  double ratio_variation_xi = 0.0;
};

/// Medians of one sweep level over its successful trials.
inline SweepLevel summarize_level(double delta, const std::vector<PerturbationReport>& reps) {
  std::vector<double> xi, qe, rg, rx;
  int fails = 0;
  for (const auto& r : reps) {
    if (!r.ok || r.Xi <= 0.0) {
      ++fails;
      continue;
    }
    xi.push_back(r.Xi);
    qe.push_back(r.q_err);
    rg.push_back(r.M_gamma0_err / r.Xi);
    rx.push_back(r.xi_l2 / r.Xi);
  }
  require(!xi.empty(), ErrorKind::InvalidInput, "every trial failed at delta = " + std::to_string(delta));
  return {delta, median(xi), median(qe), median(rg), median(rx), fails};
}

/// Runs every amplitude and fits the least-squares slope of log(median q_err) against
/// log(median Xi). With a single amplitude the slope and variations are NaN.
inline SweepResult stability_sweep(const Potential& q, const std::vector<double>& deltas, int modes, int trials,
                                   std::uint64_t seed, const StabilityOptions& opt = {}) {
  require(!deltas.empty(), ErrorKind::InvalidInput, "a sweep needs at least one amplitude");
  SweepResult res;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const auto reps = perturb_and_measure(q, {deltas[i], modes}, trials, seed + 1000 * i, opt);
    res.reports.insert(res.reports.end(), reps.begin(), reps.end());
    res.levels.push_back(summarize_level(deltas[i], reps));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (res.levels.size() < 2) {
    res.slope = res.ratio_variation_gamma0 = res.ratio_variation_xi = nan;
    return res;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(res.levels.size());
  for (const auto& l : res.levels) {
    const double x = std::log(l.median_Xi), y = std::log(l.median_q_err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  res.slope = den > 0.0 ? (n * sxy - sx * sy) / den : nan;
  auto variation = [&](double SweepLevel::*field) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& l : res.levels) {
      lo = std::min(lo, l.*field);
      hi = std::max(hi, l.*field);
    }
    return hi / lo;
  };
  res.ratio_variation_gamma0 = variation(&SweepLevel::median_ratio_gamma0);
  res.ratio_variation_xi = variation(&SweepLevel::median_ratio_xi);
  return res;
}

/// Smallest amplitude in `deltas` (scanned in order) at which reconstruction fails; 0 if none does.
inline double breakdown_amplitude(const Potential& q, const std::vector<double>& deltas, int modes, std::uint64_t seed,
                                  const StabilityOptions& opt = {}) {
  for (double d : deltas) {
    const auto reps = perturb_and_measure(q, {d, modes}, 1, seed, opt);
    if (!reps.front().ok) return d;
  }
  return 0.0;
}

}  // namespace specrecon
