#pragma once

#include <optional>
#include <sstream>
#include <vector>

#include "specrecon/common.hpp"
#include "specrecon/potential.hpp"
#include "specrecon/sl_core.hpp"
#include "specrecon/zeros.hpp"

namespace specrecon {

enum class DerivativeMode { closed_form, contour };

/// Entire function of lambda with access to normalized derivatives f^<j> = f^(j) / j!.
class AnalyticHandle {
 public:
  using Eval = std::function<cplx(cplx)>;
  /// Returns f^<0..jmax>(lambda).
  using Taylor = std::function<std::vector<cplx>(cplx, int)>;

  AnalyticHandle() : AnalyticHandle(constant(0.0)) {}

  /// Handle whose derivatives come from the Cauchy integral formula.
  AnalyticHandle(Eval f, double contour_radius = 1e-2)
      : eval_(std::move(f)), mode_(DerivativeMode::contour), radius_(contour_radius) {
    require(radius_ > 0.0, ErrorKind::InvalidInput, "contour radius must be positive");
  }

  /// Handle with closed-form derivatives.
  AnalyticHandle(Eval f, Taylor taylor, double contour_radius = 1e-2)
      : eval_(std::move(f)), taylor_(std::move(taylor)), mode_(DerivativeMode::closed_form),
        radius_(contour_radius) {}

  static AnalyticHandle constant(cplx c) { return polynomial({c}); }

  /// Polynomial with ascending coefficients.
  static AnalyticHandle polynomial(std::vector<cplx> coeffs) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    auto f = [coeffs](cplx l) {
      cplx acc = 0.0;
      for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * l + *it;
      return acc;
    };
    auto t = [coeffs](cplx l, int jmax) {
      std::vector<cplx> out(static_cast<std::size_t>(jmax) + 1, 0.0);
      const int deg = static_cast<int>(coeffs.size()) - 1;
      for (int j = 0; j <= std::min(jmax, deg); ++j) {
        // sum_k C(k, j) c_k l^(k-j), Horner in l
        cplx acc = 0.0;
        for (int k = deg; k >= j; --k) acc = acc * l + binomial(k, j) * coeffs[k];
        out[j] = acc;
      }
      return out;
    };
    return AnalyticHandle(f, t);
  }

  cplx operator()(cplx lambda) const { return eval_(lambda); }

  DerivativeMode mode() const { return mode_; }
  double contour_radius() const { return radius_; }

  /// f^<0..jmax>(lambda) in the handle's own mode.
  std::vector<cplx> taylor(cplx lambda, int jmax) const {
    require(jmax >= 0, ErrorKind::InvalidInput, "derivative order must be non-negative");
    if (mode_ == DerivativeMode::closed_form) return taylor_(lambda, jmax);
    if (jmax == 0) return {eval_(lambda)};
    return contour_taylor(lambda, jmax);
  }

  /// Cauchy-integral derivatives: trapezoid rule on 128 points, compared against the
  /// 64-point subset.
  std::vector<cplx> contour_taylor(cplx lambda, int jmax) const {
    constexpr int kFine = 128;
    std::vector<cplx> samples(kFine);
    double fmax = 0.0;
    for (int p = 0; p < kFine; ++p) {
      samples[p] = eval_(lambda + radius_ * std::polar(1.0, 2.0 * kPi * p / kFine));
      fmax = std::max(fmax, std::abs(samples[p]));
    }
    std::vector<cplx> out(static_cast<std::size_t>(jmax) + 1);
    for (int j = 0; j <= jmax; ++j) {
      cplx fine = 0.0, coarse = 0.0;
      for (int p = 0; p < kFine; ++p) {
        const cplx term = samples[p] * std::polar(1.0, -2.0 * kPi * j * p / kFine);
        fine += term;
        if (p % 2 == 0) coarse += term;
      }
      const double scale = std::pow(radius_, -j);
      fine *= scale / static_cast<double>(kFine);
      coarse *= scale / static_cast<double>(kFine / 2);
      const double allowed = 1e-6 * std::abs(fine) + 1e-10 * fmax * scale;
      require(std::abs(fine - coarse) <= allowed, ErrorKind::QuadratureDivergence,
              "64- and 128-point contour derivatives disagree at order " + std::to_string(j));
      out[j] = fine;
    }
    return out;
  }

 private:
  static double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }

  Eval eval_;
  Taylor taylor_;
  DerivativeMode mode_;
  double radius_ = 1e-2;
};

/// Normalized derivative f^<j>(lambda).
inline cplx derivative(const AnalyticHandle& f, cplx lambda, int j) { return f.taylor(lambda, j)[j]; }

/// Boundary condition f1(lambda) y'(pi) + f2(lambda) y(pi) = 0.
struct BoundaryPair {
  AnalyticHandle f1;
  AnalyticHandle f2;
  std::string name;
  /// Optional evaluator producing (f1, f2) together when they share work.
  std::function<std::pair<cplx, cplx>(cplx)> joint;

  std::pair<cplx, cplx> operator()(cplx lambda) const {
    if (joint) return joint(lambda);
    return {f1(lambda), f2(lambda)};
  }
};

/// Parses "re" or "re:im".
inline cplx parse_complex_token(const std::string& tok) {
  const auto colon = tok.find(':');
  std::size_t used = 0;
  try {
    if (colon == std::string::npos) {
      const double re = std::stod(tok, &used);
      if (used == tok.size()) return {re, 0.0};
    } else {
      const std::string a = tok.substr(0, colon), b = tok.substr(colon + 1);
      std::size_t ua = 0, ub = 0;
      const double re = std::stod(a, &ua), im = std::stod(b, &ub);
      if (ua == a.size() && ub == b.size()) return {re, im};
    }
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Config, "malformed complex number '" + tok + "'");
}

/// Presets: "dirichlet" (f1=0, f2=1), "neumann" (f1=1, f2=0), "robin h" (f1=1, f2=h),
/// "poly a0 a1 ... | b0 b1 ..." (ascending coefficients of f1 then f2, entries re or re:im).
inline BoundaryPair boundary_preset(const std::string& spec) {
  std::istringstream in(spec);
  std::string name;
  in >> name;
  if (name == "dirichlet") return {AnalyticHandle::constant(0.0), AnalyticHandle::constant(1.0), spec, {}};
  if (name == "neumann") return {AnalyticHandle::constant(1.0), AnalyticHandle::constant(0.0), spec, {}};
  if (name == "robin") {
    std::string tok;
    require(static_cast<bool>(in >> tok), ErrorKind::Config, "robin preset needs a coefficient h");
    const cplx h = parse_complex_token(tok);
    require(!(in >> tok), ErrorKind::Config, "trailing tokens after robin coefficient");
    return {AnalyticHandle::constant(1.0), AnalyticHandle::constant(h), spec, {}};
  }
  if (name == "poly") {
    std::vector<cplx> a, b;
    bool second = false;
    for (std::string tok; in >> tok;) {
      if (tok == "|") {
        require(!second, ErrorKind::Config, "poly preset has more than one '|'");
        second = true;
        continue;
      }
      (second ? b : a).push_back(parse_complex_token(tok));
    }
    require(second && !a.empty() && !b.empty(), ErrorKind::Config,
            "poly preset must look like 'poly a0 a1 ... | b0 b1 ...'");
    return {AnalyticHandle::polynomial(a), AnalyticHandle::polynomial(b), spec, {}};
  }
  fail(ErrorKind::Config, "unknown boundary preset '" + name + "'");
}

/// Delta(lambda) = f1 S'(pi) + f2 S(pi).
inline cplx char_fn(const BoundaryPair& bp, const Potential& q, cplx lambda, const IntegratorOptions& opt = {}) {
  const auto [S, dS] = S_endpoint(q, lambda, opt);
  const auto [f1, f2] = bp(lambda);
  return f1 * dS + f2 * S;
}

/// Subspectrum lambda_0 = 0, lambda_1, ..., lambda_N with equal values adjacent.
struct EigenvalueList {
  std::vector<cplx> values;
  std::vector<int> index_set;       // first index of each distinct value
  std::vector<int> multiplicities;  // aligned with index_set

  std::size_t size() const { return values.size(); }
  int N() const { return static_cast<int>(values.size()) - 1; }

  /// Multiplicity of the value starting at index n (0 if n is not in the index set).
  int multiplicity_at(int n) const {
    for (std::size_t i = 0; i < index_set.size(); ++i)
      if (index_set[i] == n) return multiplicities[i];
    return 0;
  }

  /// Builds the list from eigenvalues (without lambda_0), each repeated by multiplicity.
  /// Values within `merge_tol` (relative) are treated as equal.
  static EigenvalueList from_values(std::vector<cplx> eigen, double merge_tol = 1e-10) {
    EigenvalueList out;
    std::stable_sort(eigen.begin(), eigen.end(), [](cplx a, cplx b) {
      if (std::abs(a.real() - b.real()) > 1e-9 * std::max(1.0, std::abs(a))) return a.real() < b.real();
      return a.imag() < b.imag();
    });
    // 0 goes first so that a zero eigenvalue becomes part of the lambda_0 block
    std::stable_partition(eigen.begin(), eigen.end(), [&](cplx v) { return std::abs(v) <= merge_tol; });
    out.values.reserve(eigen.size() + 1);
    out.values.push_back(0.0);
    for (cplx v : eigen) out.values.push_back(v);
    for (std::size_t n = 0; n < out.values.size(); ++n) {
      const cplx v = out.values[n];
      if (n > 0 && std::abs(v - out.values[n - 1]) <= merge_tol * std::max(1.0, std::abs(v))) {
        out.values[n] = out.values[n - 1];
        ++out.multiplicities.back();
        continue;
      }
      out.index_set.push_back(static_cast<int>(n));
      out.multiplicities.push_back(1);
    }
    return out;
  }

  /// First N + 1 entries.
  EigenvalueList truncated(int N) const {
    require(N >= 0 && N < static_cast<int>(values.size()), ErrorKind::InvalidInput,
            "not enough eigenvalues for truncation at N = " + std::to_string(N));
    EigenvalueList out;
    out.values.assign(values.begin(), values.begin() + N + 1);
    for (std::size_t i = 0; i < index_set.size() && index_set[i] <= N; ++i) {
      out.index_set.push_back(index_set[i]);
      out.multiplicities.push_back(std::min(multiplicities[i], N + 1 - index_set[i]));
    }
    return out;
  }

  /// Eigenvalues without lambda_0, repeated by multiplicity.
  std::vector<cplx> eigenvalues() const { return {values.begin() + 1, values.end()}; }
};

struct SearchRegion {
  double re_min = -1.0;
  double re_max = 0.0;  // <= 0 selects an automatic bound from max_count
  double half_height = 25.0;
  int max_count = 40;
};

/// Zeros of `delta` (an entire function of lambda) inside the region, with multiplicities.
inline std::vector<Zero> locate_zeros(const std::function<cplx(cplx)>& delta, const SearchRegion& region,
                                      ZeroFinderOptions zopt = {}) {
  ZeroFinder zf(delta, std::move(zopt));
  auto rect_for = [&](double re_max) { return Rect{region.re_min, re_max, -region.half_height, region.half_height}; };
  // Nudge edges away from zeros lying on them.
  auto clean_rect = [&](double re_max) {
    for (int k = 0; k < 12; ++k) {
      Rect r = rect_for(re_max * (1.0 + 0.0137 * k));
      r.re_min = region.re_min - 0.0173 * k;
      if (auto c = zf.count(r)) return std::pair{r, *c};
    }
    fail(ErrorKind::RootCountMismatch, "zeros persistently on the search boundary");
  };
  double re_max = region.re_max;
  if (re_max <= 0.0) {
    re_max = 16.0;
    for (int it = 0; it < 40; ++it) {
      const auto [r, c] = clean_rect(re_max);
      if (c >= region.max_count + 1) break;
      re_max *= 1.5;
    }
  }
  const auto [rect, total] = clean_rect(re_max);
  auto zeros = zf.find(rect);
  int found = 0;
  for (const Zero& z : zeros) found += z.multiplicity;
  require(found == total, ErrorKind::RootCountMismatch, "winding number disagrees with refined roots");
  return zeros;
}

/// Eigenvalues of the problem (bp, q) with lambda_0 = 0 prepended, truncated to the first
/// region.max_count entries after lambda_0 if more were found.
inline EigenvalueList eigenvalues_from_zeros(const std::vector<Zero>& zeros, int max_count) {
  std::vector<cplx> flat;
  for (const Zero& z : zeros)
    for (int m = 0; m < z.multiplicity; ++m) flat.push_back(z.value);
  auto list = EigenvalueList::from_values(std::move(flat), 1e-9);
  if (list.N() > max_count) return list.truncated(max_count);
  return list;
}

inline EigenvalueList find_eigenvalues(const BoundaryPair& bp, const Potential& q, const SearchRegion& region,
                                       const IntegratorOptions& opt = {}) {
  require(region.half_height > 0.0 && region.max_count >= 1, ErrorKind::InvalidInput, "bad search region");
  auto delta = [&](cplx l) { return char_fn(bp, q, l, opt); };
  return eigenvalues_from_zeros(locate_zeros(delta, region), region.max_count);
}

/// Normalized derivatives of lambda * Delta(lambda) at lambda0, orders 0..jmax, from the
/// contour rule (used for residual checks).
inline std::vector<cplx> lambda_delta_taylor(const BoundaryPair& bp, const Potential& q, cplx lambda0, int jmax,
                                             double radius = 1e-2) {
  AnalyticHandle h([&](cplx l) { return l * char_fn(bp, q, l); }, radius);
  if (jmax == 0) return {lambda0 * char_fn(bp, q, lambda0)};
  return h.contour_taylor(lambda0, jmax);
}

}  // namespace specrecon
