#pragma once

#include <map>
#include <optional>
#include <vector>

#include "specrecon/common.hpp"

namespace specrecon {

struct Rect {
  double re_min, re_max, im_min, im_max;

  double width() const { return re_max - re_min; }
  double height() const { return im_max - im_min; }
  cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
  double diameter() const { return std::hypot(width(), height()); }
  bool contains(cplx z, double pad = 0.0) const {
    return z.real() >= re_min - pad && z.real() <= re_max + pad && z.imag() >= im_min - pad &&
           z.imag() <= im_max + pad;
  }
};

struct Zero {
  cplx value;
  int multiplicity;
};

struct ZeroFinderOptions {
  double max_arg_step = 0.6;       // radians between consecutive boundary samples
  int max_refine_depth = 40;
  double newton_tol = 1e-13;       // relative step size for convergence
  int newton_max_iter = 50;
  double coalesce = 1e-6;          // relative size at which a multi-zero cell is a multiple zero
  int max_cells = 20000;
  /// Longest boundary segment sampled without refinement, as a function of position.
  std::function<double(cplx)> max_segment = [](cplx z) { return 0.25 * std::sqrt(1.0 + std::abs(z)); };
};

/// Counts and locates the zeros of an analytic function inside a rectangle by the
/// argument principle, recursive bisection and Newton refinement.
class ZeroFinder {
 public:
  using Fn = std::function<cplx(cplx)>;

  ZeroFinder(Fn f, ZeroFinderOptions opt = {}) : f_(std::move(f)), opt_(std::move(opt)) {}

  /// Winding number of f around the rectangle, or nullopt if a zero sits on the boundary.
  std::optional<int> count(const Rect& r) {
    const cplx c00(r.re_min, r.im_min), c10(r.re_max, r.im_min), c11(r.re_max, r.im_max), c01(r.re_min, r.im_max);
    double total = 0.0;
    for (auto [a, b] : {std::pair{c00, c10}, std::pair{c10, c11}, std::pair{c11, c01}, std::pair{c01, c00}}) {
      const auto d = edge_phase(a, b);
      if (!d) return std::nullopt;
      total += *d;
    }
    const double w = total / (2.0 * kPi);
    const long n = std::lround(w);
    if (std::abs(w - n) > 0.2) return std::nullopt;
    return static_cast<int>(n);
  }

  /// Winding number around a small square centred at z.
  std::optional<int> count_near(cplx z, double half_width) {
    return count({z.real() - half_width, z.real() + half_width, z.imag() - half_width, z.imag() + half_width});
  }

  /// All zeros in r with multiplicities. The sum of multiplicities equals the winding number.
  std::vector<Zero> find(const Rect& outer) {
    auto total = count(outer);
    require(total.has_value(), ErrorKind::RootCountMismatch, "zero on the search boundary");
    std::vector<Zero> roots;
    struct Cell {
      Rect r;
      int count;
    };
    std::vector<Cell> stack{{outer, *total}};
    int cells = 0;
    while (!stack.empty()) {
      Cell cell = stack.back();
      stack.pop_back();
      if (cell.count == 0) continue;
      require(++cells <= opt_.max_cells, ErrorKind::RootCountMismatch, "cell budget exhausted");
      const double scale = std::max(1.0, std::abs(cell.r.center()));
      const double diam = cell.r.diameter();
      if (cell.count == 1 || diam < 1e-3 * scale) {
        auto z = newton(cell.r.center(), cell.count, cell.r);
        if (z && !cell.r.contains(*z, 1e-12 * scale)) z.reset();  // converged to a zero of another cell
        if (z) {
          bool accept = cell.count == 1;
          if (!accept) {
            const auto c = count_near(*z, opt_.coalesce * std::max(1.0, std::abs(*z)));
            accept = c && *c == cell.count;
          }
          if (accept) {
            roots.push_back({*z, cell.count});
            continue;
          }
        }
        if (diam < opt_.coalesce * scale) {
          // Cell shrank below the coalescence radius without a clean refinement.
          if (cell.count > 1) {
            roots.push_back({cell.r.center(), cell.count});
            continue;
          }
          fail(ErrorKind::NewtonStall, "Newton refinement failed to converge inside a minimal cell");
        }
      }
      auto [a, b] = split(cell);
      stack.push_back(a);
      stack.push_back(b);
    }
    roots = merge_close(std::move(roots));
    int found = 0;
    for (const Zero& z : roots) found += z.multiplicity;
    require(found == *total, ErrorKind::RootCountMismatch,
            "winding number " + std::to_string(*total) + " but refined " + std::to_string(found));
    return roots;
  }

  /// Newton iteration z <- z - m f/f' with a central-difference derivative. Returns nullopt if
  /// the iterate leaves `box` (padded) or the iteration budget runs out.
  std::optional<cplx> newton(cplx z, int m, const Rect& box) {
    const double pad = 0.05 * box.diameter();
    for (int it = 0; it < opt_.newton_max_iter; ++it) {
      const double scale = std::max(1.0, std::abs(z));
      const cplx fz = eval(z);
      if (fz == 0.0) return z;
      const double h = 1e-6 * scale;
      const cplx df = (eval(z + h) - eval(z - h)) / (2.0 * h);
      if (df == 0.0 || !is_finite(df)) return std::nullopt;
      const cplx step = static_cast<double>(m) * fz / df;
      z -= step;
      if (!box.contains(z, pad)) return std::nullopt;
      if (std::abs(step) < opt_.newton_tol * scale) return z;
      if (m == 1 && std::abs(step) < 1e-9 * scale) {
        // one extra polishing step
        const cplx f2 = eval(z);
        const cplx s2 = f2 / df;
        if (std::abs(s2) < std::abs(step)) z -= s2;
        return z;
      }
      if (m > 1 && std::abs(step) < 1e-8 * scale) return z;
    }
    return std::nullopt;
  }

  cplx eval(cplx z) {
    const auto key = std::pair{z.real(), z.imag()};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const cplx v = f_(z);
    require(is_finite(v), ErrorKind::InvalidInput, "analytic function returned a non-finite value");
    memo_.emplace(key, v);
    return v;
  }

  std::size_t evaluations() const { return memo_.size(); }

 private:
  // A multiple zero on a cell cut is counted in both halves; rejoin such pieces.
  std::vector<Zero> merge_close(std::vector<Zero> roots) {
    std::vector<Zero> out;
    std::vector<bool> taken(roots.size(), false);
    for (std::size_t i = 0; i < roots.size(); ++i) {
      if (taken[i]) continue;
      const double radius = opt_.coalesce * std::max(1.0, std::abs(roots[i].value));
      cplx sum = roots[i].value * static_cast<double>(roots[i].multiplicity);
      int m = roots[i].multiplicity;
      for (std::size_t j = i + 1; j < roots.size(); ++j)
        if (!taken[j] && std::abs(roots[j].value - roots[i].value) <= radius) {
          taken[j] = true;
          sum += roots[j].value * static_cast<double>(roots[j].multiplicity);
          m += roots[j].multiplicity;
        }
      cplx z = sum / static_cast<double>(m);
      if (m > roots[i].multiplicity) {
        const Rect box{z.real() - radius, z.real() + radius, z.imag() - radius, z.imag() + radius};
        if (auto p = newton(z, m, box)) z = *p;
      }
      out.push_back({z, m});
    }
    return out;
  }

  std::optional<double> edge_phase(cplx a, cplx b) {
    // Seed with segments no longer than max_segment, always bisecting exactly so that
    // shared edges of sibling cells reuse memoized samples.
    return segment_phase(a, eval(a), b, eval(b), 0);
  }

  std::optional<double> segment_phase(cplx a, cplx fa, cplx b, cplx fb, int depth) {
    if (fa == 0.0 || fb == 0.0) return std::nullopt;
    const cplx ratio = fb / fa;
    const double d = std::arg(ratio);
    const double mag = std::abs(ratio);
    const bool long_seg = std::abs(b - a) > opt_.max_segment(0.5 * (a + b));
    if (!long_seg && std::abs(d) < opt_.max_arg_step && mag < 4.0 && mag > 0.25) return d;
    if (depth >= opt_.max_refine_depth) {
      if (std::abs(d) < opt_.max_arg_step) return d;
      return std::nullopt;
    }
    const cplx m(0.5 * (a.real() + b.real()), 0.5 * (a.imag() + b.imag()));
    const cplx fm = eval(m);
    auto left = segment_phase(a, fa, m, fm, depth + 1);
    if (!left) return std::nullopt;
    auto right = segment_phase(m, fm, b, fb, depth + 1);
    if (!right) return std::nullopt;
    return *left + *right;
  }

  template <class Cell>
  std::pair<Cell, Cell> split(const Cell& cell) {
    const Rect& r = cell.r;
    const bool vertical_cut = r.width() >= r.height();
    for (double frac : {0.5, 0.4375, 0.5625, 0.375, 0.625}) {
      Rect a = r, b = r;
      if (vertical_cut) {
        const double x = frac == 0.5 ? 0.5 * (r.re_min + r.re_max) : r.re_min + frac * r.width();
        a.re_max = x;
        b.re_min = x;
      } else {
        const double y = frac == 0.5 ? 0.5 * (r.im_min + r.im_max) : r.im_min + frac * r.height();
        a.im_max = y;
        b.im_min = y;
      }
      const auto ca = count(a);
      if (!ca) continue;
      const auto cb = count(b);
      if (!cb) continue;
      if (*ca + *cb != cell.count || *ca < 0 || *cb < 0) continue;
      return {Cell{a, *ca}, Cell{b, *cb}};
    }
    fail(ErrorKind::RootCountMismatch, "could not split a cell consistently");
  }

  Fn f_;
  ZeroFinderOptions opt_;
  std::map<std::pair<double, double>, cplx> memo_;
};

}  // namespace specrecon
