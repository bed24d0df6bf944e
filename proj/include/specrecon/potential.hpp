#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "specrecon/common.hpp"
#include "specrecon/grid.hpp"

namespace specrecon {

/// Complex potential sampled on a uniform grid. A node listed in `jumps`
/// carries a discontinuity: `values` holds the left limit there and the
/// jump entry the right limit. Immutable after construction.
class Potential {
 public:
  struct Jump {
    int node;
    cplx right;
  };

  Potential() : Potential(Grid(kPi, 2), std::vector<cplx>(3, 0.0)) {}

  Potential(Grid grid, std::vector<cplx> values, std::string tag = {}, std::vector<Jump> jumps = {})
      : grid_(grid), values_(std::move(values)), tag_(std::move(tag)), jumps_(std::move(jumps)) {
    require(static_cast<int>(values_.size()) == grid_.nodes(), ErrorKind::InvalidInput,
            "potential sample count does not match grid");
    for (const cplx& v : values_) require(is_finite(v), ErrorKind::InvalidInput, "non-finite potential sample");
    std::sort(jumps_.begin(), jumps_.end(), [](const Jump& a, const Jump& b) { return a.node < b.node; });
    segments_.push_back(0);
    for (const Jump& j : jumps_) {
      require(j.node > 0 && j.node < grid_.intervals(), ErrorKind::InvalidInput, "jump must be interior");
      require(is_finite(j.right), ErrorKind::InvalidInput, "non-finite potential sample");
      segments_.push_back(j.node);
    }
    segments_.push_back(grid_.intervals());
    build_gauss_samples();
  }

  /// Samples a closed-form function. Breakpoints (interior abscissas) must fall on nodes.
  static Potential sample(const Grid& grid, const std::function<cplx(double)>& fn, std::string tag = {}) {
    std::vector<cplx> v(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) v[k] = fn(grid.x(k));
    return Potential(grid, std::move(v), std::move(tag));
  }

  /// Piecewise function: `left` on [0, break_x], `right` on [break_x, endpoint].
  static Potential piecewise(const Grid& grid, double break_x, const std::function<cplx(double)>& left,
                             const std::function<cplx(double)>& right, std::string tag = {}) {
    const int b = grid.index_of(break_x);
    require(std::abs(grid.x(b) - break_x) < 1e-9 * grid.endpoint(), ErrorKind::InvalidGrid,
            "breakpoint must coincide with a grid node");
    std::vector<cplx> v(grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) v[k] = k <= b ? left(grid.x(k)) : right(grid.x(k));
    std::vector<Jump> jumps;
    const cplx r = right(grid.x(b));
    if (b > 0 && b < grid.intervals() && r != v[b]) jumps.push_back({b, r});
    return Potential(grid, std::move(v), std::move(tag), std::move(jumps));
  }

  const Grid& grid() const { return grid_; }
  const std::vector<cplx>& values() const { return values_; }
  const std::string& tag() const { return tag_; }
  const std::vector<Jump>& jumps() const { return jumps_; }

  /// Value at node k seen from the interval to its right.
  cplx right_value(int k) const {
    for (const Jump& j : jumps_)
      if (j.node == k) return j.right;
    return values_[k];
  }

  /// Potential at the two Gauss-Legendre points of interval k, in increasing x.
  std::pair<cplx, cplx> gauss(int k) const { return {gauss_[2 * k], gauss_[2 * k + 1]}; }

  /// Piecewise-cubic interpolant; stencils never straddle a jump.
  cplx at(double x) const {
    const double h = grid_.spacing();
    int k = static_cast<int>(std::floor(x / h));
    k = std::clamp(k, 0, grid_.intervals() - 1);
    return interpolate(k, (x - k * h) / h);
  }

  /// Integral over nodes [from, to], segment-aware.
  cplx integral(int from, int to) const {
    cplx acc = 0.0;
    for (std::size_t s = 0; s + 1 < segments_.size(); ++s) {
      const int a = std::max(from, segments_[s]);
      const int b = std::min(to, segments_[s + 1]);
      if (b <= a) continue;
      const auto w = simpson_weights(b - a, grid_.spacing());
      for (int k = a; k <= b; ++k) acc += w[k - a] * (k == a ? right_value(k) : values_[k]);
    }
    return acc;
  }

  cplx integral() const { return integral(0, grid_.intervals()); }

  /// Leading part on [0, x(nodes)] as a potential on its own grid.
  Potential head(int intervals) const {
    require(intervals >= 1 && intervals <= grid_.intervals(), ErrorKind::InvalidInput, "bad restriction");
    std::vector<cplx> v(values_.begin(), values_.begin() + intervals + 1);
    std::vector<Jump> j;
    for (const Jump& jj : jumps_)
      if (jj.node < intervals) j.push_back(jj);
    return Potential(Grid(grid_.x(intervals), intervals), std::move(v), tag_, std::move(j));
  }

 private:
  cplx node_value_for_segment(int node, int seg_start) const {
    return node == seg_start ? right_value(node) : values_[node];
  }

  cplx interpolate(int k, double u) const {
    std::size_t s = 0;
    while (s + 2 < segments_.size() && segments_[s + 1] <= k) ++s;
    const int s0 = segments_[s];
    const int s1 = segments_[s + 1];
    const int len = s1 - s0;
    const int order = std::min(3, len);  // polynomial degree
    const int start = std::clamp(order == 3 ? k - 1 : k, s0, s1 - order);
    const double xl = u + (k - start);  // local coordinate in node units
    cplx acc = 0.0;
    for (int i = 0; i <= order; ++i) {
      double l = 1.0;
      for (int m = 0; m <= order; ++m)
        if (m != i) l *= (xl - m) / static_cast<double>(i - m);
      acc += l * node_value_for_segment(start + i, s0);
    }
    return acc;
  }

  void build_gauss_samples() {
    const double d = 0.5 - std::sqrt(3.0) / 6.0;
    gauss_.resize(2 * static_cast<std::size_t>(grid_.intervals()));
    for (int k = 0; k < grid_.intervals(); ++k) {
      gauss_[2 * k] = interpolate(k, d);
      gauss_[2 * k + 1] = interpolate(k, 1.0 - d);
    }
  }

  Grid grid_;
  std::vector<cplx> values_;
  std::string tag_;
  std::vector<Jump> jumps_;
  std::vector<int> segments_;
  std::vector<cplx> gauss_;
};

/// Closed-form presets addressable by name:
///   zero | constant a [b] | cosine a [b] [k] | sine a [b] [k] | linear a [b]
/// where a + ib is the amplitude, k the frequency and linear means (a+ib) x / pi.
inline std::function<cplx(double)> preset_function(const std::string& spec) {
  std::istringstream in(spec);
  std::string name;
  in >> name;
  std::vector<double> args;
  for (double v; in >> v;) args.push_back(v);
  require(in.eof(), ErrorKind::Config, "malformed potential preset '" + spec + "'");
  auto arg = [&](std::size_t i, double dflt) { return i < args.size() ? args[i] : dflt; };
  if (name == "zero") return [](double) { return cplx(0.0); };
  if (name == "constant") {
    const cplx a(arg(0, 1.0), arg(1, 0.0));
    return [a](double) { return a; };
  }
  if (name == "cosine") {
    const cplx a(arg(0, 1.0), arg(1, 0.0));
    const double k = arg(2, 1.0);
    return [a, k](double x) { return a * std::cos(k * x); };
  }
  if (name == "sine") {
    const cplx a(arg(0, 1.0), arg(1, 0.0));
    const double k = arg(2, 1.0);
    return [a, k](double x) { return a * std::sin(k * x); };
  }
  if (name == "linear") {
    const cplx a(arg(0, 1.0), arg(1, 0.0));
    return [a](double x) { return a * x / kPi; };
  }
  fail(ErrorKind::Config, "unknown potential preset '" + name + "'");
}

inline Potential make_preset(const std::string& spec, const Grid& grid) {
  return Potential::sample(grid, preset_function(spec), spec);
}

/// Text format: `a <endpoint>` followed by one `x re(q) im(q)` line per node.
/// A repeated abscissa marks a jump (left limit first).
inline void write_potential(const std::string& path, const Potential& q) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  char buf[128];
  std::snprintf(buf, sizeof buf, "a %.17g\n", q.grid().endpoint());
  out << buf;
  for (int k = 0; k < q.grid().nodes(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", q.grid().x(k), q.values()[k].real(), q.values()[k].imag());
    out << buf;
    if (const cplx r = q.right_value(k); r != q.values()[k]) {
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", q.grid().x(k), r.real(), r.imag());
      out << buf;
    }
  }
}

inline Potential read_potential(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read " + path);
  std::string tag;
  double endpoint = 0.0;
  in >> tag >> endpoint;
  require(in.good() && tag == "a", ErrorKind::Io, path + ": expected header 'a <endpoint>'");
  std::vector<double> xs;
  std::vector<cplx> vs;
  std::vector<Potential::Jump> jumps;
  for (double x, re, im; in >> x >> re >> im;) {
    if (!xs.empty() && std::abs(x - xs.back()) <= 1e-12 * endpoint) {
      jumps.push_back({static_cast<int>(xs.size()) - 1, cplx(re, im)});
      continue;
    }
    xs.push_back(x);
    vs.push_back(cplx(re, im));
  }
  require(xs.size() >= 2, ErrorKind::Io, path + ": need at least two samples");
  const Grid grid(endpoint, static_cast<int>(xs.size()) - 1);
  for (std::size_t k = 0; k < xs.size(); ++k)
    require(std::abs(xs[k] - grid.x(static_cast<int>(k))) <= 1e-9 * endpoint, ErrorKind::InvalidGrid,
            path + ": abscissas are not uniformly spaced on [0, a]");
  return Potential(grid, std::move(vs), "file:" + path, std::move(jumps));
}

}  // namespace specrecon
