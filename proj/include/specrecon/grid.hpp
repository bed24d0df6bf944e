#pragma once

#include <span>
#include <vector>

#include "specrecon/common.hpp"

namespace specrecon {

/// Uniform grid on [0, endpoint] with `intervals` steps.
class Grid {
 public:
  Grid() = default;

  Grid(double endpoint, int intervals) : endpoint_(endpoint), intervals_(intervals) {
    require(std::isfinite(endpoint) && endpoint > 0.0, ErrorKind::InvalidGrid,
            "grid endpoint must be positive and finite");
    require(intervals >= 1, ErrorKind::InvalidGrid, "grid needs at least two nodes");
  }

  double endpoint() const { return endpoint_; }
  int intervals() const { return intervals_; }
  int nodes() const { return intervals_ + 1; }
  double spacing() const { return endpoint_ / intervals_; }
  double x(int k) const { return k == intervals_ ? endpoint_ : k * spacing(); }

  /// Node index closest to x.
  int index_of(double xv) const {
    const long k = std::lround(xv / spacing());
    return static_cast<int>(std::clamp<long>(k, 0, intervals_));
  }

  bool operator==(const Grid&) const = default;

 private:
  double endpoint_ = kPi;
  int intervals_ = 2048;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Composite quadrature weights for `intervals` equal steps of width h:
/// Simpson's rule, closing with the 3/8 rule when the interval count is odd.
inline std::vector<double> simpson_weights(int intervals, double h) {
  std::vector<double> w(static_cast<std::size_t>(intervals) + 1, 0.0);
  if (intervals == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  int simpson_end = intervals;
  if (intervals % 2 == 1) simpson_end = intervals - 3;
  for (int k = 0; k + 2 <= simpson_end; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  if (simpson_end != intervals) {
    const int s = simpson_end;
    w[s] += 3.0 * h / 8.0;
    w[s + 1] += 9.0 * h / 8.0;
    w[s + 2] += 9.0 * h / 8.0;
    w[s + 3] += 3.0 * h / 8.0;
  }
  return w;
}

/// Quadrature weights for the whole grid.
inline std::vector<double> quadrature_weights(const Grid& g) {
  return simpson_weights(g.intervals(), g.spacing());
}

template <class T>
cplx integrate(std::span<const double> weights, std::span<const T> f) {
  cplx acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += weights[k] * f[k];
  return acc;
}

/// L2 norm of a grid function.
inline double l2_norm(std::span<const double> weights, std::span<const cplx> f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += weights[k] * std::norm(f[k]);
  return std::sqrt(acc);
}

inline double l2_distance(std::span<const double> weights, std::span<const cplx> f,
                          std::span<const cplx> g) {
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += weights[k] * std::norm(f[k] - g[k]);
  return std::sqrt(acc);
}

}  // namespace specrecon
