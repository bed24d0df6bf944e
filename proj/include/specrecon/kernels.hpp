#pragma once

#include <vector>

#include "specrecon/common.hpp"

namespace specrecon {

/// Normalized lambda-derivatives c^<j>(t, lambda), j = 0..jmax, of c(t, lambda) = cos(sqrt(lambda) t).
///
/// Near lambda = 0 the power series in lambda is re-expanded about lambda0; elsewhere the
/// Taylor coefficients follow from 4 lambda c'' + 2 c' + t^2 c = 0:
///   a_{j+2} = -((j+1)(4j+2) a_{j+1} + t^2 a_j) / (4 lambda0 (j+1)(j+2)).
inline std::vector<cplx> c_taylor(double t, cplx lambda0, int jmax) {
  std::vector<cplx> a(static_cast<std::size_t>(jmax) + 1, 0.0);
  const double t2 = t * t;
  if (std::abs(lambda0) * t2 < 1.0) {
    // c(t, lambda) = sum_k b_k lambda^k, b_k = (-1)^k t^{2k} / (2k)!
    constexpr int kTerms = 40;
    std::vector<double> b(kTerms);
    b[0] = 1.0;
    for (int k = 1; k < kTerms; ++k) b[k] = -b[k - 1] * t2 / ((2.0 * k - 1.0) * (2.0 * k));
    for (int j = 0; j <= jmax; ++j) {
      cplx acc = 0.0;
      cplx pw = 1.0;  // lambda0^(k-j)
      double binom = 1.0;  // C(k, j)
      for (int k = j; k < kTerms; ++k) {
        acc += b[k] * binom * pw;
        pw *= lambda0;
        binom = binom * (k + 1) / (k + 1 - j);
      }
      a[j] = acc;
    }
    return a;
  }
  const cplx rho = sqrt_branch(lambda0);
  a[0] = std::cos(rho * t);
  if (jmax >= 1) a[1] = -0.5 * t * sin_over_rho(rho, t);
  for (int j = 0; j + 2 <= jmax; ++j)
    a[j + 2] = -((j + 1.0) * (4.0 * j + 2.0) * a[j + 1] + t2 * a[j]) / (4.0 * lambda0 * (j + 1.0) * (j + 2.0));
  return a;
}

/// Normalized lambda-derivatives of s(t, lambda) = sqrt(lambda) sin(sqrt(lambda) t), via
/// s = -(2 lambda / t) dc/dlambda.
inline std::vector<cplx> s_taylor(double t, cplx lambda0, int jmax) {
  std::vector<cplx> s(static_cast<std::size_t>(jmax) + 1, 0.0);
  if (t == 0.0) return s;
  const auto c = c_taylor(t, lambda0, jmax + 1);
  for (int j = 0; j <= jmax; ++j) s[j] = -(2.0 / t) * (lambda0 * (j + 1.0) * c[j + 1] + static_cast<double>(j) * c[j]);
  return s;
}

/// Plain values of s and c at one (t, lambda).
inline cplx s_value(double t, cplx lambda) {
  const cplx rho = sqrt_branch(lambda);
  return lambda * sin_over_rho(rho, t);
}

inline cplx c_value(double t, cplx lambda) { return std::cos(sqrt_branch(lambda) * t); }

}  // namespace specrecon
