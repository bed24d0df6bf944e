#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace specrecon {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Failure categories surfaced by the library. The CLI maps them to exit codes.
enum class ErrorKind {
  InvalidInput,
  InvalidGrid,
  OverflowGuard,
  QuadratureDivergence,
  RootCountMismatch,
  NewtonStall,
  AliasGuard,
  NearPole,
  SeparationViolation,
  IllConditioned,
  PoleClusterError,
  SingularNystrom,
  NotSupported,
  FitUnstable,
  PairingAmbiguous,
  ConditionAbort,
  Io,
  Config,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::OverflowGuard: return "OverflowGuard";
    case ErrorKind::QuadratureDivergence: return "QuadratureDivergence";
    case ErrorKind::RootCountMismatch: return "RootCountMismatch";
    case ErrorKind::NewtonStall: return "NewtonStall";
    case ErrorKind::AliasGuard: return "AliasGuard";
    case ErrorKind::NearPole: return "NearPole";
    case ErrorKind::SeparationViolation: return "SeparationViolation";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::PoleClusterError: return "PoleClusterError";
    case ErrorKind::SingularNystrom: return "SingularNystrom";
    case ErrorKind::NotSupported: return "NotSupported";
    case ErrorKind::FitUnstable: return "FitUnstable";
    case ErrorKind::PairingAmbiguous: return "PairingAmbiguous";
    case ErrorKind::ConditionAbort: return "ConditionAbort";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Square root on the branch arg in [-pi/2, pi/2).
inline cplx sqrt_branch(cplx lambda) {
  cplx r = std::sqrt(lambda);  // principal: arg in (-pi/2, pi/2]
  if (r.real() == 0.0 && r.imag() > 0.0) r = -r;
  return r;
}

/// sin(z)/z, entire.
inline cplx sinc(cplx z) {
  if (std::abs(z) < 1e-3) {
    const cplx z2 = z * z;
    return 1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0));
  }
  return std::sin(z) / z;
}

/// sin(rho x)/rho as an entire function of lambda = rho^2.
inline cplx sin_over_rho(cplx rho, double x) { return x * sinc(rho * x); }

/// (cos(rho x) - 1)/lambda, entire in lambda.
inline cplx cosm1_over_lambda(cplx rho, double x) {
  const cplx h = sinc(rho * x * 0.5);
  return -0.5 * x * x * h * h;
}

/// Worker count for internal loops; capped by SPECRECON_THREADS.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SPECRECON_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, n). Each index is computed independently, so
/// results do not depend on the worker count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace specrecon
