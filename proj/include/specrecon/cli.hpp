#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "specrecon/analytic.hpp"
#include "specrecon/cauchy.hpp"
#include "specrecon/gl_inverse.hpp"
#include "specrecon/half_inverse.hpp"
#include "specrecon/potential.hpp"
#include "specrecon/recon.hpp"
#include "specrecon/sl_core.hpp"
#include "specrecon/stability.hpp"

namespace specrecon::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kSuccess = 0, kConfigError = 2, kNumericalFailure = 3, kConditionAbort = 4 };

enum class ConditionPolicy { abort, warn, off };

/// Parsed `key = value` configuration. `entries` keeps the raw text for the manifest.
struct RunConfig {
  std::string command;
  std::string potential;
  std::string known;
  std::string unknown;
  std::string boundary = "dirichlet";
  std::string interval = "pi";
  int N = 40;
  int grid = 2048;
  int grid2 = 4096;
  std::string spectrum = "forward";
  std::string omega = "auto";
  std::string Omega = "auto";
  std::vector<double> deltas{1e-4, 1e-3, 1e-2};
  std::vector<double> breakdown;
  int trials = 5;
  int modes = 8;
  int n_modes = 64;
  int count = -1;
  ConditionPolicy check_conditions = ConditionPolicy::abort;
  std::uint64_t seed = 12345;
  std::filesystem::path base_dir = ".";
  std::map<std::string, std::string> entries;
};

struct RunOptions {
  std::filesystem::path out_dir = "specrecon_out";
  bool quiet = false;
};

/// Labelled numeric table for gnuplot-style output.
struct PlotTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Writes whitespace-separated columns preceded by a `#` header naming them.
inline void emit_plotdata(const std::filesystem::path& path, const PlotTable& t) {
  require(!t.columns.empty() && !t.rows.empty(), ErrorKind::InvalidInput, "plot table is empty");
  for (const auto& r : t.rows)
    require(r.size() == t.columns.size(), ErrorKind::InvalidInput, "plot row width does not match header");
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << "#";
  for (const auto& c : t.columns) out << ' ' << c;
  out << '\n';
  char buf[40];
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", r[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline int parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty(), ErrorKind::Config, key + ": expected an integer, got '" + v + "'");
  require(x >= INT32_MIN && x <= INT32_MAX, ErrorKind::Config, key + ": out of range");
  return static_cast<int>(x);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty() && std::isfinite(x), ErrorKind::Config,
          key + ": expected a number, got '" + v + "'");
  return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  std::vector<double> out;
  for (std::string tok; in >> tok;) {
    if (!tok.empty() && tok.back() == ',') tok.pop_back();
    if (!tok.empty()) out.push_back(parse_double(key, tok));
  }
  return out;
}

/// "re im" or "re" as a complex number.
inline cplx parse_pair(const std::string& key, const std::string& v) {
  const auto xs = parse_list(key, v);
  require(xs.size() == 1 || xs.size() == 2, ErrorKind::Config, key + ": expected 're [im]'");
  return {xs[0], xs.size() == 2 ? xs[1] : 0.0};
}

inline bool is_preset(const std::string& spec) {
  std::istringstream in(spec);
  std::string name;
  in >> name;
  for (const char* p : {"zero", "constant", "cosine", "sine", "linear"})
    if (name == p) return true;
  return false;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    require(out_.good(), ErrorKind::Io, "cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... T>
  void row(const T&... xs) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(xs), first = false), ...);
    out_ << '\n';
  }
  std::ofstream& stream() { return out_; }

 private:
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::uint64_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  std::ofstream out_;
};

}  // namespace detail

/// Parses flat `key = value` text. `#` starts a comment; unknown keys are errors.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Config, "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key");
    require(!cfg.entries.count(key), ErrorKind::Config, "duplicate key '" + key + "'");
    cfg.entries[key] = val;
  }
  for (const auto& [k, v] : cfg.entries) {
    if (k == "command") cfg.command = v;
    else if (k == "potential") cfg.potential = v;
    else if (k == "known") cfg.known = v;
    else if (k == "unknown") cfg.unknown = v;
    else if (k == "boundary") cfg.boundary = v;
    else if (k == "interval") cfg.interval = v;
    else if (k == "N") cfg.N = detail::parse_int(k, v);
    else if (k == "grid") cfg.grid = detail::parse_int(k, v);
    else if (k == "grid2") cfg.grid2 = detail::parse_int(k, v);
    else if (k == "spectrum") cfg.spectrum = v;
    else if (k == "omega") cfg.omega = v;
    else if (k == "Omega") cfg.Omega = v;
    else if (k == "deltas") cfg.deltas = detail::parse_list(k, v);
    else if (k == "breakdown") cfg.breakdown = detail::parse_list(k, v);
    else if (k == "trials") cfg.trials = detail::parse_int(k, v);
    else if (k == "modes") cfg.modes = detail::parse_int(k, v);
    else if (k == "n_modes") cfg.n_modes = detail::parse_int(k, v);
    else if (k == "count") cfg.count = detail::parse_int(k, v);
    else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(detail::parse_int(k, v));
    else if (k == "check_conditions") {
      if (v == "abort") cfg.check_conditions = ConditionPolicy::abort;
      else if (v == "warn") cfg.check_conditions = ConditionPolicy::warn;
      else if (v == "off") cfg.check_conditions = ConditionPolicy::off;
      else fail(ErrorKind::Config, "check_conditions must be abort, warn or off");
    } else {
      fail(ErrorKind::Config, "unknown key '" + k + "'");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Config, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

inline std::filesystem::path resolve_path(const RunConfig& cfg, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : cfg.base_dir / path;
}

/// Checks the invariants that do not need any numerics: command, N, grid sizes, files.
inline void validate(const RunConfig& cfg) {
  static const char* commands[] = {"forward-spectrum", "cauchy", "reconstruct", "half-inverse", "stability"};
  bool known_cmd = false;
  for (const char* c : commands) known_cmd = known_cmd || cfg.command == c;
  require(known_cmd, ErrorKind::Config, "unknown or missing command '" + cfg.command + "'");
  require(cfg.N >= 5, ErrorKind::Config, "N must be at least 5");
  require(is_power_of_two(cfg.grid) && cfg.grid >= 64, ErrorKind::Config, "grid must be a power of two >= 64");
  require(is_power_of_two(cfg.grid2) && cfg.grid2 >= 64, ErrorKind::Config, "grid2 must be a power of two >= 64");
  require(cfg.interval == "pi" || cfg.interval == "2pi", ErrorKind::Config, "interval must be pi or 2pi");
  require(cfg.trials >= 1 && cfg.modes >= 1 && cfg.n_modes >= 4, ErrorKind::Config,
          "trials, modes and n_modes must be positive");
  require(cfg.count == -1 || cfg.count >= 2, ErrorKind::Config, "count must be at least 2");
  for (double d : cfg.deltas) require(d >= 0.0, ErrorKind::Config, "deltas must be nonnegative");
  auto check_source = [&](const std::string& key, const std::string& v, bool needed) {
    if (v.empty()) {
      require(!needed, ErrorKind::Config, "missing key '" + key + "'");
      return;
    }
    if (detail::is_preset(v)) {
      preset_function(v);  // syntax check
      return;
    }
    require(std::filesystem::exists(resolve_path(cfg, v)), ErrorKind::Config,
            key + ": '" + v + "' is neither a preset nor an existing file");
  };
  const std::string& c = cfg.command;
  const bool spectrum_file = cfg.spectrum != "forward";
  if (spectrum_file)
    require(std::filesystem::exists(resolve_path(cfg, cfg.spectrum)), ErrorKind::Config,
            "spectrum file '" + cfg.spectrum + "' does not exist");
  if (c == "forward-spectrum" || c == "cauchy" || c == "stability") check_source("potential", cfg.potential, true);
  if (c == "reconstruct") {
    check_source("potential", cfg.potential, !spectrum_file);
    boundary_preset(cfg.boundary);
    if (cfg.potential.empty()) require(cfg.omega != "auto", ErrorKind::Config, "omega = auto needs a potential");
    if (cfg.omega != "auto") detail::parse_pair("omega", cfg.omega);
  }
  if (c == "forward-spectrum") boundary_preset(cfg.boundary);
  if (c == "half-inverse") {
    check_source("known", cfg.known, true);
    check_source("unknown", cfg.unknown, !spectrum_file);
    if (cfg.Omega == "exact") require(!cfg.unknown.empty(), ErrorKind::Config, "Omega = exact needs the unknown half");
    else if (cfg.Omega != "auto") detail::parse_pair("Omega", cfg.Omega);
  }
  if (c == "stability") require(!cfg.deltas.empty(), ErrorKind::Config, "deltas must not be empty");
}

/// Reads `n,re_lambda,im_lambda[,...]` rows (one per eigenvalue, repeated by multiplicity).
inline EigenvalueList read_eigenvalues_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read " + path.string());
  std::vector<cplx> vals;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(detail::trim(c));
    if (cols.size() < 3) fail(ErrorKind::Config, path.string() + ": expected n,re,im columns");
    if (vals.empty() && cols[1] == "re_lambda") continue;
    vals.emplace_back(detail::parse_double("spectrum", cols[1]), detail::parse_double("spectrum", cols[2]));
  }
  require(!vals.empty(), ErrorKind::Config, path.string() + ": no eigenvalues");
  return EigenvalueList::from_values(std::move(vals), 1e-9);
}

inline void write_eigenvalues_csv(const std::filesystem::path& path, const EigenvalueList& evs) {
  detail::CsvWriter w(path, "n,re_lambda,im_lambda,multiplicity");
  int block = 0;
  for (int n = 1; n <= evs.N(); ++n) {
    while (block + 1 < static_cast<int>(evs.index_set.size()) && evs.index_set[block + 1] <= n) ++block;
    w.row(n, evs.values[n].real(), evs.values[n].imag(), evs.multiplicities[block]);
  }
}

inline void write_conditions_csv(const std::filesystem::path& path, const ConditionReport& rep) {
  detail::CsvWriter w(path, "n,re_lambda,im_lambda,abs_f1,abs_f2,kappa");
  for (const auto& r : rep.rows) w.row(r.n, r.lambda.real(), r.lambda.imag(), r.abs_f1, r.abs_f2, r.kappa);
  auto& o = w.stream();
  o << "# separation_min=" << detail::fmt(rep.separation_min) << " scale=" << detail::fmt(rep.separation_scale)
    << " ok=" << rep.separation_ok << '\n';
  o << "# simple_last=" << rep.simple_last << " n0=" << rep.n0 << " ok=" << rep.simple_ok << '\n';
  o << "# asym_max_im_rho=" << detail::fmt(rep.asym_max_im_rho)
    << " asym_sum_inv_rho2=" << detail::fmt(rep.asym_sum_inv_rho2) << " ok=" << rep.asymptotics_ok << '\n';
  o << "# kappa_tail_l2=" << detail::fmt(rep.kappa_tail_l2) << " gram_cond=" << detail::fmt(rep.gram_cond)
    << " ok=" << rep.basis2_ok << '\n';
}

inline void write_moment(const std::filesystem::path& dir, const VSystem& vs, const MomentSolution& ms) {
  {
    detail::CsvWriter w(dir / "u.csv", "t,re_u1,im_u1,re_u2,im_u2");
    for (int k = 0; k < vs.grid.nodes(); ++k)
      w.row(vs.grid.x(k), ms.u.h1[k].real(), ms.u.h1[k].imag(), ms.u.h2[k].real(), ms.u.h2[k].imag());
  }
  {
    std::ofstream g(dir / "gram_cond.txt");
    require(g.good(), ErrorKind::Io, "cannot write gram_cond.txt");
    g << "gram_cond " << detail::fmt(ms.gram_cond) << "\ntau " << detail::fmt(ms.tau) << "\nill_conditioned "
      << (ms.ill_conditioned ? 1 : 0) << '\n';
  }
  detail::CsvWriter w(dir / "residuals.csv", "n,re_lambda,im_lambda,abs_residual");
  for (std::size_t n = 0; n < ms.residuals.size(); ++n)
    w.row(static_cast<int>(n), vs.evs.values[n].real(), vs.evs.values[n].imag(), std::abs(ms.residuals[n]));
}

/// Executes one configured run; never throws.
class Runner {
 public:
  Runner(RunConfig cfg, RunOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {}

  int run() {
    const auto start = std::chrono::system_clock::now();
    int code = kSuccess;
    std::string error;
    try {
      std::filesystem::create_directories(opt_.out_dir);
    } catch (const std::exception& e) {
      std::cerr << "error: cannot create output directory: " << e.what() << '\n';
      return kConfigError;
    }
    try {
      validate(cfg_);
      if (cfg_.command == "forward-spectrum") forward_spectrum();
      else if (cfg_.command == "cauchy") cauchy();
      else if (cfg_.command == "reconstruct") reconstruct();
      else if (cfg_.command == "half-inverse") half_inverse();
      else stability();
    } catch (const Error& e) {
      error = e.what();
      if (e.kind() == ErrorKind::Config) code = kConfigError;
      else if (e.kind() == ErrorKind::ConditionAbort) code = kConditionAbort;
      else code = kNumericalFailure;
    } catch (const std::exception& e) {
      error = e.what();
      code = kNumericalFailure;
    }
    if (code != kSuccess) {
      std::cerr << "error: " << error << '\n';
      if (code == kNumericalFailure || code == kConditionAbort) write_diagnostic(error);
    }
    write_manifest(start, code, error);
    return code;
  }

 private:
  using Clock = std::chrono::steady_clock;

  template <class F>
  auto stage(const std::string& name, F&& f) {
    log(name + " ...");
    stage_ = name;
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings_.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
    } else {
      auto r = f();
      timings_.push_back({name, std::chrono::duration<double>(Clock::now() - t0).count()});
      return r;
    }
  }

  void log(const std::string& msg) const {
    if (!opt_.quiet) std::cerr << "[specrecon] " << msg << '\n';
  }

  std::filesystem::path out(const std::string& name) {
    outputs_.push_back(name);
    return opt_.out_dir / name;
  }

  Grid grid_pi() const { return Grid(kPi, cfg_.grid); }
  Grid grid_2pi() const { return Grid(2.0 * kPi, cfg_.grid2); }

  Potential load(const std::string& spec, const Grid& g) const {
    if (detail::is_preset(spec)) return make_preset(spec, g);
    return read_potential(resolve_path(cfg_, spec).string());
  }

  Potential load_on_pi(const std::string& key, const std::string& spec) const {
    Potential q = load(spec, grid_pi());
    require(std::abs(q.grid().endpoint() - kPi) < 1e-9, ErrorKind::Config, key + " must be given on [0, pi]");
    return q;
  }

  void write_summary(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream s(out("summary.txt"));
    for (const auto& [k, v] : rows) s << k << ' ' << v << '\n';
  }

  static std::string cstr(cplx z) { return detail::fmt(z.real()) + " " + detail::fmt(z.imag()); }

  EigenvalueList forward_eigenvalues(const BoundaryPair& bp, const Potential& q, int count) {
    if (bp.name == "dirichlet") return dirichlet_spectrum(q, count);
    double qmax = 0.0;
    for (cplx v : q.values()) qmax = std::max(qmax, std::abs(v));
    SearchRegion region;
    region.re_min = -1.0 - qmax;
    region.half_height = 25.0 + qmax;
    region.max_count = count;
    const auto evs = find_eigenvalues(bp, q, region);
    require(evs.N() >= count, ErrorKind::RootCountMismatch, "forward solver found too few eigenvalues");
    return evs;
  }

  void forward_spectrum() {
    const double a = cfg_.interval == "2pi" ? 2.0 * kPi : kPi;
    const Potential q = detail::is_preset(cfg_.potential) ? make_preset(cfg_.potential, a > 4.0 ? grid_2pi() : grid_pi())
                                                         : load(cfg_.potential, grid_pi());
    const BoundaryPair bp = boundary_preset(cfg_.boundary);
    const auto evs = stage("eigenvalues", [&] { return forward_eigenvalues(bp, q, cfg_.N); });
    write_eigenvalues_csv(out("eigenvalues.csv"), evs);
    std::vector<std::pair<std::string, std::string>> summary{{"count", std::to_string(evs.N())}};
    if (bp.name == "dirichlet" && evs.N() >= 20) {
      const double len = q.grid().endpoint();
      const cplx Om = estimate_Omega(evs, len);
      summary.push_back({"Omega_fit", cstr(Om)});
      PlotTable t{{"n", "sqrt_lambda", "asymptote"}, {}};
      for (int n = 1; n <= evs.N(); ++n)
        t.rows.push_back({double(n), sqrt_branch(evs.values[n]).real(), n * kPi / len + Om.real() / (kPi * n)});
      emit_plotdata(out("asymptotics.dat"), t);
    }
    write_summary(summary);
  }

  void cauchy() {
    const Potential q = load_on_pi("potential", cfg_.potential);
    CauchyOptions co;
    co.n_modes = cfg_.n_modes;
    const CauchyData cd = stage("cauchy", [&] { return cauchy_data_of(q, co); });
    write_cauchy(out("cauchy.csv").string(), cd);
  }

  /// Condition report, written out and enforced according to the policy.
  ConditionReport check(const BoundaryPair& bp, const EigenvalueList& evs) {
    if (cfg_.check_conditions == ConditionPolicy::off) return {};
    const auto rep = stage("conditions", [&] { return condition_report(bp, evs); });
    write_conditions_csv(out("conditions.csv"), rep);
    if (!rep.all_ok()) {
      std::string what;
      for (const auto& v : rep.violations()) what += (what.empty() ? "" : ", ") + v;
      if (cfg_.check_conditions == ConditionPolicy::abort)
        fail(ErrorKind::ConditionAbort, "sufficient conditions violated: " + what);
      std::cerr << "warning: sufficient conditions violated: " << what << '\n';
    }
    return rep;
  }

  void reconstruct() {
    const BoundaryPair bp = boundary_preset(cfg_.boundary);
    std::optional<Potential> q;
    if (!cfg_.potential.empty()) q = load_on_pi("potential", cfg_.potential);
    const EigenvalueList all = cfg_.spectrum == "forward"
                                   ? stage("eigenvalues", [&] { return forward_eigenvalues(bp, *q, cfg_.N); })
                                   : read_eigenvalues_csv(resolve_path(cfg_, cfg_.spectrum));
    require(all.N() >= cfg_.N, ErrorKind::Config, "spectrum has fewer than N eigenvalues");
    const EigenvalueList evs = all.truncated(cfg_.N);
    write_eigenvalues_csv(out("eigenvalues.csv"), evs);
    const cplx omega = cfg_.omega == "auto" ? omega_of(*q) : detail::parse_pair("omega", cfg_.omega);
    check(bp, evs);
    const VSystem vs = stage("vsystem", [&] { return build_vsystem(bp, evs, omega, cfg_.N, grid_pi()); });
    const MomentSolution ms = stage("moment", [&] { return solve_moment(vs); });
    write_moment(opt_.out_dir, vs, ms);
    outputs_.insert(outputs_.end(), {"u.csv", "gram_cond.txt", "residuals.csv"});
    const CauchyData cd = recovered_cauchy(ms.u, omega, grid_pi());
    write_cauchy(out("cauchy.csv").string(), cd);
    std::vector<std::pair<std::string, std::string>> summary{{"omega", cstr(omega)},
                                                            {"gram_cond", detail::fmt(ms.gram_cond)},
                                                            {"max_residual", detail::fmt(ms.max_residual())}};
    const auto w = quadrature_weights(grid_pi());
    if (q) {
      const CauchyData truth = cauchy_data_of(*q);
      summary.push_back({"K_err", detail::fmt(l2_distance(w, truth.K, cd.K))});
      summary.push_back({"N_err", detail::fmt(l2_distance(w, truth.N, cd.N))});
    }
    if (bp.name == "dirichlet") {
      summary.push_back({"note", "dirichlet data determine K only; potential not reconstructed"});
      write_summary(summary);
      return;
    }
    const int count = cfg_.count > 0 ? cfg_.count : cfg_.N / 2;
    const WeylData wd = stage("weyl", [&] { return weyl_data(cd, count); });
    write_weyl(out("weyl.csv").string(), wd);
    const Potential qr = stage("gelfand_levitan", [&] { return reconstruct_q(wd, omega, grid_pi()); });
    write_potential(out("potential.txt").string(), qr);
    if (q) summary.push_back({"q_err", detail::fmt(l2_distance(w, q->values(), resample(qr, q->grid()).values()))});
    write_summary(summary);
  }

  static Potential resample(const Potential& q, const Grid& g) {
    if (q.grid() == g) return q;
    return Potential::sample(g, [&](double x) { return q.at(x); });
  }

  void half_inverse() {
    const Grid g2 = grid_2pi();
    const Potential known = load(cfg_.known, g2);
    midpoint_node(known);
    std::optional<Potential> unknown;
    if (!cfg_.unknown.empty()) unknown = load_on_pi("unknown", cfg_.unknown);
    std::optional<Potential> full;
    if (unknown) {
      const Potential& u = *unknown;
      full = Potential::piecewise(known.grid(), kPi, [&](double x) { return u.at(x); },
                                  [&](double x) { return known.at(x); }, "full");
    }
    HalfInverseInstance inst{known, {}, std::nullopt};
    if (cfg_.spectrum == "forward") {
      require(full.has_value(), ErrorKind::Config, "spectrum = forward needs the unknown half");
      inst.spectrum = stage("eigenvalues", [&] { return dirichlet_spectrum(*full, cfg_.N); });
    } else {
      inst.spectrum = read_eigenvalues_csv(resolve_path(cfg_, cfg_.spectrum));
    }
    require(inst.spectrum.N() >= cfg_.N, ErrorKind::Config, "spectrum has fewer than N eigenvalues");
    write_eigenvalues_csv(out("eigenvalues.csv"), inst.spectrum.truncated(cfg_.N));
    const BoundaryPair bp = build_boundary_pair(known);
    check(bp, inst.spectrum.truncated(cfg_.N));
    if (cfg_.Omega == "exact") inst.Omega = 0.5 * full->integral();
    else if (cfg_.Omega != "auto") inst.Omega = detail::parse_pair("Omega", cfg_.Omega);
    HalfInverseOptions ho;
    ho.grid = grid_pi();
    ho.count = cfg_.count;
    ho.check_conditions = false;
    const HalfInverseResult res = stage("half_inverse", [&] { return solve_half_inverse(inst, cfg_.N, ho); });
    const VSystem vs = build_vsystem(bp, inst.spectrum.truncated(cfg_.N), res.omega, cfg_.N, ho.grid);
    write_moment(opt_.out_dir, vs, res.moment);
    outputs_.insert(outputs_.end(), {"u.csv", "gram_cond.txt", "residuals.csv"});
    write_cauchy(out("cauchy.csv").string(), res.cauchy);
    write_weyl(out("weyl.csv").string(), res.weyl);
    write_potential(out("potential.txt").string(), res.q);
    write_potential(out("potential_full.txt").string(), join_halves(res.q, known));
    std::vector<std::pair<std::string, std::string>> summary{{"omega", cstr(res.omega)},
                                                            {"gram_cond", detail::fmt(res.moment.gram_cond)}};
    PlotTable t{{"x", "re_q", "im_q"}, {}};
    if (unknown) t.columns.insert(t.columns.end(), {"re_q_true", "im_q_true"});
    for (int k = 0; k < res.q.grid().nodes(); ++k) {
      const double x = res.q.grid().x(k);
      std::vector<double> row{x, res.q.values()[k].real(), res.q.values()[k].imag()};
      if (unknown) {
        const cplx v = unknown->at(x);
        row.insert(row.end(), {v.real(), v.imag()});
      }
      t.rows.push_back(std::move(row));
    }
    emit_plotdata(out("recovered.dat"), t);
    if (unknown) {
      const auto w = quadrature_weights(res.q.grid());
      summary.push_back({"q_err", detail::fmt(l2_distance(w, resample(*unknown, res.q.grid()).values(), res.q.values()))});
    }
    summary.push_back({"q_norm", detail::fmt(l2_norm(quadrature_weights(res.q.grid()), res.q.values()))});
    write_summary(summary);
  }

  void stability() {
    const Potential q = load_on_pi("potential", cfg_.potential);
    StabilityOptions so;
    so.grid = grid_pi();
    if (cfg_.count > 0) so.count = cfg_.count;
    const SweepResult sw =
        stage("sweep", [&] { return stability_sweep(q, cfg_.deltas, cfg_.modes, cfg_.trials, cfg_.seed, so); });
    const cplx omega = omega_of(q);
    {
      detail::CsvWriter w(out("stability.csv"),
                          "# omega held fixed at " + cstr(omega) +
                              "\ntrial,seed,delta,Xi,q_err,xi_l2,M_gamma0_err,C_est,mean_diff,ok,error");
      for (const auto& r : sw.reports)
        w.row(r.trial, r.seed, r.delta, r.Xi, r.q_err, r.xi_l2, r.M_gamma0_err, r.C_est, r.mean_diff,
              std::string(r.ok ? "1" : "0"), "\"" + r.error + "\"");
    }
    {
      detail::CsvWriter w(out("stability_summary.csv"),
                          "delta,median_Xi,median_q_err,median_ratio_gamma0,median_ratio_xi,failures,slope,"
                          "ratio_variation_gamma0,ratio_variation_xi");
      for (const auto& l : sw.levels)
        w.row(l.delta, l.median_Xi, l.median_q_err, l.median_ratio_gamma0, l.median_ratio_xi, l.failures, sw.slope,
              sw.ratio_variation_gamma0, sw.ratio_variation_xi);
    }
    PlotTable t{{"Xi", "q_err"}, {}};
    for (const auto& r : sw.reports)
      if (r.ok) t.rows.push_back({r.Xi, r.q_err});
    if (!t.rows.empty()) emit_plotdata(out("stability.dat"), t);
    if (!cfg_.breakdown.empty()) {
      const double b = stage("breakdown", [&] { return breakdown_amplitude(q, cfg_.breakdown, cfg_.modes, cfg_.seed, so); });
      std::ofstream o(out("breakdown.txt"));
      o << "breakdown_delta " << detail::fmt(b) << '\n';
    }
  }

  void write_diagnostic(const std::string& error) {
    std::ofstream d(opt_.out_dir / "diagnostic.txt");
    d << "command " << cfg_.command << "\nstage " << stage_ << "\nerror " << error << '\n';
    outputs_.push_back("diagnostic.txt");
  }

  void write_manifest(std::chrono::system_clock::time_point start, int code, const std::string& error) {
    std::ofstream m(opt_.out_dir / "manifest.txt");
    const std::time_t t = std::chrono::system_clock::to_time_t(start);
    char ts[64];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    m << "specrecon " << kVersion << "\ntimestamp " << ts << "\ncommand " << cfg_.command << "\nseed " << cfg_.seed
      << "\nexit_code " << code << '\n';
    if (!error.empty()) m << "error " << error << '\n';
    m << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
    m << "threads " << thread_count() << "\n[config]\n";
    for (const auto& [k, v] : cfg_.entries) m << k << " = " << v << '\n';
    m << "[timings]\n";
    for (const auto& [k, v] : timings_) m << k << ' ' << detail::fmt(v) << '\n';
    m << "[outputs]\n";
    for (const auto& o : outputs_) m << o << '\n';
  }

  RunConfig cfg_;
  RunOptions opt_;
  std::string stage_ = "setup";
  std::vector<std::pair<std::string, double>> timings_;
  std::vector<std::string> outputs_;
};

inline int run(const RunConfig& cfg, const RunOptions& opt = {}) { return Runner(cfg, opt).run(); }

}  // namespace specrecon::cli
