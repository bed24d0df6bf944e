#include <CLI11.hpp>
#include <iostream>

#include "specrecon/cli.hpp"

int main(int argc, char** argv) {
  namespace sc = specrecon::cli;
  CLI::App app{"Inverse spectral reconstruction of Sturm-Liouville potentials"};
  std::string config;
  std::string out_dir = "specrecon_out";
  std::optional<long long> seed;
  bool quiet = false;
  app.add_option("--config", config, "Run configuration (key = value lines)")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Random seed; overrides the config");
  app.add_flag("--quiet", quiet, "Suppress progress messages");
  app.set_version_flag("--version", sc::kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sc::kConfigError;
  }

  sc::RunConfig cfg;
  try {
    cfg = sc::load_config(config);
  } catch (const specrecon::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sc::kConfigError;
  }
  if (seed) {
    if (*seed < 0) {
      std::cerr << "error: --seed must be nonnegative\n";
      return sc::kConfigError;
    }
    cfg.seed = static_cast<std::uint64_t>(*seed);
    cfg.entries["seed"] = std::to_string(*seed);
  }
  return sc::run(cfg, {out_dir, quiet});
}
