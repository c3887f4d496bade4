#include <iostream>

#include <CLI11.hpp>

#include "speclab/cli.hpp"
#include "speclab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"speclab: finite-volume spectral averaging and Wegner-type checks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the verification suites described by a JSON config");
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  run->add_option("--config", config_file, "JSON config file")->required();
  run->add_option("--seed", seed, "master seed (overrides config)");
  run->add_option("--workers", workers, "worker threads (default: config, then $SPECLAB_WORKERS)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (overrides config)");

  auto* constants = app.add_subcommand("constants", "print the Wegner and Lipschitz constants");
  int d = 1, n = 0, m = 0;
  double b = 0.1, energy = 0.0, kappa = 1.0, rho = 1.0;
  constants->add_option("--d", d, "dimension")->required();
  constants->add_option("--b", b, "trace-bound energy b, 0 < b < E0(d)")->required();
  constants->add_option("--E", energy, "energy for C_W and K1");
  constants->add_option("--n", n, "mode cutoff for C_W");
  constants->add_option("--kappa", kappa, "single-site amplitude");
  constants->add_option("--rho", rho, "sup of the disorder density");
  constants->add_option("--m", m, "also print discrete-level constants at this resolution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      speclab::ExperimentConfig config = speclab::load_config(config_file);
      if (seed) config.dos.master_seed = *seed;
      if (workers) config.workers = *workers;
      if (out_dir) config.output_dir = *out_dir;
      const auto outcome = speclab::run_suite(config, std::cout);
      std::cout << (outcome.passed ? "all checks passed" : "some checks FAILED") << " (summary: "
                << (config.output_dir / "summary.json").string() << ")\n";
      return outcome.passed ? 0 : 1;
    }
    speclab::print_constants(std::cout, d, b, energy, n, kappa, rho, m);
    return 0;
  } catch (const speclab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const speclab::PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return 3;
  } catch (const speclab::ConvergenceError& e) {
    std::cerr << "precondition failed (eigensolver): " << e.what() << '\n';
    return 3;
  } catch (const speclab::InvariantViolation& e) {
    std::cerr << "invariant violated: " << e.what() << '\n';
    return 3;
  }
}
