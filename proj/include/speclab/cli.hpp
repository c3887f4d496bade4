#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "speclab/dos.hpp"
#include "speclab/report.hpp"

namespace speclab {

struct DomainCase {
  BoxDomain domain;
  std::size_t realizations = 0;
  /// Lipschitz energy grid (empty elsewhere).
  std::vector<double> energies;
};

struct TraceBoundParams {
  std::vector<DomainCase> domains;
  std::vector<int> levels{0, 1};
  double b_fraction = 0.8;
  std::size_t boundary_instances = 20;
  std::size_t poincare_vectors = 1000;
  std::size_t mass_realizations = 100;
  // Extra amplitudes for the mass check.
  std::vector<double> mass_kappas{0.05};
};

struct AveragingParams {
  int size = 16;
  int rank = 4;
  std::size_t instances = 10;
  std::size_t windows = 10;
  std::size_t trials_per_window = 10;
  double bound_slack = 1e-6;
  double route_tolerance = 1e-5;
  std::size_t full_line_trials = 100;
  double full_line_tolerance = 1e-4;
  std::size_t fh_instances = 50;
};

struct SsfParams {
  int size = 16;
  int rank = 3;
  std::size_t instances = 10;
  std::size_t triples_per_instance = 10;
  /// Extra instances built from the physical one-site family on the box.
  std::size_t physical_instances = 2;
  std::size_t bound_triples = 200;
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4};
};

struct WegnerParams {
  double a = 0.05;
  double b = 0.15;
  int n = 0;
  std::vector<double> kappas{1.0, 0.5};
  std::vector<double> ldos_energies{0.0, 0.05, 0.1, 0.15, 0.2};
  double epsilon = 0.02;
  std::vector<double> ladder{0.05, 0.02, 0.01};
};

struct LipschitzParams {
  std::vector<DomainCase> domains;
  double epsilon = 0.02;
  /// Extra runs on the primary domain with these kappas.
  std::vector<double> extra_kappas{0.25};
};

struct FixedSiteParams {
  std::optional<std::size_t> site;
  std::vector<double> taus{0.0, 0.5, 1.0};
  double a = 0.05;
  double b = 0.1;
  double chain_e1 = 0.1;
  double chain_e2 = 0.2;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"trace_bound", "spectral_averaging", "ssf",
                                              "wegner",      "lipschitz",          "fixed_site"};
  return names;
}

struct ExperimentConfig {
  std::string suite = "all";
  DosConfig dos;
  std::size_t n_samples = 1000;
  std::optional<unsigned> workers;
  std::filesystem::path output_dir = "speclab_out";

  TraceBoundParams trace_bound;
  AveragingParams spectral_averaging;
  SsfParams ssf;
  WegnerParams wegner;
  LipschitzParams lipschitz;
  FixedSiteParams fixed_site;

  /// Suites selected by `suite`.
  std::vector<std::string> selected() const;
  /// Precondition and domain checks for the selected suites, run before any
  /// computation. Throws ConfigError / DomainError.
  void validate() const;
  nlohmann::json to_json() const;
};

/// The d = 1, L = 4, m = 8 Dirichlet desk configuration.
ExperimentConfig default_config();

/// Parses a configuration object; unknown keys anywhere are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& file);

struct SuiteResult {
  std::string name;
  std::vector<VerificationReport> checks;
  /// Reports that are informational only and never fail the run.
  std::vector<VerificationReport> advisories;
  /// File name -> contents, written under the output directory.
  std::map<std::string, std::string> files;
  double seconds = 0.0;

  bool passed() const;
};

SuiteResult run_trace_bound(const ExperimentConfig& config);
SuiteResult run_spectral_averaging(const ExperimentConfig& config);
SuiteResult run_ssf(const ExperimentConfig& config);
SuiteResult run_wegner(const ExperimentConfig& config);
SuiteResult run_lipschitz(const ExperimentConfig& config);
SuiteResult run_fixed_site(const ExperimentConfig& config);
SuiteResult run_named_suite(const std::string& name, const ExperimentConfig& config);

struct RunOutcome {
  std::vector<SuiteResult> suites;
  nlohmann::json summary;
  bool passed = false;
};

/// Runs the selected suites, writes summary.json and the per-suite CSV files
/// into config.output_dir, and logs one line per check to `log`.
RunOutcome run_suite(const ExperimentConfig& config, std::ostream& log);

/// Table of E0, c(b, d), C_W and K1, with continuum and (if m > 0) discrete levels.
void print_constants(std::ostream& out, int d, double b, double energy, int n, double kappa, double rho_sup,
                     int m = 0);

}  // namespace speclab
