#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "speclab/operator.hpp"
#include "speclab/report.hpp"
#include "speclab/spectral.hpp"

namespace speclab {

/// Which cube levels feed the constants: the continuum n^2 pi^2, or the
/// discrete Neumann levels of an m-cell grid.
struct LevelScale {
  int m = 0;  // 0 selects the continuum

  static LevelScale continuum() { return {}; }
  static LevelScale discrete(int cells) { return {cells}; }
  bool is_discrete() const { return m > 0; }
  double level(int n) const;
  std::string name() const { return is_discrete() ? "discrete" : "continuum"; }
};

/// E0(d) = (1/2) lambda_1 d / (2 lambda_1 + d).
double energy_threshold(int d, const LevelScale& scale = {});
/// c(b, d) = (1 - b/lambda_1 - (d + 4b)/(2d))^{-1}; DomainError unless 0 < b < E0(d).
double trace_constant(double b, int d, const LevelScale& scale = {});
/// C_W = rho_sup (n+1) / (kappa (1 - E/lambda_{n+1})); DomainError unless E < lambda_{n+1}.
double wegner_constant(double energy, int n, double kappa, double rho_sup, const LevelScale& scale = {});

struct ConstantSet {
  int d = 1;
  double b = 0.0;
  double energy = 0.0;
  int n = 0;
  double kappa = 1.0;
  double rho_sup = 1.0;
  std::string scale;
  double E0 = 0.0;
  double c_bd = 0.0;
  double C_W = 0.0;
  /// c(b, d) / kappa^2, with b in the role of E2.
  double K1 = 0.0;

  nlohmann::json to_json() const;
};

ConstantSet compute_constants(int d, double b, double energy, int n, double kappa, double rho_sup,
                              const LevelScale& scale = {});

struct DosConfig {
  BoxDomain domain;
  SingleSite site;
  Distribution dist = UniformUnit{};
  std::uint64_t master_seed = 0;
  unsigned workers = 1;

  void validate() const;
  /// Covering case: characteristic single-site profile and uniform couplings on [0, 1].
  bool covering() const { return site.is_characteristic() && is_uniform_unit(dist); }
  nlohmann::json describe() const;
};

/// A single coupling held fixed in every realization.
struct Pin {
  std::size_t cube = 0;
  double value = 0.0;
};

/// Eigenvalues of H_omega for realizations 0..n_samples-1, in realization order.
std::vector<Eigen::VectorXd> sample_spectra(const DosConfig& config, std::size_t n_samples,
                                            std::optional<Pin> pin = std::nullopt);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

McEstimate mean_estimate(const std::vector<double>& xs);

/// Eigenvalues in (lo, hi], with the closed-interval tie tolerance.
std::size_t count_half_open(const Eigen::VectorXd& eigenvalues, double lo, double hi);

/// mu_Lambda(I): mean of Tr P(I) / |Lambda|.
McEstimate mc_ldos_measure(const std::vector<Eigen::VectorXd>& spectra, const BoxDomain& domain,
                           const EnergyInterval& interval);
McEstimate mc_ldos_measure(const DosConfig& config, const EnergyInterval& interval, std::size_t n_samples);

/// E[Tr P(I)] <= |I| |Lambda| C_W(b, n) + 3 sigma.
VerificationReport wegner_check(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config,
                                const EnergyInterval& interval, int n, const LevelScale& scale = {});
VerificationReport wegner_check(const DosConfig& config, const EnergyInterval& interval, int n,
                                std::size_t n_samples, const LevelScale& scale = {});

struct DosEstimate {
  std::vector<double> energies;
  double epsilon = 0.0;
  std::vector<double> values;
  std::vector<double> stderrs;
  std::size_t samples = 0;
  std::uint64_t master_seed = 0;
};

/// n^eps(E) = E[Tr P((E, E+eps])] / (eps |Lambda|) on a grid.
DosEstimate ldos_function(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config,
                          const std::vector<double>& energies, double epsilon);
DosEstimate ldos_function(const DosConfig& config, const std::vector<double>& energies, double epsilon,
                          std::size_t n_samples);

/// n^eps(E) <= C_W(E + eps) + 3 sigma at every grid point; reports the worst point.
VerificationReport ldos_bound_check(const DosEstimate& estimate, const DosConfig& config, int n,
                                    const LevelScale& scale = {});

/// Largest pairwise gap between estimates of an eps ladder at E, against the
/// combined 3 sigma.
VerificationReport ladder_stability(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config,
                                    double energy, const std::vector<double>& epsilons);

/// |n^eps(E2) - n^eps(E1)| <= min{C_W, K1 |Lambda| (E2 - E1)} + 3 sigma of the
/// paired differences, with both constants at E2 + eps.
VerificationReport lipschitz_check(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config, double e1,
                                   double e2, double epsilon, const LevelScale& scale = {});
VerificationReport lipschitz_check(const DosConfig& config, double e1, double e2, double epsilon,
                                   std::size_t n_samples, const LevelScale& scale = {});

/// E over the other sites of Tr P(I) with omega_k = tau, against
/// c(b, d) kappa^{-2} |Lambda| |I| + 3 sigma.
VerificationReport fixed_site_wegner(const std::vector<Eigen::VectorXd>& pinned_spectra, const DosConfig& config,
                                     std::size_t cube, double tau, const EnergyInterval& interval,
                                     const LevelScale& scale = {});
VerificationReport fixed_site_wegner(const DosConfig& config, std::size_t cube, double tau,
                                     const EnergyInterval& interval, std::size_t n_samples,
                                     const LevelScale& scale = {});

/// E[Tr P_{tau=0}([E1,E2]) - Tr P_{tau=1}([E1,E2])] <= c(E2, d) kappa^{-2} |Lambda| (E2 - E1) + 3 sigma.
VerificationReport fixed_site_chain(const std::vector<Eigen::VectorXd>& spectra_low,
                                    const std::vector<Eigen::VectorXd>& spectra_high, const DosConfig& config,
                                    double e1, double e2, const LevelScale& scale = {});

/// Every eigenvalue of the larger potential is at least its partner in the
/// smaller one, realization by realization.
VerificationReport potential_monotonicity(const std::vector<Eigen::VectorXd>& spectra_low,
                                          const std::vector<Eigen::VectorXd>& spectra_high);

/// CSV columns: E, epsilon, n_hat, stderr, samples, master_seed.
void write_dos_csv(const DosEstimate& estimate, std::ostream& out);

}  // namespace speclab
