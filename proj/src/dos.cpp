#include "speclab/dos.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "speclab/cube_basis.hpp"
#include "speclab/errors.hpp"
#include "speclab/parallel.hpp"

namespace speclab {

double LevelScale::level(int n) const {
  if (is_discrete()) return neumann_level_1d(m, n);
  return static_cast<double>(n) * n * std::numbers::pi * std::numbers::pi;
}

double energy_threshold(int d, const LevelScale& scale) {
  if (d < 1) throw ConfigError("dimension must be positive");
  const double l1 = scale.level(1);
  return 0.5 * l1 * d / (2.0 * l1 + d);
}

double trace_constant(double b, int d, const LevelScale& scale) {
  const double e0 = energy_threshold(d, scale);
  if (!(b > 0.0) || !(b < e0)) {
    std::ostringstream os;
    os << "c(b, d) needs 0 < b < E0(" << d << ") = " << e0 << " (" << scale.name() << " levels), got b = " << b
       << "; otherwise the coefficient of the last trace term, (1 - b/lambda_1)^{-1}(d + 4b)/(2d), is not below 1";
    throw DomainError(os.str());
  }
  const double l1 = scale.level(1);
  return 1.0 / (1.0 - b / l1 - (d + 4.0 * b) / (2.0 * d));
}

double wegner_constant(double energy, int n, double kappa, double rho_sup, const LevelScale& scale) {
  if (n < 0) throw ConfigError("level cap n must be nonnegative");
  if (!(kappa > 0.0)) throw DomainError("C_W needs kappa > 0");
  if (!(rho_sup > 0.0)) throw DomainError("C_W needs a positive density bound");
  const double level = scale.level(n + 1);
  if (!(energy < level)) {
    std::ostringstream os;
    os << "C_W needs E = " << energy << " below the level lambda_{n+1} = " << level << " (" << scale.name()
       << ", n = " << n << ")";
    throw DomainError(os.str());
  }
  return rho_sup * (n + 1.0) / (kappa * (1.0 - energy / level));
}

nlohmann::json ConstantSet::to_json() const {
  return {{"d", d},      {"b", b},   {"E", energy}, {"n", n},     {"kappa", kappa}, {"rho_sup", rho_sup},
          {"scale", scale}, {"E0", E0}, {"c_bd", c_bd}, {"C_W", C_W}, {"K1", K1}};
}

ConstantSet compute_constants(int d, double b, double energy, int n, double kappa, double rho_sup,
                              const LevelScale& scale) {
  ConstantSet c;
  c.d = d;
  c.b = b;
  c.energy = energy;
  c.n = n;
  c.kappa = kappa;
  c.rho_sup = rho_sup;
  c.scale = scale.name();
  c.E0 = energy_threshold(d, scale);
  c.c_bd = trace_constant(b, d, scale);
  c.C_W = wegner_constant(energy, n, kappa, rho_sup, scale);
  c.K1 = c.c_bd / (kappa * kappa);
  return c;
}

void DosConfig::validate() const {
  domain.validate();
  site.validate(domain);
  validate_distribution(dist);
  if (workers == 0) throw ConfigError("worker count must be positive");
}

nlohmann::json DosConfig::describe() const {
  return {{"d", domain.d},
          {"L", domain.L},
          {"m", domain.m},
          {"bc", std::string(to_string(domain.bc))},
          {"kappa", site.kappa},
          {"master_seed", master_seed}};
}

std::vector<Eigen::VectorXd> sample_spectra(const DosConfig& config, std::size_t n_samples, std::optional<Pin> pin) {
  config.validate();
  if (pin && pin->cube >= config.domain.cube_count()) throw ConfigError("pinned site lies outside the box");
  if (pin && pin->value < 0.0) throw ConfigError("pinned coupling must be nonnegative");
  const SymmetricOperator lap = build_laplacian(config.domain);
  const Eigen::MatrixXd lap_dense = lap.dense();
  std::vector<Eigen::VectorXd> profiles;
  for (std::size_t k = 0; k < config.domain.cube_count(); ++k)
    profiles.push_back(site_profile_squared(config.domain, config.site, k));
  return parallel_map(n_samples, config.workers, [&](std::size_t r) {
    DisorderRealization real = sample_disorder(config.dist, config.domain, config.master_seed, r);
    if (pin) real.omegas[pin->cube] = pin->value;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(lap_dense.rows());
    for (std::size_t k = 0; k < profiles.size(); ++k) v += real.omegas[k] * profiles[k];
    Eigen::MatrixXd h = lap_dense;
    h.diagonal() += v;
    return eigenvalues_only(h);
  });
}

McEstimate mean_estimate(const std::vector<double>& xs) {
  McEstimate e;
  e.samples = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return e;
}

std::size_t count_half_open(const Eigen::VectorXd& eigenvalues, double lo, double hi) {
  const double tol = EnergyInterval(lo, hi).tie_tolerance();
  std::size_t c = 0;
  for (Eigen::Index j = 0; j < eigenvalues.size(); ++j)
    if (eigenvalues[j] > lo + tol && eigenvalues[j] <= hi + tol) ++c;
  return c;
}

namespace {

std::vector<double> counts(const std::vector<Eigen::VectorXd>& spectra, const EnergyInterval& interval,
                           double scale = 1.0) {
  std::vector<double> out;
  out.reserve(spectra.size());
  for (const auto& ev : spectra) out.push_back(static_cast<double>(count_in(ev, interval)) * scale);
  return out;
}

void require_samples(const std::vector<Eigen::VectorXd>& spectra) {
  if (spectra.size() < 2) throw ConfigError("Monte Carlo checks need at least two samples");
}

nlohmann::json mc_params(const DosConfig& config, std::size_t samples, const McEstimate& est,
                         const LevelScale& scale) {
  nlohmann::json j = config.describe();
  j["n_samples"] = samples;
  j["stderr"] = est.stderr_;
  j["constants"] = scale.name();
  return j;
}

}  // namespace

McEstimate mc_ldos_measure(const std::vector<Eigen::VectorXd>& spectra, const BoxDomain& domain,
                           const EnergyInterval& interval) {
  return mean_estimate(counts(spectra, interval, 1.0 / domain.volume()));
}

McEstimate mc_ldos_measure(const DosConfig& config, const EnergyInterval& interval, std::size_t n_samples) {
  return mc_ldos_measure(sample_spectra(config, n_samples), config.domain, interval);
}

VerificationReport wegner_check(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config,
                                const EnergyInterval& interval, int n, const LevelScale& scale) {
  require_samples(spectra);
  const double cw = wegner_constant(interval.b, n, config.site.kappa, density_sup(config.dist), scale);
  const McEstimate est = mean_estimate(counts(spectra, interval));
  const double rhs = interval.length() * config.domain.volume() * cw;
  auto r = VerificationReport::inequality("wegner", est.mean, rhs, 3.0 * est.stderr_);
  r.params = mc_params(config, spectra.size(), est, scale);
  r.params["a"] = interval.a;
  r.params["b"] = interval.b;
  r.params["n"] = n;
  r.params["C_W"] = cw;
  r.seed = config.master_seed;
  return r;
}

VerificationReport wegner_check(const DosConfig& config, const EnergyInterval& interval, int n,
                                std::size_t n_samples, const LevelScale& scale) {
  wegner_constant(interval.b, n, config.site.kappa, density_sup(config.dist), scale);
  return wegner_check(sample_spectra(config, n_samples), config, interval, n, scale);
}

DosEstimate ldos_function(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config,
                          const std::vector<double>& energies, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("ldos epsilon must be positive");
  DosEstimate out;
  out.energies = energies;
  out.epsilon = epsilon;
  out.samples = spectra.size();
  out.master_seed = config.master_seed;
  const double norm = 1.0 / (epsilon * config.domain.volume());
  for (double e : energies) {
    std::vector<double> xs;
    xs.reserve(spectra.size());
    for (const auto& ev : spectra) xs.push_back(static_cast<double>(count_half_open(ev, e, e + epsilon)) * norm);
    const McEstimate m = mean_estimate(xs);
    out.values.push_back(m.mean);
    out.stderrs.push_back(m.stderr_);
  }
  return out;
}

DosEstimate ldos_function(const DosConfig& config, const std::vector<double>& energies, double epsilon,
                          std::size_t n_samples) {
  if (!(epsilon > 0.0)) throw ConfigError("ldos epsilon must be positive");
  return ldos_function(sample_spectra(config, n_samples), config, energies, epsilon);
}

VerificationReport ldos_bound_check(const DosEstimate& estimate, const DosConfig& config, int n,
                                    const LevelScale& scale) {
  if (estimate.energies.empty()) throw ConfigError("ldos bound check needs a nonempty energy grid");
  const double rho = density_sup(config.dist);
  VerificationReport worst;
  double worst_slack = std::numeric_limits<double>::infinity();
  bool all = true;
  for (std::size_t i = 0; i < estimate.energies.size(); ++i) {
    const double e = estimate.energies[i];
    const double cw = wegner_constant(e + estimate.epsilon, n, config.site.kappa, rho, scale);
    auto r = VerificationReport::inequality("ldos_bound", estimate.values[i], cw, 3.0 * estimate.stderrs[i]);
    all = all && r.passed;
    const double slack = r.margin + 3.0 * estimate.stderrs[i];
    if (slack < worst_slack) {
      worst_slack = slack;
      worst = r;
      worst.params = config.describe();
      worst.params["E"] = e;
      worst.params["epsilon"] = estimate.epsilon;
      worst.params["stderr"] = estimate.stderrs[i];
      worst.params["n_samples"] = estimate.samples;
      worst.params["constants"] = scale.name();
    }
  }
  worst.passed = all;
  worst.seed = config.master_seed;
  return worst;
}

VerificationReport ladder_stability(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config,
                                    double energy, const std::vector<double>& epsilons) {
  if (epsilons.size() < 2) throw ConfigError("epsilon ladder needs at least two entries");
  std::vector<DosEstimate> est;
  for (double eps : epsilons) est.push_back(ldos_function(spectra, config, {energy}, eps));
  double gap = 0.0, allowed = 0.0, worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      const double g = std::abs(est[i].values[0] - est[j].values[0]);
      const double s = 3.0 * std::hypot(est[i].stderrs[0], est[j].stderrs[0]);
      if (s - g < worst) {
        worst = s - g;
        gap = g;
        allowed = s;
      }
    }
  auto r = VerificationReport::inequality("ldos_ladder", gap, allowed);
  r.params = config.describe();
  r.params["E"] = energy;
  r.params["epsilons"] = epsilons;
  r.params["n_samples"] = spectra.size();
  r.seed = config.master_seed;
  return r;
}

VerificationReport lipschitz_check(const std::vector<Eigen::VectorXd>& spectra, const DosConfig& config, double e1,
                                   double e2, double epsilon, const LevelScale& scale) {
  if (!config.covering())
    throw ConfigError("Lipschitz check needs a characteristic single-site profile and uniform [0,1] couplings");
  if (!(epsilon > 0.0)) throw ConfigError("ldos epsilon must be positive");
  if (!(e1 >= 0.0) || !(e1 <= e2)) throw ConfigError("Lipschitz check needs 0 <= E1 <= E2");
  const double e0 = energy_threshold(config.domain.d, scale);
  const double top = e2 + epsilon;
  if (!(top < e0)) {
    std::ostringstream os;
    os << "Lipschitz check needs E2 + eps = " << top << " below E0(" << config.domain.d << ") = " << e0 << " ("
       << scale.name() << " levels)";
    throw DomainError(os.str());
  }
  require_samples(spectra);
  const double kappa = config.site.kappa;
  const double cw = wegner_constant(top, 0, kappa, density_sup(config.dist), scale);
  const double k1 = trace_constant(top, config.domain.d, scale) / (kappa * kappa);
  const double norm = 1.0 / (epsilon * config.domain.volume());
  std::vector<double> diffs;
  diffs.reserve(spectra.size());
  for (const auto& ev : spectra)
    diffs.push_back((static_cast<double>(count_half_open(ev, e2, e2 + epsilon)) -
                     static_cast<double>(count_half_open(ev, e1, e1 + epsilon))) *
                    norm);
  const McEstimate d = mean_estimate(diffs);
  const double rhs = std::min(cw, k1 * config.domain.volume() * (e2 - e1));
  auto r = VerificationReport::inequality("lipschitz", std::abs(d.mean), rhs, 3.0 * d.stderr_);
  r.params = mc_params(config, spectra.size(), d, scale);
  r.params["E1"] = e1;
  r.params["E2"] = e2;
  r.params["epsilon"] = epsilon;
  r.params["C_W"] = cw;
  r.params["K1"] = k1;
  r.seed = config.master_seed;
  return r;
}

VerificationReport lipschitz_check(const DosConfig& config, double e1, double e2, double epsilon,
                                   std::size_t n_samples, const LevelScale& scale) {
  // Validate before sampling.
  lipschitz_check(std::vector<Eigen::VectorXd>(2, Eigen::VectorXd()), config, e1, e2, epsilon, scale);
  return lipschitz_check(sample_spectra(config, n_samples), config, e1, e2, epsilon, scale);
}

namespace {

void check_fixed_site(const DosConfig& config, std::size_t cube, double tau) {
  if (config.domain.bc != Boundary::Dirichlet)
    throw ConfigError("fixed-site trace bound needs Dirichlet boundary conditions");
  if (cube >= config.domain.cube_count()) throw ConfigError("fixed site lies outside the box");
  if (!(tau >= 0.0)) throw ConfigError("fixed-site coupling must be nonnegative");
  if (!(config.site.kappa > 0.0)) throw DomainError("fixed-site trace bound needs kappa > 0");
}

}  // namespace

VerificationReport fixed_site_wegner(const std::vector<Eigen::VectorXd>& pinned_spectra, const DosConfig& config,
                                     std::size_t cube, double tau, const EnergyInterval& interval,
                                     const LevelScale& scale) {
  check_fixed_site(config, cube, tau);
  require_samples(pinned_spectra);
  const double kappa = config.site.kappa;
  const double c = trace_constant(interval.b, config.domain.d, scale);
  const McEstimate est = mean_estimate(counts(pinned_spectra, interval));
  const double rhs = c / (kappa * kappa) * config.domain.volume() * interval.length();
  auto r = VerificationReport::inequality("fixed_site_wegner", est.mean, rhs, 3.0 * est.stderr_);
  r.params = mc_params(config, pinned_spectra.size(), est, scale);
  r.params["cube"] = cube;
  r.params["tau"] = tau;
  r.params["a"] = interval.a;
  r.params["b"] = interval.b;
  r.params["c_bd"] = c;
  r.seed = config.master_seed;
  return r;
}

VerificationReport fixed_site_wegner(const DosConfig& config, std::size_t cube, double tau,
                                     const EnergyInterval& interval, std::size_t n_samples,
                                     const LevelScale& scale) {
  check_fixed_site(config, cube, tau);
  trace_constant(interval.b, config.domain.d, scale);
  return fixed_site_wegner(sample_spectra(config, n_samples, Pin{cube, tau}), config, cube, tau, interval, scale);
}

VerificationReport fixed_site_chain(const std::vector<Eigen::VectorXd>& spectra_low,
                                    const std::vector<Eigen::VectorXd>& spectra_high, const DosConfig& config,
                                    double e1, double e2, const LevelScale& scale) {
  if (spectra_low.size() != spectra_high.size()) throw ConfigError("paired spectra differ in count");
  require_samples(spectra_low);
  if (!(e1 <= e2)) throw ConfigError("chain check needs E1 <= E2");
  const double kappa = config.site.kappa;
  const double c = trace_constant(e2, config.domain.d, scale);
  const EnergyInterval interval(e1, e2);
  std::vector<double> diffs;
  for (std::size_t r = 0; r < spectra_low.size(); ++r)
    diffs.push_back(static_cast<double>(count_in(spectra_low[r], interval)) -
                    static_cast<double>(count_in(spectra_high[r], interval)));
  const McEstimate est = mean_estimate(diffs);
  const double rhs = c / (kappa * kappa) * config.domain.volume() * (e2 - e1);
  auto r = VerificationReport::inequality("fixed_site_chain", est.mean, rhs, 3.0 * est.stderr_);
  r.params = mc_params(config, spectra_low.size(), est, scale);
  r.params["E1"] = e1;
  r.params["E2"] = e2;
  r.params["c_bd"] = c;
  r.seed = config.master_seed;
  return r;
}

VerificationReport potential_monotonicity(const std::vector<Eigen::VectorXd>& spectra_low,
                                          const std::vector<Eigen::VectorXd>& spectra_high) {
  if (spectra_low.size() != spectra_high.size()) throw ConfigError("paired spectra differ in count");
  double worst = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (std::size_t r = 0; r < spectra_low.size(); ++r) {
    if (spectra_low[r].size() != spectra_high[r].size()) throw ConfigError("paired spectra differ in size");
    if (spectra_low[r].size() == 0) continue;
    worst = std::min(worst, (spectra_high[r] - spectra_low[r]).minCoeff());
    scale = std::max(scale, spectra_high[r].cwiseAbs().maxCoeff());
  }
  if (!std::isfinite(worst)) worst = 0.0;
  // lhs = -(smallest upward shift): nonpositive when every eigenvalue moved up.
  auto r = VerificationReport::inequality("potential_monotonicity", -worst, 0.0, 1e-10 * scale);
  r.params = {{"pairs", spectra_low.size()}};
  return r;
}

void write_dos_csv(const DosEstimate& estimate, std::ostream& out) {
  out << "E,epsilon,n_hat,stderr,samples,master_seed\n" << std::setprecision(17);
  for (std::size_t i = 0; i < estimate.energies.size(); ++i)
    out << estimate.energies[i] << ',' << estimate.epsilon << ',' << estimate.values[i] << ','
        << estimate.stderrs[i] << ',' << estimate.samples << ',' << estimate.master_seed << '\n';
}

}  // namespace speclab
