#include "speclab/ssf.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "speclab/errors.hpp"

namespace speclab {

namespace {

double spectrum_norm(const Eigen::VectorXd& ev) {
  if (ev.size() == 0) return 1.0;
  return std::max(1.0, std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1])));
}

double distance(const Eigen::VectorXd& ev, double e) {
  return ev.size() ? (ev.array() - e).abs().minCoeff() : std::numeric_limits<double>::infinity();
}

}  // namespace

int ssf_trace_difference(const Eigen::VectorXd& ev_tau1, const Eigen::VectorXd& ev_tau2, double energy) {
  if (ev_tau1.size() != ev_tau2.size()) throw ConfigError("ssf_trace_difference: spectra differ in size");
  for (const auto* ev : {&ev_tau1, &ev_tau2}) {
    const double d = distance(*ev, energy);
    if (d <= 1e-8 * spectrum_norm(*ev)) {
      std::ostringstream os;
      os << "E = " << energy << " lies within " << d << " of an endpoint spectrum; perturb E";
      throw PreconditionError(os.str());
    }
  }
  return static_cast<int>(count_below(ev_tau1, energy)) - static_cast<int>(count_below(ev_tau2, energy));
}

NudgedEnergy move_off_spectra(double energy, const std::vector<const Eigen::VectorXd*>& spectra) {
  double norm = 1.0;
  for (const auto* ev : spectra) norm = std::max(norm, spectrum_norm(*ev));
  NudgedEnergy out{energy, 0};
  for (; out.shifts < 1000; ++out.shifts) {
    bool clear = true;
    for (const auto* ev : spectra)
      if (distance(*ev, out.energy) <= 1e-8 * norm) clear = false;
    if (clear) return out;
    out.energy += 1e-7 * norm;
  }
  throw PreconditionError("could not move E off the endpoint spectra");
}

int ssf_crossing_count(const Family& family, const BranchTrace& trace, double energy, double tau1, double tau2,
                       const BranchOptions& options) {
  return static_cast<int>(level_crossings(family, trace, energy, tau1, tau2, nullptr, options).size());
}

int ssf_crossing_count(const CouplingWindow& window, double energy) {
  return static_cast<int>(window.crossings(energy).size());
}

BirmanSolomyakResult birman_solomyak_limit(const CouplingWindow& window, double energy,
                                           std::vector<double> epsilons) {
  if (epsilons.size() < 2) throw ConfigError("Birman-Solomyak ladder needs at least two epsilons");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ConfigError("Birman-Solomyak ladder: epsilon must be positive");
  std::sort(epsilons.rbegin(), epsilons.rend());
  BirmanSolomyakResult out;
  for (double e : epsilons) {
    out.epsilons.push_back(e);
    out.values.push_back(window.trace_average(EnergyInterval(energy, energy + e)).value / e);
  }
  const std::size_t n = out.values.size();
  const double e1 = epsilons[n - 2], e2 = epsilons[n - 1];
  out.extrapolant = (e1 * out.values[n - 1] - e2 * out.values[n - 2]) / (e1 - e2);

  // The ladder must approach its limit monotonically.
  const double tol = 1e-6;
  bool up = true, down = true;
  for (std::size_t i = 1; i < n; ++i) {
    if (out.values[i] < out.values[i - 1] - tol) up = false;
    if (out.values[i] > out.values[i - 1] + tol) down = false;
  }
  out.unstable = !(up || down);
  return out;
}

VerificationReport ssf_bound_check(const Eigen::VectorXd& ev_tau1, const Eigen::VectorXd& ev_tau2, double energy,
                                   double tau1, double tau2, double u_norm_sq) {
  if (tau2 < tau1) throw ConfigError("ssf_bound_check needs tau1 <= tau2");
  const int xi = tau2 == tau1 ? 0 : ssf_trace_difference(ev_tau1, ev_tau2, energy);
  const EnergyInterval window(energy - u_norm_sq * (tau2 - tau1), energy);
  const auto rhs = count_in(ev_tau1, window);
  auto r = VerificationReport::inequality("ssf_bound", xi, static_cast<double>(rhs));
  r.params = {{"E", energy}, {"tau1", tau1}, {"tau2", tau2}, {"u_norm_sq", u_norm_sq}};
  return r;
}

double integrated_ssf(const Eigen::VectorXd& ev_tau1, const Eigen::VectorXd& ev_tau2,
                      const EnergyInterval& interval) {
  if (ev_tau1.size() != ev_tau2.size()) throw ConfigError("integrated_ssf: spectra differ in size");
  double s = 0.0;
  for (Eigen::Index j = 0; j < ev_tau1.size(); ++j) {
    const double lo = std::max(interval.a, std::min(ev_tau1[j], ev_tau2[j]));
    const double hi = std::min(interval.b, std::max(ev_tau1[j], ev_tau2[j]));
    if (hi > lo) s += ev_tau2[j] >= ev_tau1[j] ? hi - lo : lo - hi;
  }
  return s;
}

bool SsfRecord::limit_agrees() const { return std::abs(bs_limit - xi_trace) <= 1e-3; }

SsfRecord evaluate_ssf(const CouplingWindow& window, double energy, const std::vector<double>& epsilons) {
  const auto& trace = window.trace();
  const Eigen::VectorXd& ev1 = trace.spectra.front().eigenvalues;
  const Eigen::VectorXd& ev2 = trace.spectra.back().eigenvalues;
  const NudgedEnergy e = move_off_spectra(energy, {&ev1, &ev2});
  SsfRecord r;
  r.energy = e.energy;
  r.energy_shifts = e.shifts;
  r.tau1 = window.tau1();
  r.tau2 = window.tau2();
  r.xi_trace = ssf_trace_difference(ev1, ev2, e.energy);
  r.xi_crossings = ssf_crossing_count(window, e.energy);
  const auto bs = birman_solomyak_limit(window, e.energy, epsilons);
  r.bs_limit = bs.extrapolant;
  r.bs_unstable = bs.unstable;
  r.bound_rhs = static_cast<int>(
      ssf_bound_check(ev1, ev2, e.energy, r.tau1, r.tau2, window.family().coupling_norm()).rhs);
  return r;
}

void write_ssf_csv(const std::vector<SsfRecord>& records, std::ostream& out) {
  out << "E,tau1,tau2,xi_trace,xi_crossings,bs_limit,bound_rhs,routes_agree,limit_agrees,bound_holds,"
         "bs_unstable,energy_shifts\n"
      << std::setprecision(17);
  for (const auto& r : records)
    out << r.energy << ',' << r.tau1 << ',' << r.tau2 << ',' << r.xi_trace << ',' << r.xi_crossings << ','
        << r.bs_limit << ',' << r.bound_rhs << ',' << r.routes_agree() << ',' << r.limit_agrees() << ','
        << r.bound_holds() << ',' << r.bs_unstable << ',' << r.energy_shifts << '\n';
}

}  // namespace speclab
