#include "speclab/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "speclab/errors.hpp"

namespace speclab {

namespace {

void check_window(double tau1, double tau2) {
  if (!(tau1 < tau2)) {
    std::ostringstream os;
    os << "coupling window needs tau1 < tau2 (got " << tau1 << ", " << tau2 << ")";
    throw ConfigError(os.str());
  }
}

SpectralData quick_decompose(const Family& family, double omega) {
  EigenOptions opts;
  opts.verify = false;
  return eigendecompose(family.at(omega), family.cell_volume(), "quadrature node", opts);
}

/// Sorted breaks of [lo, hi] with the interior points of `extra` added.
std::vector<double> breaks_with(double lo, double hi, const std::vector<double>& extra) {
  std::vector<double> out{lo, hi};
  for (double x : extra)
    if (x > lo && x < hi) out.push_back(x);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

CouplingWindow::CouplingWindow(const Family& family, double tau1, double tau2, const AveragingOptions& options)
    : family_(family), tau1_(tau1), tau2_(tau2), options_(options) {
  check_window(tau1, tau2);
  if (options.trace_points < 2) throw ConfigError("coupling window needs at least two trace points");
  trace_ = trace_branches(family_, uniform_grid(tau1, tau2, options.trace_points), options.branch);
}

std::vector<CrossingRecord> CouplingWindow::crossings(double energy, const Eigen::VectorXd* phi) const {
  return level_crossings(family_, trace_, energy, tau1_, tau2_, phi, options_.branch);
}

QuadratureResult CouplingWindow::integrate(
    const EnergyInterval& interval, const std::function<double(const SpectralData&, Eigen::Index)>& term) const {
  std::vector<double> cuts;
  for (const auto& c : crossings(interval.a)) cuts.push_back(c.omega);
  for (const auto& c : crossings(interval.b)) cuts.push_back(c.omega);
  auto f = [&](double omega) {
    const SpectralData spec = quick_decompose(family_, omega);
    double s = 0.0;
    for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j)
      if (interval.contains(spec.eigenvalues[j])) s += term(spec, j);
    return s;
  };
  return panel_quadrature(f, breaks_with(tau1_, tau2_, cuts), options_.tolerance, options_.max_depth);
}

QuadratureResult CouplingWindow::average(const Eigen::VectorXd& phi, const EnergyInterval& interval) const {
  if (static_cast<std::size_t>(phi.size()) != family_.size()) throw ConfigError("phi has the wrong size");
  const Eigen::VectorXd uphi = family_.u().cwiseProduct(phi);
  const double w = family_.cell_volume();
  return integrate(interval, [&](const SpectralData& spec, Eigen::Index j) {
    const double c = w * spec.eigenvectors.col(j).dot(uphi);
    return c * c;
  });
}

QuadratureResult CouplingWindow::trace_average(const EnergyInterval& interval) const {
  const Eigen::VectorXd& u2 = family_.coupling();
  const double w = family_.cell_volume();
  return integrate(interval, [&](const SpectralData& spec, Eigen::Index j) {
    return w * spec.eigenvectors.col(j).array().square().matrix().dot(u2);
  });
}

double spectral_average(const CouplingWindow& window, const Eigen::VectorXd& phi, const EnergyInterval& interval) {
  const Family& family = window.family();
  if (family.coupling_norm() > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "spectral averaging needs ||u^2|| <= 1 (got " << family.coupling_norm() << ")";
    throw PreconditionError(os.str());
  }
  const double norm_sq = family.cell_volume() * phi.squaredNorm();
  if (std::abs(norm_sq - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "spectral averaging needs ||phi|| = 1 (got ||phi||^2 = " << norm_sq << ")";
    throw PreconditionError(os.str());
  }
  return window.average(phi, interval).value;
}

double spectral_average(const Family& family, const Eigen::VectorXd& phi, const EnergyInterval& interval,
                        double tau1, double tau2, const AveragingOptions& options) {
  check_window(tau1, tau2);
  return spectral_average(CouplingWindow(family, tau1, tau2, options), phi, interval);
}

namespace {

/// Crossings at E, nudging E off sigma(H_0) when it sits too close.
std::vector<BirmanSchwinger::Crossing> nudged_crossings(const BirmanSchwinger& bs, double energy, int* shifted) {
  const double guard = 1e-6 * bs.h0_norm();
  if (bs.distance_to_spectrum(energy) > guard) return bs.crossings(energy);
  for (double sign : {1.0, -1.0}) {
    const double e = energy + sign * 2.0 * guard;
    if (bs.distance_to_spectrum(e) > guard) {
      if (shifted) ++*shifted;
      return bs.crossings(e);
    }
  }
  std::ostringstream os;
  os << "quadrature node E = " << energy << " cannot be moved clear of sigma(H_0)";
  throw PreconditionError(os.str());
}

}  // namespace

double spectral_average_energy_route(const BirmanSchwinger& bs, const Family& family, const Eigen::VectorXd& phi,
                                     const EnergyInterval& interval, double tau1, double tau2, double tolerance) {
  check_window(tau1, tau2);
  std::vector<double> cuts;
  for (double omega : {tau1, tau2}) {
    const Eigen::VectorXd ev = eigenvalues_only(family.at(omega));
    cuts.insert(cuts.end(), ev.data(), ev.data() + ev.size());
  }
  const Eigen::VectorXd& ev0 = bs.h0_eigenvalues();
  cuts.insert(cuts.end(), ev0.data(), ev0.data() + ev0.size());
  auto f = [&](double e) {
    double s = 0.0;
    for (const auto& c : nudged_crossings(bs, e, nullptr))
      if (c.omega >= tau1 && c.omega <= tau2) s += bs.weight(c, phi);
    return s;
  };
  return panel_quadrature(f, breaks_with(interval.a, interval.b, cuts), tolerance).value;
}

FullLineResult spectral_average_full_line(const BirmanSchwinger& bs, const Eigen::VectorXd& phi,
                                          const EnergyInterval& interval, double tolerance) {
  const double guard = 1e-6 * bs.h0_norm();
  for (double e : {interval.a, interval.b}) {
    if (bs.distance_to_spectrum(e) <= guard) {
      std::ostringstream os;
      os << "interval endpoint " << e << " lies within 1e-6 ||H_0|| of sigma(H_0)";
      throw PreconditionError(os.str());
    }
  }
  const Eigen::VectorXd& ev0 = bs.h0_eigenvalues();
  std::vector<double> cuts(ev0.data(), ev0.data() + ev0.size());
  FullLineResult out;
  auto f = [&](double e) {
    double s = 0.0;
    for (const auto& c : nudged_crossings(bs, e, &out.shifted_nodes)) s += bs.weight(c, phi);
    return s;
  };
  const auto q = panel_quadrature(f, breaks_with(interval.a, interval.b, cuts), tolerance);
  out.value = q.value;
  out.panels = q.panels;
  out.expected = interval.length() * bs.support_norm_sq(phi);
  return out;
}

EtaResult eta_density(const CouplingWindow& window, const BirmanSchwinger& bs, const Eigen::VectorXd& phi,
                      double energy, std::vector<double> epsilons) {
  if (epsilons.size() < 2) throw ConfigError("eta_density needs at least two epsilons");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ConfigError("eta_density: epsilon must be positive");
  std::sort(epsilons.rbegin(), epsilons.rend());

  EtaResult out;
  for (const auto& c : nudged_crossings(bs, energy, nullptr))
    if (c.omega >= window.tau1() && c.omega <= window.tau2()) out.eta += bs.weight(c, phi);

  for (double e : epsilons) {
    out.epsilons.push_back(e);
    out.finite_eps.push_back(window.average(phi, EnergyInterval(energy, energy + e)).value / e);
  }
  const std::size_t n = epsilons.size();
  const double e1 = epsilons[n - 2], e2 = epsilons[n - 1];
  const double v1 = out.finite_eps[n - 2], v2 = out.finite_eps[n - 1];
  out.extrapolated = (e1 * v2 - e2 * v1) / (e1 - e2);

  // A window-endpoint eigenvalue inside [E, E + eps_max] means a branch
  // starts or stops inside the ladder: the finite-eps values are not smooth.
  const double reach = epsilons.front();
  const double tol = 1e-9 * std::max(1.0, std::abs(energy));
  for (std::size_t i : {std::size_t{0}, window.trace().points() - 1}) {
    const auto& ev = window.trace().spectra[i].eigenvalues;
    for (Eigen::Index j = 0; j < ev.size(); ++j)
      if (ev[j] >= energy - tol && ev[j] <= energy + reach + tol) out.unstable = true;
  }
  return out;
}

void write_average_csv(const std::vector<AverageRow>& rows, std::ostream& out) {
  out << "phi_id,I_a,I_b,tau1,tau2,lhs,rhs,margin\n" << std::setprecision(17);
  for (const auto& r : rows)
    out << r.phi_id << ',' << r.a << ',' << r.b << ',' << r.tau1 << ',' << r.tau2 << ',' << r.lhs << ',' << r.rhs
        << ',' << (r.rhs - r.lhs) << '\n';
}

}  // namespace speclab
