#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/quadrature.hpp"
#include "speclab/spectral.hpp"

namespace speclab {

struct AveragingOptions {
  /// Coarse grid points for branch continuation over [tau1, tau2].
  std::size_t trace_points = 33;
  /// Absolute quadrature tolerance.
  double tolerance = 1e-10;
  int max_depth = 14;
  BranchOptions branch;
};

/// A family restricted to the coupling window [tau1, tau2], with its branch
/// trace computed once and shared by every omega-integral over the window.
class CouplingWindow {
 public:
  CouplingWindow(const Family& family, double tau1, double tau2, const AveragingOptions& options = {});

  const Family& family() const { return family_; }
  const BranchTrace& trace() const { return trace_; }
  double tau1() const { return tau1_; }
  double tau2() const { return tau2_; }
  const AveragingOptions& options() const { return options_; }

  /// Crossings of level E inside the window, ordered by omega.
  std::vector<CrossingRecord> crossings(double energy, const Eigen::VectorXd* phi = nullptr) const;

  /// int <phi, u P_omega(I) u phi> domega, panels split at the crossings of a and b.
  QuadratureResult average(const Eigen::VectorXd& phi, const EnergyInterval& interval) const;
  /// int Tr(u P_omega(I) u) domega.
  QuadratureResult trace_average(const EnergyInterval& interval) const;

 private:
  QuadratureResult integrate(const EnergyInterval& interval,
                             const std::function<double(const SpectralData&, Eigen::Index)>& term) const;

  Family family_;
  double tau1_;
  double tau2_;
  AveragingOptions options_;
  BranchTrace trace_;
};

/// int_{tau1}^{tau2} <phi, u P_omega(I) u phi> domega.
/// Preconditions: ||u^2|| <= 1, ||phi|| = 1, tau1 < tau2.
double spectral_average(const Family& family, const Eigen::VectorXd& phi, const EnergyInterval& interval,
                        double tau1, double tau2, const AveragingOptions& options = {});
double spectral_average(const CouplingWindow& window, const Eigen::VectorXd& phi,
                        const EnergyInterval& interval);

/// The same integral after the change of variables omega -> E: the sum over
/// branches of int_I f_j(E) dE restricted to crossings inside the window.
double spectral_average_energy_route(const BirmanSchwinger& bs, const Family& family, const Eigen::VectorXd& phi,
                                     const EnergyInterval& interval, double tau1, double tau2,
                                     double tolerance = 1e-10);

struct FullLineResult {
  double value = 0.0;
  /// |I| * ||phi||^2 on supp u.
  double expected = 0.0;
  int panels = 0;
  int shifted_nodes = 0;
};

/// int_I sum_j f_j(E) dE over all crossings on the real line. Precondition:
/// both endpoints of I farther than 1e-6 ||H_0|| from sigma(H_0).
FullLineResult spectral_average_full_line(const BirmanSchwinger& bs, const Eigen::VectorXd& phi,
                                          const EnergyInterval& interval, double tolerance = 1e-10);

struct EtaResult {
  double eta = 0.0;
  std::vector<double> epsilons;
  std::vector<double> finite_eps;
  double extrapolated = 0.0;
  /// E sits within the epsilon ladder of a window endpoint eigenvalue.
  bool unstable = false;
};

/// eta_phi(E) = sum of f_j(E) over crossings with omega_j(E) in the window,
/// checked against (1/eps) int <phi, u P_omega([E, E+eps]) u phi> domega.
EtaResult eta_density(const CouplingWindow& window, const BirmanSchwinger& bs, const Eigen::VectorXd& phi,
                      double energy, std::vector<double> epsilons = {1e-3, 1e-4});

struct AverageRow {
  std::size_t phi_id = 0;
  double a = 0.0;
  double b = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// CSV columns: phi_id, I_a, I_b, tau1, tau2, lhs, rhs, margin.
void write_average_csv(const std::vector<AverageRow>& rows, std::ostream& out);

}  // namespace speclab
