#pragma once

#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "speclab/averaging.hpp"
#include "speclab/report.hpp"

namespace speclab {

/// xi(E; H_tau2, H_tau1) = #{lambda(H_tau1) < E} - #{lambda(H_tau2) < E}.
/// Throws PreconditionError when E is within 1e-8 ||H|| of either spectrum.
int ssf_trace_difference(const Eigen::VectorXd& ev_tau1, const Eigen::VectorXd& ev_tau2, double energy);

struct NudgedEnergy {
  double energy = 0.0;
  int shifts = 0;
};

/// Moves E up in steps of 1e-7 ||H|| until it clears every spectrum by 1e-8 ||H||.
NudgedEnergy move_off_spectra(double energy, const std::vector<const Eigen::VectorXd*>& spectra);

/// Number of branches with omega_j(E) in [tau1, tau2].
int ssf_crossing_count(const Family& family, const BranchTrace& trace, double energy, double tau1, double tau2,
                       const BranchOptions& options = {});
int ssf_crossing_count(const CouplingWindow& window, double energy);

struct BirmanSolomyakResult {
  std::vector<double> epsilons;
  std::vector<double> values;
  double extrapolant = 0.0;
  bool unstable = false;
};

/// (1/eps) int Tr(u P_omega([E, E+eps]) u) domega over the ladder,
/// Richardson-extrapolated from the two smallest epsilons.
BirmanSolomyakResult birman_solomyak_limit(const CouplingWindow& window, double energy,
                                           std::vector<double> epsilons = {1e-2, 1e-3, 1e-4});

/// xi(E) <= Tr P_tau1([E - ||u||^2 (tau2 - tau1), E]).
VerificationReport ssf_bound_check(const Eigen::VectorXd& ev_tau1, const Eigen::VectorXd& ev_tau2, double energy,
                                   double tau1, double tau2, double u_norm_sq);

/// int_I xi(E) dE, exactly, as sum_j |I cap [lambda_j(tau1), lambda_j(tau2)]|.
double integrated_ssf(const Eigen::VectorXd& ev_tau1, const Eigen::VectorXd& ev_tau2,
                      const EnergyInterval& interval);

struct SsfRecord {
  double energy = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  int xi_trace = 0;
  int xi_crossings = 0;
  double bs_limit = 0.0;
  int bound_rhs = 0;
  bool bs_unstable = false;
  int energy_shifts = 0;

  bool routes_agree() const { return xi_trace == xi_crossings; }
  bool limit_agrees() const;
  bool bound_holds() const { return xi_trace <= bound_rhs; }
};

/// All three routes and the bound at one energy; E is nudged off the window
/// endpoint spectra first.
SsfRecord evaluate_ssf(const CouplingWindow& window, double energy,
                       const std::vector<double>& epsilons = {1e-2, 1e-3, 1e-4});

/// CSV columns: E, tau1, tau2, xi_trace, xi_crossings, bs_limit, bound_rhs,
/// routes_agree, limit_agrees, bound_holds, bs_unstable, energy_shifts.
void write_ssf_csv(const std::vector<SsfRecord>& records, std::ostream& out);

}  // namespace speclab
