#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "speclab/operator.hpp"

namespace speclab {

/// Full eigendecomposition. Eigenvalues ascend; eigenvector columns are
/// orthonormal in the discrete inner product (cell_volume * dot).
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  double cell_volume = 1.0;
  std::string source;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  Eigen::VectorXd vector(std::size_t j) const { return eigenvectors.col(static_cast<Eigen::Index>(j)); }
  double norm() const;
};

struct EigenOptions {
  std::size_t budget = kDenseBudget;
  /// Check residuals and orthonormality against the SpectralData contract.
  bool verify = true;
};

SpectralData eigendecompose(const Eigen::MatrixXd& h, double cell_volume, std::string source = {},
                            const EigenOptions& options = {});
SpectralData eigendecompose(const SymmetricOperator& h, const EigenOptions& options = {});
/// Ascending eigenvalues without eigenvectors.
Eigen::VectorXd eigenvalues_only(const Eigen::MatrixXd& h, std::size_t budget = kDenseBudget);

/// Closed interval [a, b] with an absolute tie tolerance 1e-12 * max(1, |a|, |b|).
struct EnergyInterval {
  double a = 0.0;
  double b = 0.0;

  EnergyInterval() = default;
  EnergyInterval(double lo, double hi);

  double length() const { return b - a; }
  double tie_tolerance() const;
  bool contains(double e) const;
};

/// Number of eigenvalues in I, i.e. Tr P(I).
std::size_t projector_trace(const SpectralData& spec, const EnergyInterval& interval);
std::size_t count_in(const Eigen::VectorXd& eigenvalues, const EnergyInterval& interval);
/// Eigenvalues strictly below e.
std::size_t count_below(const Eigen::VectorXd& eigenvalues, double e);

/// <f, P(I) g> = sum over eigenvalues in I of <f, psi_j><psi_j, g>.
double projector_element(const SpectralData& spec, const EnergyInterval& interval,
                         const Eigen::VectorXd& f, const Eigen::VectorXd& g);

/// Column of `spec` with the largest |overlap| with v; overlap written to `best`.
Eigen::Index best_match(const SpectralData& spec, const Eigen::VectorXd& v, double* best = nullptr);

/// Row-to-column assignment maximizing the summed overlap (Hungarian method).
std::vector<int> max_overlap_assignment(const Eigen::MatrixXd& overlap);

struct BranchOptions {
  double overlap_floor = 0.7;
  /// Local bisections allowed per grid step before giving up.
  int max_refine_depth = 16;
};

/// Eigenvalue branches E_j(omega) over a coupling grid. Branch j at grid point
/// i lives in column labels[i][j] of spectra[i]. Branch 0..N-1 start in
/// ascending order at the first grid point.
struct BranchTrace {
  std::vector<double> omega_grid;
  std::vector<SpectralData> spectra;
  std::vector<std::vector<int>> labels;
  /// step_overlap[i] is the smallest matched overlap between grid points i and i+1.
  std::vector<double> step_overlap;
  /// Smallest matched overlap over the whole trace.
  double overlap_floor = 1.0;

  std::size_t branch_count() const { return spectra.empty() ? 0 : spectra.front().size(); }
  std::size_t points() const { return omega_grid.size(); }
  double energy(std::size_t point, std::size_t branch) const;
  Eigen::VectorXd vector(std::size_t point, std::size_t branch) const;
  std::vector<double> branch(std::size_t j) const;
};

std::vector<double> uniform_grid(double lo, double hi, std::size_t points);

/// Follows every branch across `omega_grid` by maximal-overlap assignment,
/// bisecting a step locally while its smallest overlap is below the floor.
/// Throws RefineError naming the subinterval when bisection is exhausted and
/// InvariantViolation if a branch decreases.
BranchTrace trace_branches(const Family& family, std::vector<double> omega_grid,
                           const BranchOptions& options = {});

/// CSV columns: omega, branch_index, eigenvalue, min_overlap.
void write_branch_csv(const BranchTrace& trace, std::ostream& out);

struct FeynmanHellmann {
  bool skipped = false;
  std::string reason;
  double derivative = 0.0;
  double expectation = 0.0;
  double residual = 0.0;
  /// residual <= 1e-6 * (1 + ||u^2||)
  bool within_contract = false;
};

/// Central-difference dE_j/domega against <psi_j, u^2 psi_j> at `omega`.
/// Near-degenerate eigenvalues are skipped with a reason.
FeynmanHellmann feynman_hellmann_residual(const Family& family, double omega, std::size_t j,
                                          double step = 1e-5);

struct BranchState {
  double omega = 0.0;
  double energy = 0.0;
  Eigen::VectorXd vector;
};

/// omega_j(E) on [tau1, tau2] by bisection, re-diagonalizing at each probe and
/// re-matching by overlap. Empty when branch j does not reach E on the window.
std::optional<BranchState> solve_crossing(const Family& family, const BranchTrace& trace,
                                          std::size_t branch, double energy, double tau1,
                                          double tau2, const BranchOptions& options = {});

/// ||P~ phi||^2 where P~ projects onto u psi.
double crossing_weight(const Family& family, const Eigen::VectorXd& psi, const Eigen::VectorXd& phi);

struct CrossingRecord {
  std::size_t branch = 0;
  double energy = 0.0;
  double omega = 0.0;
  /// f_j(E) for the chosen vector phi (0 when none was given).
  double weight = 0.0;
};

/// All crossings of level E on [tau1, tau2], ordered by omega.
std::vector<CrossingRecord> level_crossings(const Family& family, const BranchTrace& trace,
                                            double energy, double tau1, double tau2,
                                            const Eigen::VectorXd* phi = nullptr,
                                            const BranchOptions& options = {});

/// CSV columns: branch, E, omega, weight.
void write_crossing_csv(const std::vector<CrossingRecord>& records, std::ostream& out);

/// Birman-Schwinger kernel K_0(E) = u (H_0 - E)^{-1} u compressed to supp u.
/// The couplings at which H_0 + omega u^2 has eigenvalue E are the
/// eigenvalues of -K_0(E)^{-1}.
class BirmanSchwinger {
 public:
  struct Crossing {
    double omega = 0.0;
    /// Unit eigenvector of K_0(E) on supp u (discrete normalization, zero off the support).
    Eigen::VectorXd vector;
  };

  BirmanSchwinger(const Eigen::MatrixXd& h0, const Eigen::VectorXd& u, double cell_volume);
  explicit BirmanSchwinger(const Family& family);

  /// Crossing couplings over all of R, ascending. Throws PreconditionError if
  /// E is within 1e-8 ||H_0|| of sigma(H_0) or if K_0(E) is singular.
  std::vector<Crossing> crossings(double energy) const;

  double distance_to_spectrum(double energy) const;
  const Eigen::VectorXd& h0_eigenvalues() const { return eigenvalues_; }
  const std::vector<Eigen::Index>& support() const { return support_; }
  double h0_norm() const { return norm_; }
  double cell_volume() const { return cell_volume_; }
  /// ||phi||^2 over supp u.
  double support_norm_sq(const Eigen::VectorXd& phi) const;
  /// f = <chi, phi>^2 for a crossing vector chi.
  double weight(const Crossing& c, const Eigen::VectorXd& phi) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd support_rows_;  // eigenvectors restricted to supp u
  Eigen::VectorXd u_support_;
  std::vector<Eigen::Index> support_;
  Eigen::Index dim_ = 0;
  double cell_volume_ = 1.0;
  double norm_ = 1.0;
};

/// Support threshold for u on the grid.
inline constexpr double kSupportFloor = 1e-14;

std::vector<BirmanSchwinger::Crossing> birman_schwinger_crossings(const Eigen::MatrixXd& h0,
                                                                  const Eigen::VectorXd& u,
                                                                  double energy,
                                                                  double cell_volume = 1.0);

}  // namespace speclab
