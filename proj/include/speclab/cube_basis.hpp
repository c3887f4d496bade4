#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "speclab/operator.hpp"
#include "speclab/report.hpp"
#include "speclab/spectral.hpp"

namespace speclab {

/// 1-D discrete Neumann level on a unit cube with m cells:
/// (4/h^2) sin^2(n pi h / 2), h = 1/m. Converges to n^2 pi^2 from below.
double neumann_level_1d(int m, int n);

struct CubeMode {
  Coords index{0, 0, 0};
  double level = 0.0;
  /// Samples on the m^d cells of the cube (local x-fastest order), unit
  /// norm in the discrete L^2(C_k) inner product.
  Eigen::VectorXd values;
  int max_index() const;
};

/// Tensor-product discrete cosine modes of the cube Neumann Laplacian with all
/// 1-D indices <= n, ascending by level (ties keep lexicographic index order).
struct CubeBasis {
  int d = 1;
  int m = 1;
  int n = 0;
  std::vector<CubeMode> modes;

  double h() const { return 1.0 / m; }
  double cell_volume() const;
  std::size_t local_size() const;
  /// Smallest level among modes not in the basis: the 1-D level n+1.
  double threshold() const { return neumann_level_1d(m, n + 1); }
};

/// Throws ConfigError (resolution) unless 0 <= n < m.
CubeBasis neumann_cube_basis(int m, int d, int n);

/// chi_k psi as a local vector on C_k.
Eigen::VectorXd restrict_to_cube(const BoxDomain& domain, const Eigen::VectorXd& psi, std::size_t cube);

/// chi_k psi minus its projection onto the modes with 1-D indices <= n.
Eigen::VectorXd high_mode_projection(const Eigen::VectorXd& local_psi, const CubeBasis& basis, int n);

/// <v, -Delta_h^{Neu, cube} v>: h^{d-2} times the sum of squared differences over
/// edges inside the cube.
double cube_neumann_energy(const Eigen::VectorXd& local, int m, int d);

/// ||P_n psi||^2 <= <P_n psi, -Delta^{Neu} P_n psi> / lambda^h_{n+1}.
VerificationReport check_poincare(const Eigen::VectorXd& local_psi, const CubeBasis& basis, int n);

/// Per-cube quadratic-form share Q_k(psi): edges inside C_k, interface edges
/// owned by the cube on their lower-index side (wrap edges by the cube they
/// leave), and Dirichlet exterior faces of C_k.
std::vector<double> owned_energies(const Eigen::VectorXd& psi, const BoxDomain& domain);

/// B_k(psi) = <chi_k psi, -Delta_h psi> - Q_k(psi) for every cube.
std::vector<double> boundary_terms(const Eigen::VectorXd& psi, const BoxDomain& domain,
                                   const SymmetricOperator* laplacian = nullptr);
double boundary_term(const Eigen::VectorXd& psi, std::size_t cube, const BoxDomain& domain);

/// Tr P(I) against the cube-basis bound with level cap n. Precondition:
/// b < lambda^h_{n+1}. The n = 0 specialization and the continuum-constant
/// variant are reported in params.
VerificationReport trace_bound_check(const SpectralData& spec, const EnergyInterval& interval, int n,
                                     const BoxDomain& domain);

/// Squared cube mass of every Dirichlet eigenvector with 0 < E (< energy_cap)
/// against (d + 4E)/(2d), over all cube translates.
VerificationReport eigenfunction_mass_check(const SpectralData& spec, const BoxDomain& domain,
                                            double energy_cap = -1.0);

}  // namespace speclab
