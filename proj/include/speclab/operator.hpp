#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace speclab {

enum class Boundary { Dirichlet, Neumann, Periodic };

std::string_view to_string(Boundary bc);
Boundary parse_boundary(std::string_view name);

/// Default cap on N for dense eigensolves.
inline constexpr std::size_t kDenseBudget = 4096;

using Coords = std::array<int, 3>;

/// The box [-L, L]^d, discretized with m cell-centered grid points per unit
/// length. Unit cubes C_k are indexed by lattice points k in {-L, ..., L-1}^d
/// and each holds exactly m^d cells.
struct BoxDomain {
  int d = 1;
  int L = 1;
  int m = 1;
  Boundary bc = Boundary::Dirichlet;

  /// Throws ConfigError on a malformed domain or when N exceeds `budget`.
  void validate(std::size_t budget = kDenseBudget) const;

  int side() const { return 2 * L * m; }
  std::size_t size() const;
  double h() const { return 1.0 / m; }
  double cell_volume() const;
  /// |Lambda| = (2L)^d.
  double volume() const;

  int cubes_per_axis() const { return 2 * L; }
  std::size_t cube_count() const;
  std::size_t cells_per_cube() const;

  // Linear layouts are x-fastest for both cells and cubes.
  Coords cell_coords(std::size_t index) const;
  std::size_t cell_index(const Coords& c) const;
  std::size_t cube_of_cell(std::size_t index) const;
  Coords cube_coords(std::size_t cube) const;
  std::size_t cube_index(const Coords& c) const;
  /// Lattice point k of the cube (lower corner), in {-L, ..., L-1}^d.
  Coords lattice_point(std::size_t cube) const;
  std::size_t cube_at_lattice_point(const Coords& k) const;
  /// Global cell indices of C_k, ordered by local coordinates (x-fastest).
  std::vector<std::size_t> cube_cells(std::size_t cube) const;
  /// Position of a cell inside its cube, as a local linear index in [0, m^d).
  std::size_t local_index(std::size_t index) const;

  friend bool operator==(const BoxDomain&, const BoxDomain&) = default;
};

/// Single-site profile u_0 sampled on the m^d cells of C_0.
struct SingleSite {
  double kappa = 1.0;
  Eigen::VectorXd profile;

  /// u_0 = sqrt(kappa) chi_0, so u_0^2 = kappa chi_0.
  static SingleSite characteristic(double kappa, const BoxDomain& domain);

  /// Checks 0 <= kappa chi_0 <= u_0^2 <= 1 sample-wise.
  void validate(const BoxDomain& domain) const;
  bool is_characteristic() const;
  Eigen::VectorXd squared() const { return profile.array().square().matrix(); }
};

struct UniformUnit {};

/// Piecewise-constant density on [lo, hi] with equal-width bins. Weights are
/// normalized on construction.
struct DensityTable {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> weights;
};

using Distribution = std::variant<UniformUnit, DensityTable>;

void validate_distribution(const Distribution& dist);
/// ||rho||_inf.
double density_sup(const Distribution& dist);
/// Inverse CDF.
double quantile(const Distribution& dist, double u);
bool is_uniform_unit(const Distribution& dist);

struct DisorderRealization {
  /// omega_k, indexed by linear cube index.
  std::vector<double> omegas;
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;

  double max() const;
};

/// Real symmetric operator on a grid (or an abstract finite-dimensional space
/// when `domain` is empty). The inner product is cell_volume * (Euclidean dot).
struct SymmetricOperator {
  Eigen::SparseMatrix<double> matrix;
  std::optional<BoxDomain> domain;
  double cell_volume = 1.0;
  std::string description;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
  Eigen::VectorXd diagonal() const { return matrix.diagonal(); }
  /// Gershgorin bound on the operator norm.
  double norm_bound() const;
  bool is_exactly_symmetric() const;
};

SymmetricOperator operator+(const SymmetricOperator& a, const SymmetricOperator& b);

/// Discrete inner product <f, g> = w * sum f g.
inline double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g, double w) {
  return w * f.dot(g);
}

/// (2d+1)-point finite-difference Laplacian -Delta_h with the domain's boundary
/// condition. Dirichlet drops exterior neighbours, Neumann reflects through a
/// ghost cell, Periodic wraps.
SymmetricOperator build_laplacian(const BoxDomain& domain, std::size_t budget = kDenseBudget);

DisorderRealization sample_disorder(const Distribution& dist, const BoxDomain& domain,
                                    std::uint64_t master_seed, std::uint64_t realization_index);

/// u_k^2 as a grid vector (profile placed on C_k, zero elsewhere).
Eigen::VectorXd site_profile_squared(const BoxDomain& domain, const SingleSite& site,
                                     std::size_t cube);

/// Diagonal V(x) = sum_k omega_k u_k(x)^2.
SymmetricOperator build_potential(const BoxDomain& domain, const SingleSite& site,
                                  const DisorderRealization& real);

/// H_omega^Lambda = -Delta_h + V_omega.
SymmetricOperator build_hamiltonian(const BoxDomain& domain, const SingleSite& site,
                                    const DisorderRealization& real);

/// A site pinned to a fixed coupling and folded into the base operator.
struct DiagonalOverride {
  Eigen::VectorXd profile;
  double value = 0.0;
};

/// omega -> H_0 + omega * diag(u2), with overrides folded into H_0.
class Family {
 public:
  Family(Eigen::MatrixXd base, Eigen::VectorXd coupling, double cell_volume,
         std::string description = {});

  Eigen::MatrixXd at(double omega) const;
  const Eigen::MatrixXd& base() const { return base_; }
  /// Diagonal of u^2.
  const Eigen::VectorXd& coupling() const { return coupling_; }
  /// Pointwise u = sqrt(u^2).
  Eigen::VectorXd u() const { return coupling_.cwiseSqrt(); }
  double coupling_norm() const { return coupling_.size() ? coupling_.maxCoeff() : 0.0; }
  double cell_volume() const { return cell_volume_; }
  std::size_t size() const { return static_cast<std::size_t>(base_.rows()); }
  const std::string& description() const { return description_; }
  /// Frobenius-free scale used for relative tolerances: max(1, ||H_0|| bound).
  double scale() const { return scale_; }

 private:
  Eigen::MatrixXd base_;
  Eigen::VectorXd coupling_;
  double cell_volume_;
  std::string description_;
  double scale_;
};

Family assemble_family(const SymmetricOperator& h0, const Eigen::VectorXd& u2,
                       const std::vector<DiagonalOverride>& overrides = {});

/// The physical one-site family: H_0 = -Delta_h + sum_{j != k} omega_j u_j^2
/// and u^2 = u_k^2.
Family site_family(const BoxDomain& domain, const SingleSite& site,
                   const DisorderRealization& real, std::size_t cube);

}  // namespace speclab
