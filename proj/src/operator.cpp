#include "speclab/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "speclab/errors.hpp"
#include "speclab/rng.hpp"

namespace speclab {

std::string_view to_string(Boundary bc) {
  switch (bc) {
    case Boundary::Dirichlet: return "dirichlet";
    case Boundary::Neumann: return "neumann";
    case Boundary::Periodic: return "periodic";
  }
  return "unknown";
}

Boundary parse_boundary(std::string_view name) {
  if (name == "dirichlet") return Boundary::Dirichlet;
  if (name == "neumann") return Boundary::Neumann;
  if (name == "periodic") return Boundary::Periodic;
  throw ConfigError("unknown boundary condition '" + std::string(name) +
                    "' (expected dirichlet, neumann or periodic)");
}

namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

void BoxDomain::validate(std::size_t budget) const {
  if (d < 1 || d > 3) throw ConfigError("dimension d must be 1, 2 or 3");
  if (L < 1) throw ConfigError("box half-width L must be a positive integer");
  if (m < 1) throw ConfigError("grid resolution m must be a positive integer");
  // Guard the power before computing it.
  const double n = std::pow(2.0 * L * m, d);
  if (n > static_cast<double>(budget)) {
    std::ostringstream os;
    os << "grid size N = " << n << " exceeds the dense eigensolve budget " << budget;
    throw ConfigError(os.str());
  }
}

std::size_t BoxDomain::size() const { return ipow(static_cast<std::size_t>(side()), d); }
double BoxDomain::cell_volume() const { return std::pow(h(), d); }
double BoxDomain::volume() const { return std::pow(2.0 * L, d); }
std::size_t BoxDomain::cube_count() const { return ipow(static_cast<std::size_t>(cubes_per_axis()), d); }
std::size_t BoxDomain::cells_per_cube() const { return ipow(static_cast<std::size_t>(m), d); }

Coords BoxDomain::cell_coords(std::size_t index) const {
  Coords c{0, 0, 0};
  const auto s = static_cast<std::size_t>(side());
  for (int i = 0; i < d; ++i) {
    c[i] = static_cast<int>(index % s);
    index /= s;
  }
  return c;
}

std::size_t BoxDomain::cell_index(const Coords& c) const {
  std::size_t idx = 0;
  const auto s = static_cast<std::size_t>(side());
  for (int i = d - 1; i >= 0; --i) idx = idx * s + static_cast<std::size_t>(c[i]);
  return idx;
}

std::size_t BoxDomain::cube_of_cell(std::size_t index) const {
  Coords c = cell_coords(index);
  for (int i = 0; i < d; ++i) c[i] /= m;
  return cube_index(c);
}

Coords BoxDomain::cube_coords(std::size_t cube) const {
  Coords c{0, 0, 0};
  const auto s = static_cast<std::size_t>(cubes_per_axis());
  for (int i = 0; i < d; ++i) {
    c[i] = static_cast<int>(cube % s);
    cube /= s;
  }
  return c;
}

std::size_t BoxDomain::cube_index(const Coords& c) const {
  std::size_t idx = 0;
  const auto s = static_cast<std::size_t>(cubes_per_axis());
  for (int i = d - 1; i >= 0; --i) idx = idx * s + static_cast<std::size_t>(c[i]);
  return idx;
}

Coords BoxDomain::lattice_point(std::size_t cube) const {
  Coords c = cube_coords(cube);
  for (int i = 0; i < d; ++i) c[i] -= L;
  return c;
}

std::size_t BoxDomain::cube_at_lattice_point(const Coords& k) const {
  Coords c{0, 0, 0};
  for (int i = 0; i < d; ++i) {
    if (k[i] < -L || k[i] >= L) throw ConfigError("lattice point outside the box");
    c[i] = k[i] + L;
  }
  return cube_index(c);
}

std::vector<std::size_t> BoxDomain::cube_cells(std::size_t cube) const {
  const Coords base = cube_coords(cube);
  std::vector<std::size_t> cells;
  cells.reserve(cells_per_cube());
  const std::size_t count = cells_per_cube();
  for (std::size_t local = 0; local < count; ++local) {
    Coords c{0, 0, 0};
    std::size_t rest = local;
    for (int i = 0; i < d; ++i) {
      c[i] = base[i] * m + static_cast<int>(rest % static_cast<std::size_t>(m));
      rest /= static_cast<std::size_t>(m);
    }
    cells.push_back(cell_index(c));
  }
  return cells;
}

std::size_t BoxDomain::local_index(std::size_t index) const {
  const Coords c = cell_coords(index);
  std::size_t local = 0;
  for (int i = d - 1; i >= 0; --i) local = local * static_cast<std::size_t>(m) + static_cast<std::size_t>(c[i] % m);
  return local;
}

SingleSite SingleSite::characteristic(double kappa, const BoxDomain& domain) {
  SingleSite s;
  s.kappa = kappa;
  s.profile = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(domain.cells_per_cube()),
                                        std::sqrt(std::max(kappa, 0.0)));
  return s;
}

void SingleSite::validate(const BoxDomain& domain) const {
  if (!(kappa >= 0.0)) throw ConfigError("single-site constant kappa must be nonnegative");
  if (kappa > 1.0) throw ConfigError("single-site constant kappa must not exceed 1");
  if (static_cast<std::size_t>(profile.size()) != domain.cells_per_cube())
    throw ConfigError("single-site profile must have m^d samples");
  for (Eigen::Index i = 0; i < profile.size(); ++i) {
    const double u2 = profile[i] * profile[i];
    // Absolute slack for profiles given as rounded decimal samples.
    if (u2 < kappa * (1.0 - 1e-12) || u2 > 1.0 + 1e-12) {
      std::ostringstream os;
      os << "single-site profile violates kappa <= u_0^2 <= 1 at sample " << i
         << " (u_0^2 = " << u2 << ", kappa = " << kappa << ")";
      throw ConfigError(os.str());
    }
  }
}

bool SingleSite::is_characteristic() const {
  const double target = std::sqrt(kappa);
  return profile.size() > 0 &&
         (profile.array() - target).abs().maxCoeff() <= 1e-14 * std::max(1.0, target);
}

void validate_distribution(const Distribution& dist) {
  if (const auto* table = std::get_if<DensityTable>(&dist)) {
    if (!(table->hi > table->lo)) throw ConfigError("density table needs hi > lo");
    if (table->lo < 0.0) throw ConfigError("density table support must be nonnegative");
    if (table->weights.empty()) throw ConfigError("density table has no bins");
    double total = 0.0;
    for (double w : table->weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("density table weights must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("density table weights sum to zero");
  }
}

bool is_uniform_unit(const Distribution& dist) { return std::holds_alternative<UniformUnit>(dist); }

double density_sup(const Distribution& dist) {
  if (is_uniform_unit(dist)) return 1.0;
  const auto& t = std::get<DensityTable>(dist);
  const double total = std::accumulate(t.weights.begin(), t.weights.end(), 0.0);
  const double width = (t.hi - t.lo) / static_cast<double>(t.weights.size());
  return *std::max_element(t.weights.begin(), t.weights.end()) / (total * width);
}

double quantile(const Distribution& dist, double u) {
  if (is_uniform_unit(dist)) return u;
  const auto& t = std::get<DensityTable>(dist);
  const double total = std::accumulate(t.weights.begin(), t.weights.end(), 0.0);
  const double width = (t.hi - t.lo) / static_cast<double>(t.weights.size());
  double target = u * total;
  for (std::size_t i = 0; i < t.weights.size(); ++i) {
    const double w = t.weights[i];
    if (target < w || i + 1 == t.weights.size()) {
      const double frac = w > 0.0 ? std::clamp(target / w, 0.0, 1.0) : 0.0;
      return t.lo + (static_cast<double>(i) + frac) * width;
    }
    target -= w;
  }
  return t.hi;
}

double DisorderRealization::max() const {
  return omegas.empty() ? 0.0 : *std::max_element(omegas.begin(), omegas.end());
}

double SymmetricOperator::norm_bound() const {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(matrix.rows());
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it)
      rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

bool SymmetricOperator::is_exactly_symmetric() const {
  const Eigen::MatrixXd a = dense();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.cols(); ++j)
      if (a(i, j) != a(j, i)) return false;
  return true;
}

SymmetricOperator operator+(const SymmetricOperator& a, const SymmetricOperator& b) {
  if (a.size() != b.size()) throw ConfigError("operator sizes differ");
  SymmetricOperator r;
  r.matrix = a.matrix + b.matrix;
  r.domain = a.domain ? a.domain : b.domain;
  r.cell_volume = a.cell_volume;
  r.description = a.description + " + " + b.description;
  return r;
}

SymmetricOperator build_laplacian(const BoxDomain& domain, std::size_t budget) {
  domain.validate(budget);
  const std::size_t n = domain.size();
  const int side = domain.side();
  const double scale = static_cast<double>(domain.m) * domain.m;  // 1/h^2

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n * (2 * static_cast<std::size_t>(domain.d) + 1));
  for (std::size_t idx = 0; idx < n; ++idx) {
    const Coords c = domain.cell_coords(idx);
    double diag = 0.0;
    for (int axis = 0; axis < domain.d; ++axis) {
      for (int step : {-1, 1}) {
        Coords nb = c;
        nb[axis] += step;
        const bool inside = nb[axis] >= 0 && nb[axis] < side;
        if (inside) {
          diag += scale;
          triplets.emplace_back(static_cast<int>(idx), static_cast<int>(domain.cell_index(nb)), -scale);
          continue;
        }
        switch (domain.bc) {
          case Boundary::Dirichlet:
            diag += scale;
            break;
          case Boundary::Neumann:
            break;  // ghost equals the boundary cell: zero normal difference
          case Boundary::Periodic:
            nb[axis] = (nb[axis] + side) % side;
            diag += scale;
            triplets.emplace_back(static_cast<int>(idx), static_cast<int>(domain.cell_index(nb)), -scale);
            break;
        }
      }
    }
    triplets.emplace_back(static_cast<int>(idx), static_cast<int>(idx), diag);
  }

  SymmetricOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.domain = domain;
  op.cell_volume = domain.cell_volume();
  std::ostringstream os;
  os << "-Delta_h[d=" << domain.d << ",L=" << domain.L << ",m=" << domain.m << ","
     << to_string(domain.bc) << "]";
  op.description = os.str();
  return op;
}

DisorderRealization sample_disorder(const Distribution& dist, const BoxDomain& domain,
                                    std::uint64_t master_seed, std::uint64_t realization_index) {
  validate_distribution(dist);
  DisorderRealization r;
  r.master_seed = master_seed;
  r.realization_index = realization_index;
  r.omegas.resize(domain.cube_count());
  for (std::size_t k = 0; k < r.omegas.size(); ++k)
    r.omegas[k] = quantile(dist, to_unit(counter_hash(master_seed, realization_index, k)));
  return r;
}

Eigen::VectorXd site_profile_squared(const BoxDomain& domain, const SingleSite& site,
                                     std::size_t cube) {
  if (static_cast<std::size_t>(site.profile.size()) != domain.cells_per_cube())
    throw ConfigError("single-site profile must have m^d samples");
  Eigen::VectorXd u2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain.size()));
  const auto cells = domain.cube_cells(cube);
  for (std::size_t local = 0; local < cells.size(); ++local) {
    const double u = site.profile[static_cast<Eigen::Index>(local)];
    u2[static_cast<Eigen::Index>(cells[local])] = u * u;
  }
  return u2;
}

SymmetricOperator build_potential(const BoxDomain& domain, const SingleSite& site,
                                  const DisorderRealization& real) {
  if (real.omegas.size() != domain.cube_count())
    throw ConfigError("realization and domain index different cube sets");
  if (static_cast<std::size_t>(site.profile.size()) != domain.cells_per_cube())
    throw ConfigError("single-site profile must have m^d samples");
  const std::size_t n = domain.size();
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double u = site.profile[static_cast<Eigen::Index>(domain.local_index(idx))];
    v[static_cast<Eigen::Index>(idx)] = real.omegas[domain.cube_of_cell(idx)] * (u * u);
  }
  SymmetricOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    diag.emplace_back(static_cast<int>(i), static_cast<int>(i), v[static_cast<Eigen::Index>(i)]);
  op.matrix.setFromTriplets(diag.begin(), diag.end());
  op.domain = domain;
  op.cell_volume = domain.cell_volume();
  std::ostringstream os;
  os << "V[seed=" << real.master_seed << ",r=" << real.realization_index << ",kappa=" << site.kappa << "]";
  op.description = os.str();
  return op;
}

SymmetricOperator build_hamiltonian(const BoxDomain& domain, const SingleSite& site,
                                    const DisorderRealization& real) {
  return build_laplacian(domain) + build_potential(domain, site, real);
}

Family::Family(Eigen::MatrixXd base, Eigen::VectorXd coupling, double cell_volume,
               std::string description)
    : base_(std::move(base)),
      coupling_(std::move(coupling)),
      cell_volume_(cell_volume),
      description_(std::move(description)) {
  if (base_.rows() != base_.cols() || base_.rows() != coupling_.size())
    throw ConfigError("family base and coupling sizes differ");
  if (coupling_.size() > 0 && coupling_.minCoeff() < 0.0)
    throw ConfigError("family coupling u^2 must be nonnegative");
  scale_ = std::max(1.0, base_.cwiseAbs().rowwise().sum().maxCoeff());
}

Eigen::MatrixXd Family::at(double omega) const {
  Eigen::MatrixXd h = base_;
  h.diagonal() += omega * coupling_;
  return h;
}

Family assemble_family(const SymmetricOperator& h0, const Eigen::VectorXd& u2,
                       const std::vector<DiagonalOverride>& overrides) {
  if (static_cast<std::size_t>(u2.size()) != h0.size())
    throw ConfigError("coupling length does not match operator size");
  Eigen::MatrixXd base = h0.dense();
  std::string desc = h0.description + " + omega*u^2";
  for (const auto& o : overrides) {
    if (o.profile.size() != u2.size()) throw ConfigError("override profile length mismatch");
    if (o.profile.minCoeff() < 0.0) throw ConfigError("override profile must be nonnegative");
    base.diagonal() += o.value * o.profile;
  }
  if (!overrides.empty()) desc += " (" + std::to_string(overrides.size()) + " pinned sites)";
  return Family(std::move(base), u2, h0.cell_volume, std::move(desc));
}

Family site_family(const BoxDomain& domain, const SingleSite& site,
                   const DisorderRealization& real, std::size_t cube) {
  if (cube >= domain.cube_count()) throw ConfigError("site index outside the box");
  DisorderRealization rest = real;
  rest.omegas.at(cube) = 0.0;
  const SymmetricOperator h0 = build_hamiltonian(domain, site, rest);
  Family f = assemble_family(h0, site_profile_squared(domain, site, cube));
  return f;
}

}  // namespace speclab
