#include "speclab/cube_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "speclab/errors.hpp"

namespace speclab {

double neumann_level_1d(int m, int n) {
  const double s = std::sin(static_cast<double>(n) * std::numbers::pi / (2.0 * m));
  return 4.0 * static_cast<double>(m) * m * s * s;
}

int CubeMode::max_index() const { return std::max({index[0], index[1], index[2]}); }

double CubeBasis::cell_volume() const { return std::pow(h(), d); }

std::size_t CubeBasis::local_size() const {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(m);
  return s;
}

namespace {

/// Unit-norm (discrete L^2(0,1)) cosine mode n on m cells.
Eigen::VectorXd cosine_mode(int m, int n) {
  Eigen::VectorXd v(m);
  const double amp = n == 0 ? 1.0 : std::numbers::sqrt2;
  for (int i = 0; i < m; ++i) v[i] = amp * std::cos(n * std::numbers::pi * (i + 0.5) / m);
  return v;
}

}  // namespace

CubeBasis neumann_cube_basis(int m, int d, int n) {
  if (d < 1 || d > 3) throw ConfigError("cube basis dimension must be 1, 2 or 3");
  if (n < 0 || n >= m) {
    std::ostringstream os;
    os << "level cap n = " << n << " needs n < m = " << m << " grid modes per axis";
    throw ConfigError(os.str());
  }
  CubeBasis basis;
  basis.d = d;
  basis.m = m;
  basis.n = n;
  std::vector<Eigen::VectorXd> one_d;
  for (int i = 0; i <= n; ++i) one_d.push_back(cosine_mode(m, i));

  const std::size_t local = basis.local_size();
  const int per_axis = n + 1;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  for (int t = 0; t < total; ++t) {
    CubeMode mode;
    int rest = t;
    for (int axis = 0; axis < d; ++axis) {
      mode.index[axis] = rest % per_axis;
      rest /= per_axis;
    }
    // Lexicographic index order with the leading axis most significant.
    std::reverse(mode.index.begin(), mode.index.begin() + d);
    for (int axis = 0; axis < d; ++axis) mode.level += neumann_level_1d(m, mode.index[axis]);
    mode.values.resize(static_cast<Eigen::Index>(local));
    for (std::size_t l = 0; l < local; ++l) {
      std::size_t r = l;
      double v = 1.0;
      for (int axis = 0; axis < d; ++axis) {
        v *= one_d[mode.index[axis]][static_cast<Eigen::Index>(r % static_cast<std::size_t>(m))];
        r /= static_cast<std::size_t>(m);
      }
      mode.values[static_cast<Eigen::Index>(l)] = v;
    }
    basis.modes.push_back(std::move(mode));
  }
  std::stable_sort(basis.modes.begin(), basis.modes.end(),
                   [](const CubeMode& a, const CubeMode& b) { return a.level < b.level; });
  return basis;
}

Eigen::VectorXd restrict_to_cube(const BoxDomain& domain, const Eigen::VectorXd& psi, std::size_t cube) {
  const auto cells = domain.cube_cells(cube);
  Eigen::VectorXd local(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t l = 0; l < cells.size(); ++l) local[static_cast<Eigen::Index>(l)] = psi[static_cast<Eigen::Index>(cells[l])];
  return local;
}

Eigen::VectorXd high_mode_projection(const Eigen::VectorXd& local_psi, const CubeBasis& basis, int n) {
  if (static_cast<std::size_t>(local_psi.size()) != basis.local_size())
    throw ConfigError("high_mode_projection: vector is not sampled on the cube");
  Eigen::VectorXd out = local_psi;
  const double w = basis.cell_volume();
  for (const auto& mode : basis.modes) {
    if (mode.max_index() > n) continue;
    out -= (w * mode.values.dot(local_psi)) * mode.values;
  }
  return out;
}

double cube_neumann_energy(const Eigen::VectorXd& local, int m, int d) {
  double sum = 0.0;
  std::size_t stride = 1;
  const auto size = static_cast<std::size_t>(local.size());
  for (int axis = 0; axis < d; ++axis) {
    for (std::size_t l = 0; l < size; ++l) {
      const std::size_t coord = (l / stride) % static_cast<std::size_t>(m);
      if (coord + 1 == static_cast<std::size_t>(m)) continue;
      const double diff = local[static_cast<Eigen::Index>(l + stride)] - local[static_cast<Eigen::Index>(l)];
      sum += diff * diff;
    }
    stride *= static_cast<std::size_t>(m);
  }
  return std::pow(1.0 / m, d - 2) * sum;
}

VerificationReport check_poincare(const Eigen::VectorXd& local_psi, const CubeBasis& basis, int n) {
  if (n > basis.n) throw ConfigError("check_poincare: n exceeds the basis level cap");
  if (n + 1 >= basis.m) throw ConfigError("check_poincare: no grid level above n");
  const Eigen::VectorXd p = high_mode_projection(local_psi, basis, n);
  const double lhs = basis.cell_volume() * p.squaredNorm();
  const double level = neumann_level_1d(basis.m, n + 1);
  const double rhs = cube_neumann_energy(p, basis.m, basis.d) / level;
  auto r = VerificationReport::inequality("poincare", lhs, rhs, 1e-12 * std::max(1.0, rhs));
  r.params = {{"d", basis.d}, {"m", basis.m}, {"n", n}, {"threshold_level", level}};
  return r;
}

std::vector<double> owned_energies(const Eigen::VectorXd& psi, const BoxDomain& domain) {
  std::vector<double> q(domain.cube_count(), 0.0);
  const int side = domain.side();
  const std::size_t n = domain.size();
  for (std::size_t idx = 0; idx < n; ++idx) {
    const Coords c = domain.cell_coords(idx);
    const std::size_t owner = domain.cube_of_cell(idx);
    const double v = psi[static_cast<Eigen::Index>(idx)];
    for (int axis = 0; axis < domain.d; ++axis) {
      if (c[axis] + 1 < side) {
        Coords nb = c;
        nb[axis] += 1;
        const double diff = psi[static_cast<Eigen::Index>(domain.cell_index(nb))] - v;
        q[owner] += diff * diff;
      } else if (domain.bc == Boundary::Periodic) {
        Coords nb = c;
        nb[axis] = 0;
        const double diff = psi[static_cast<Eigen::Index>(domain.cell_index(nb))] - v;
        q[owner] += diff * diff;
      } else if (domain.bc == Boundary::Dirichlet) {
        q[owner] += v * v;
      }
      if (c[axis] == 0 && domain.bc == Boundary::Dirichlet) q[owner] += v * v;
    }
  }
  const double scale = std::pow(domain.h(), domain.d - 2);
  for (double& x : q) x *= scale;
  return q;
}

std::vector<double> boundary_terms(const Eigen::VectorXd& psi, const BoxDomain& domain,
                                   const SymmetricOperator* laplacian) {
  if (static_cast<std::size_t>(psi.size()) != domain.size()) throw ConfigError("boundary_terms: size mismatch");
  SymmetricOperator owned;
  if (!laplacian) {
    owned = build_laplacian(domain);
    laplacian = &owned;
  }
  const Eigen::VectorXd lap = laplacian->matrix * psi;
  std::vector<double> b = owned_energies(psi, domain);
  std::vector<double> form(domain.cube_count(), 0.0);
  for (std::size_t idx = 0; idx < domain.size(); ++idx)
    form[domain.cube_of_cell(idx)] += psi[static_cast<Eigen::Index>(idx)] * lap[static_cast<Eigen::Index>(idx)];
  const double w = domain.cell_volume();
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = w * form[k] - b[k];
  return b;
}

double boundary_term(const Eigen::VectorXd& psi, std::size_t cube, const BoxDomain& domain) {
  if (cube >= domain.cube_count()) throw ConfigError("boundary_term: cube index out of range");
  return boundary_terms(psi, domain)[cube];
}

VerificationReport trace_bound_check(const SpectralData& spec, const EnergyInterval& interval, int n,
                                     const BoxDomain& domain) {
  if (spec.size() != domain.size()) throw ConfigError("trace_bound_check: spectrum and domain sizes differ");
  if (n < 0 || n + 1 >= domain.m) {
    std::ostringstream os;
    os << "trace bound with n = " << n << " needs n + 1 < m = " << domain.m;
    throw ConfigError(os.str());
  }
  const double threshold = neumann_level_1d(domain.m, n + 1);
  if (!(interval.b < threshold)) {
    std::ostringstream os;
    os << "trace bound needs b = " << interval.b << " strictly below the cube level lambda^h_{n+1} = " << threshold;
    throw PreconditionError(os.str());
  }
  const CubeBasis basis = neumann_cube_basis(domain.m, domain.d, n);
  const double w = domain.cell_volume();
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double cont_threshold = (n + 1.0) * (n + 1.0) * pi2;

  std::vector<Eigen::Index> in;
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j)
    if (interval.contains(spec.eigenvalues[j])) in.push_back(j);

  double sum = 0.0;       // discrete weights
  double sum_n0 = 0.0;    // ground mode only
  double sum_cont = 0.0;  // continuum weights
  for (std::size_t k = 0; k < domain.cube_count(); ++k) {
    const auto cells = domain.cube_cells(k);
    Eigen::MatrixXd local(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(in.size()));
    for (std::size_t l = 0; l < cells.size(); ++l)
      for (std::size_t c = 0; c < in.size(); ++c)
        local(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(c)) =
            spec.eigenvectors(static_cast<Eigen::Index>(cells[l]), in[c]);
    for (const auto& mode : basis.modes) {
      const double element = (w * (local.transpose() * mode.values)).squaredNorm();  // <phi, P(I) phi>
      sum += element * (1.0 - mode.level / threshold);
      double cont_level = 0.0;
      for (int a = 0; a < domain.d; ++a) cont_level += mode.index[a] * mode.index[a] * pi2;
      sum_cont += element * (1.0 - cont_level / cont_threshold);
      if (mode.max_index() == 0) sum_n0 += element;
    }
  }
  const double lhs = static_cast<double>(in.size());
  const double rhs = sum / (1.0 - interval.b / threshold);
  auto r = VerificationReport::inequality("trace_bound", lhs, rhs, 1e-10 * std::max(1.0, rhs));
  const double level1 = neumann_level_1d(domain.m, 1);
  r.params = {{"n", n},
              {"a", interval.a},
              {"b", interval.b},
              {"threshold_level", threshold},
              {"prefactor", 1.0 / (1.0 - interval.b / threshold)}};
  r.params["rhs_n0"] = nullptr;
  r.params["rhs_continuum"] = nullptr;
  if (interval.b < level1) r.params["rhs_n0"] = sum_n0 / (1.0 - interval.b / level1);
  if (interval.b < cont_threshold) r.params["rhs_continuum"] = sum_cont / (1.0 - interval.b / cont_threshold);
  return r;
}

VerificationReport eigenfunction_mass_check(const SpectralData& spec, const BoxDomain& domain, double energy_cap) {
  if (domain.bc != Boundary::Dirichlet)
    throw PreconditionError("eigenfunction mass bound needs Dirichlet boundary conditions");
  if (spec.size() != domain.size()) throw ConfigError("eigenfunction_mass_check: size mismatch");
  const double w = domain.cell_volume();
  const int d = domain.d;
  std::vector<std::vector<std::size_t>> cubes;
  for (std::size_t k = 0; k < domain.cube_count(); ++k) cubes.push_back(domain.cube_cells(k));

  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_lhs = 0.0, worst_rhs = 0.0, worst_energy = 0.0;
  std::size_t worst_cube = 0, checked = 0, nonvacuous = 0, violations = 0;
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) {
    const double e = spec.eigenvalues[j];
    if (!(e > 0.0)) continue;
    if (energy_cap > 0.0 && !(e < energy_cap)) continue;
    ++checked;
    if (e < d / 4.0) ++nonvacuous;
    const double rhs = (d + 4.0 * e) / (2.0 * d);
    for (std::size_t k = 0; k < cubes.size(); ++k) {
      double mass = 0.0;
      for (auto idx : cubes[k]) {
        const double v = spec.eigenvectors(static_cast<Eigen::Index>(idx), j);
        mass += v * v;
      }
      mass *= w;
      const double margin = rhs - mass;
      if (margin < -1e-12) ++violations;
      if (margin < worst_margin) {
        worst_margin = margin;
        worst_lhs = mass;
        worst_rhs = rhs;
        worst_energy = e;
        worst_cube = k;
      }
    }
  }
  VerificationReport r;
  r.check = "eigenfunction_mass";
  r.lhs = worst_lhs;
  r.rhs = worst_rhs;
  r.margin = checked ? worst_margin : 0.0;
  r.passed = violations == 0;
  r.params = {{"eigenvectors_checked", checked},
              {"nonvacuous_checked", nonvacuous},
              {"violations", violations},
              {"worst_energy", worst_energy},
              {"worst_cube", worst_cube}};
  return r;
}

}  // namespace speclab
