#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>

#include "speclab/errors.hpp"
#include "speclab/operator.hpp"
#include "speclab/rng.hpp"
#include "speclab/spectral.hpp"

using namespace speclab;

namespace {

double ground_state(int L, int m) {
  BoxDomain dom{1, L, m, Boundary::Dirichlet};
  return eigenvalues_only(build_laplacian(dom).dense())[0];
}

}  // namespace

TEST_CASE("domain sizes and cube layout") {
  BoxDomain dom{2, 2, 3, Boundary::Neumann};
  dom.validate();
  CHECK(dom.size() == 144);
  CHECK(dom.cube_count() == 16);
  CHECK(dom.cells_per_cube() == 9);
  CHECK(dom.volume() == doctest::Approx(16.0));
  std::vector<int> seen(dom.size(), 0);
  for (std::size_t k = 0; k < dom.cube_count(); ++k) {
    const auto cells = dom.cube_cells(k);
    CHECK(cells.size() == dom.cells_per_cube());
    for (std::size_t l = 0; l < cells.size(); ++l) {
      ++seen[cells[l]];
      CHECK(dom.cube_of_cell(cells[l]) == k);
      CHECK(dom.local_index(cells[l]) == l);
    }
    CHECK(dom.cube_at_lattice_point(dom.lattice_point(k)) == k);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(dom.lattice_point(0)[0] == -2);
  CHECK(dom.lattice_point(dom.cube_count() - 1)[1] == 1);
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS((BoxDomain{4, 1, 1, Boundary::Dirichlet}.validate()), ConfigError);
  CHECK_THROWS_AS((BoxDomain{1, 0, 4, Boundary::Dirichlet}.validate()), ConfigError);
  CHECK_THROWS_AS((BoxDomain{3, 4, 8, Boundary::Dirichlet}.validate()), ConfigError);  // N over budget
  CHECK_THROWS_AS(parse_boundary("robin"), ConfigError);
  CHECK(parse_boundary("periodic") == Boundary::Periodic);
}

TEST_CASE("Dirichlet 4x4 closed form") {
  BoxDomain dom{1, 1, 2, Boundary::Dirichlet};
  const auto lap = build_laplacian(dom);
  const Eigen::MatrixXd a = lap.dense();
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    expect(i, i) = 8.0;
    if (i + 1 < 4) expect(i, i + 1) = expect(i + 1, i) = -4.0;
  }
  CHECK((a - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lap.is_exactly_symmetric());
  const Eigen::VectorXd ev = eigenvalues_only(a);
  for (int j = 1; j <= 4; ++j) CHECK(ev[j - 1] == doctest::Approx(4.0 * (2.0 - 2.0 * std::cos(j * std::numbers::pi / 5))).epsilon(1e-12));
}

TEST_CASE("Neumann kernel is the constants") {
  for (int d : {1, 2}) {
    BoxDomain dom{d, 2, 3, Boundary::Neumann};
    const Eigen::VectorXd ev = eigenvalues_only(build_laplacian(dom).dense());
    CHECK(std::abs(ev[0]) < 1e-10);
    CHECK(ev[1] > 1e-3);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dom.size()));
    CHECK((build_laplacian(dom).matrix * one).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("periodic Laplacian is positive semidefinite with constant kernel") {
  BoxDomain dom{2, 1, 3, Boundary::Periodic};
  const auto lap = build_laplacian(dom);
  CHECK(lap.is_exactly_symmetric());
  const Eigen::VectorXd ev = eigenvalues_only(lap.dense());
  CHECK(std::abs(ev[0]) < 1e-10);
  CHECK(ev[1] > 1e-3);
}

TEST_CASE("Dirichlet ground state tends to pi^2/(2L)^2") {
  // The eliminated-neighbour scheme has effective length 2L + h, so the error
  // has an O(h) term; two Richardson steps remove the h and h^2 terms.
  const int L = 1;
  const double exact = std::numbers::pi * std::numbers::pi / (4.0 * L * L);
  const double l8 = ground_state(L, 8), l16 = ground_state(L, 16), l32 = ground_state(L, 32);
  CHECK(l8 < l16);
  CHECK(l16 < l32);
  CHECK(l32 < exact);
  const double r1a = 2.0 * l16 - l8, r1b = 2.0 * l32 - l16;
  const double r2 = (4.0 * r1b - r1a) / 3.0;
  CHECK(std::abs(r2 - exact) < 1e-4 * exact);
  CHECK(std::abs(r2 - exact) < 0.1 * std::abs(l32 - exact));
}

TEST_CASE("disorder sampling is deterministic and uniform") {
  BoxDomain dom{1, 4, 1, Boundary::Dirichlet};
  const auto a = sample_disorder(UniformUnit{}, dom, 42, 7);
  const auto b = sample_disorder(UniformUnit{}, dom, 42, 7);
  CHECK(a.omegas == b.omegas);
  int differ = 0;
  for (std::uint64_t r = 0; r < 100; ++r)
    if (sample_disorder(UniformUnit{}, dom, 42, 2 * r).omegas != sample_disorder(UniformUnit{}, dom, 42, 2 * r + 1).omegas)
      ++differ;
  CHECK(differ == 100);

  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += to_unit(counter_hash(3, 0, static_cast<std::uint64_t>(i)));
  const double sigma = 1.0 / std::sqrt(12.0 * n);
  CHECK(std::abs(sum / n - 0.5) < 3.0 * sigma);
}

TEST_CASE("density table quantile and sup") {
  DensityTable t{0.0, 2.0, {1.0, 3.0}};
  CHECK(density_sup(t) == doctest::Approx(0.75));
  CHECK(quantile(t, 0.25) == doctest::Approx(1.0));
  CHECK(quantile(t, 0.0) == doctest::Approx(0.0));
  CHECK(quantile(t, 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(validate_distribution(DensityTable{1.0, 0.0, {1.0}}), ConfigError);
}

TEST_CASE("potential under the covering condition") {
  BoxDomain dom{2, 1, 2, Boundary::Dirichlet};
  const auto site = SingleSite::characteristic(0.5, dom);
  site.validate(dom);
  CHECK(site.is_characteristic());
  DisorderRealization real;
  real.omegas.assign(dom.cube_count(), 0.0);
  CHECK(build_potential(dom, site, real).matrix.norm() == 0.0);
  real.omegas.assign(dom.cube_count(), 1.0);
  const Eigen::VectorXd v = build_potential(dom, site, real).diagonal();
  CHECK((v.array() - 0.5).abs().maxCoeff() < 1e-15);
  real.omegas.assign(dom.cube_count(), 0.0);
  real.omegas[0] = 1.0;
  const Eigen::VectorXd v0 = build_potential(dom, site, real).diagonal();
  CHECK(v0.sum() * dom.cell_volume() == doctest::Approx(0.5));
}

TEST_CASE("single-site profile validation") {
  BoxDomain dom{1, 1, 2, Boundary::Dirichlet};
  SingleSite s{0.5, Eigen::VectorXd::Constant(2, 0.5)};  // u^2 = 0.25 < kappa
  CHECK_THROWS_AS(s.validate(dom), ConfigError);
  SingleSite big{0.5, Eigen::VectorXd::Constant(2, 1.1)};
  CHECK_THROWS_AS(big.validate(dom), ConfigError);
  SingleSite ok{0.5, Eigen::VectorXd::Constant(2, 0.9)};
  CHECK_NOTHROW(ok.validate(dom));
  CHECK_FALSE(ok.is_characteristic());
}

TEST_CASE("potential norm is bounded by the largest coupling") {
  BoxDomain dom{1, 4, 4, Boundary::Dirichlet};
  const auto site = SingleSite::characteristic(1.0, dom);
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto real = sample_disorder(UniformUnit{}, dom, 11, r);
    const auto v = build_potential(dom, site, real);
    CHECK(v.diagonal().minCoeff() >= 0.0);
    CHECK(v.diagonal().maxCoeff() <= real.max() + 1e-15);
    CHECK(build_hamiltonian(dom, site, real).is_exactly_symmetric());
  }
}

TEST_CASE("family evaluator") {
  BoxDomain dom{1, 1, 3, Boundary::Neumann};
  const auto h0 = build_laplacian(dom);
  Eigen::VectorXd u2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dom.size()));
  u2.head(3).setConstant(0.7);
  const Family f = assemble_family(h0, u2);
  CHECK((f.at(0.0) - h0.dense()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd diff = f.at(0.9) - f.at(0.4);
  CHECK((diff.diagonal() - 0.5 * u2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((Eigen::MatrixXd(diff.diagonal().asDiagonal()) - diff).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd bad = u2;
  bad[0] = -1.0;
  CHECK_THROWS_AS(assemble_family(h0, bad), ConfigError);

  const Family scalar(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, 0.3), 1.0);
  CHECK(scalar.at(2.0)(0, 0) == doctest::Approx(2.6));

  DiagonalOverride pin{u2, 2.0};
  const Family pinned = assemble_family(h0, Eigen::VectorXd::Zero(u2.size()), {pin});
  CHECK((pinned.base().diagonal() - h0.dense().diagonal() - 2.0 * u2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("site family folds the other sites into the base") {
  BoxDomain dom{1, 2, 2, Boundary::Dirichlet};
  const auto site = SingleSite::characteristic(1.0, dom);
  const auto real = sample_disorder(UniformUnit{}, dom, 5, 0);
  const Family f = site_family(dom, site, real, 1);
  const Eigen::MatrixXd h = build_hamiltonian(dom, site, real).dense();
  CHECK((f.at(real.omegas[1]) - h).cwiseAbs().maxCoeff() < 1e-14);
}
