#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "speclab/errors.hpp"
#include "speclab/spectral.hpp"
#include "test_helpers.hpp"

using namespace speclab;

TEST_CASE("eigendecompose basics") {
  const auto one = eigendecompose(Eigen::MatrixXd::Constant(1, 1, 3.5), 0.125);
  CHECK(one.eigenvalues[0] == 3.5);
  CHECK(std::abs(one.eigenvectors(0, 0)) == doctest::Approx(1.0 / std::sqrt(0.125)));

  Eigen::VectorXd diag(4);
  diag << 3.0, -1.0, 2.0, 0.5;
  const auto d = eigendecompose(Eigen::MatrixXd(diag.asDiagonal()), 1.0);
  std::vector<double> sorted(diag.data(), diag.data() + 4);
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 4; ++i) CHECK(d.eigenvalues[i] == sorted[i]);

  CHECK_THROWS_AS(eigendecompose(Eigen::MatrixXd::Zero(2, 3), 1.0), ConfigError);
  EigenOptions tight;
  tight.budget = 3;
  CHECK_THROWS_AS(eigendecompose(Eigen::MatrixXd::Identity(4, 4), 1.0, "", tight), ConfigError);
}

TEST_CASE("grid eigenvectors are orthonormal in the discrete inner product") {
  BoxDomain dom{2, 1, 3, Boundary::Dirichlet};
  const auto spec = eigendecompose(build_laplacian(dom));
  const Eigen::MatrixXd gram = dom.cell_volume() * spec.eigenvectors.transpose() * spec.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("projector trace and elements") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd a = testing::random_symmetric(20, rng);
  const auto spec = eigendecompose(a, 1.0);
  const Eigen::VectorXd& ev = spec.eigenvalues;
  CHECK(projector_trace(spec, EnergyInterval(ev[0] - 10.0, ev[0] - 1.0)) == 0);
  CHECK(projector_trace(spec, EnergyInterval(ev[0] - 1.0, ev[19] + 1.0)) == 20);
  // Oracle: sort and count independently.
  std::vector<double> s(a.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  for (int i = 0; i < 20; ++i) s[i] = es.eigenvalues()[i];
  std::sort(s.begin(), s.end());
  const EnergyInterval five(s[0] - 0.1, 0.5 * (s[4] + s[5]));
  CHECK(projector_trace(spec, five) == 5);

  const Eigen::VectorXd psi = spec.vector(0);
  CHECK(projector_element(spec, EnergyInterval(ev[0] - 0.01, 0.5 * (ev[0] + ev[1])), psi, psi) ==
        doctest::Approx(1.0));
  CHECK(std::abs(projector_element(spec, EnergyInterval(ev[1] - 1e-9, ev[19] + 1.0), psi, psi)) < 1e-12);
  const Eigen::VectorXd f = testing::random_unit(20, rng);
  CHECK(projector_element(spec, EnergyInterval(ev[0] - 1.0, ev[19] + 1.0), f, f) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(projector_element(spec, five, Eigen::VectorXd::Zero(3), f), ConfigError);
}

TEST_CASE("closed interval tie tolerance") {
  Eigen::VectorXd ev(3);
  ev << 1.0, 2.0, 3.0;
  CHECK(count_in(ev, EnergyInterval(1.0, 2.0)) == 2);
  CHECK(count_in(ev, EnergyInterval(1.0 + 5e-13, 2.0 - 5e-13)) == 2);
  CHECK(count_in(ev, EnergyInterval(1.0 + 1e-9, 2.0 - 1e-9)) == 0);
  CHECK(count_below(ev, 2.0) == 1);
  CHECK_THROWS_AS(EnergyInterval(2.0, 1.0), ConfigError);
}

TEST_CASE("Hungarian assignment finds the global optimum") {
  Eigen::MatrixXd ov(3, 3);
  ov << 0.9, 0.8, 0.0,  //
      0.85, 0.1, 0.0,   //
      0.0, 0.0, 1.0;
  const auto a = max_overlap_assignment(ov);
  CHECK(a[0] == 1);
  CHECK(a[1] == 0);
  CHECK(a[2] == 2);
}

TEST_CASE("branch tracing on simple families") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd h0 = testing::random_symmetric(6, rng);
  const Eigen::VectorXd lam = eigenvalues_only(h0);

  const Family shift(h0, Eigen::VectorXd::Ones(6), 1.0);
  const auto tr = trace_branches(shift, uniform_grid(0.0, 2.0, 9));
  for (std::size_t i = 0; i < tr.points(); ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(tr.energy(i, j) == doctest::Approx(lam[j] + tr.omega_grid[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < tr.points(); ++i) {
    std::vector<int> l = tr.labels[i];
    std::sort(l.begin(), l.end());
    for (int j = 0; j < 6; ++j) CHECK(l[j] == j);
  }

  const Family flat(h0, Eigen::VectorXd::Zero(6), 1.0);
  const auto tf = trace_branches(flat, uniform_grid(-1.0, 1.0, 5));
  for (std::size_t j = 0; j < 6; ++j) {
    const auto b = tf.branch(j);
    CHECK(b.front() == doctest::Approx(b.back()).epsilon(1e-12));
  }

  const auto t2 = trace_branches(testing::two_by_two(), uniform_grid(0.0, 2.0, 5));
  // Branch 0 starts at E = 0 (the omega-dependent state), branch 1 at E = 1.
  CHECK(t2.energy(4, 0) == doctest::Approx(2.0));
  CHECK(t2.energy(4, 1) == doctest::Approx(1.0));

  std::ostringstream csv;
  write_branch_csv(t2, csv);
  CHECK(csv.str().rfind("omega,branch_index,eigenvalue,min_overlap\n", 0) == 0);
}

TEST_CASE("trace_branches rejects bad grids") {
  CHECK_THROWS_AS(trace_branches(testing::two_by_two(), {0.0, 0.0, 1.0}), ConfigError);
}

TEST_CASE("random families give monotone branches") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Family f = testing::random_family(12, 4, rng);
    const auto tr = trace_branches(f, uniform_grid(-1.0, 1.0, 17));
    CHECK(tr.overlap_floor >= 0.7);
    for (std::size_t j = 0; j < tr.branch_count(); ++j) {
      const auto b = tr.branch(j);
      for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] >= b[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("Feynman-Hellmann residuals") {
  const auto scalar = feynman_hellmann_residual(testing::scalar_family(0.3, 0.6), 0.2, 0);
  CHECK_FALSE(scalar.skipped);
  CHECK(scalar.residual < 1e-9);
  CHECK(scalar.within_contract);

  std::mt19937_64 rng(4);
  const Family shift(testing::random_symmetric(5, rng), Eigen::VectorXd::Ones(5), 1.0);
  for (std::size_t j = 0; j < 5; ++j) {
    const auto fh = feynman_hellmann_residual(shift, 0.1, j);
    CHECK(fh.derivative == doctest::Approx(1.0).epsilon(1e-8));
  }

  const auto two = feynman_hellmann_residual(testing::two_by_two(), 0.5, 0);
  CHECK(two.derivative == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(two.expectation == doctest::Approx(1.0));

  const auto degenerate = feynman_hellmann_residual(testing::two_by_two(), 1.0, 0);
  CHECK(degenerate.skipped);
  CHECK_FALSE(degenerate.reason.empty());
}

TEST_CASE("solve_crossing on closed forms") {
  const Family two = testing::two_by_two();
  const auto tr = trace_branches(two, uniform_grid(0.0, 2.0, 9));
  const auto c = solve_crossing(two, tr, 0, 0.75, 0.0, 2.0);
  REQUIRE(c.has_value());
  CHECK(c->omega == doctest::Approx(0.75).epsilon(1e-10));
  CHECK_FALSE(solve_crossing(two, tr, 1, 0.75, 0.0, 2.0).has_value());
  CHECK_FALSE(solve_crossing(two, tr, 0, 3.0, 0.0, 2.0).has_value());

  std::mt19937_64 rng(5);
  const Eigen::MatrixXd h0 = testing::random_symmetric(5, rng);
  const Eigen::VectorXd lam = eigenvalues_only(h0);
  const Family shift(h0, Eigen::VectorXd::Ones(5), 1.0);
  const auto ts = trace_branches(shift, uniform_grid(0.0, 3.0, 7));
  const double e = lam[2] + 1.3;
  const auto s = solve_crossing(shift, ts, 2, e, 0.0, 3.0);
  REQUIRE(s.has_value());
  CHECK(s->omega == doctest::Approx(1.3).epsilon(1e-9));
}

TEST_CASE("Birman-Schwinger crossings") {
  const auto sc = birman_schwinger_crossings(Eigen::MatrixXd::Constant(1, 1, 0.4), Eigen::VectorXd::Ones(1), 1.5);
  REQUIRE(sc.size() == 1);
  CHECK(sc[0].omega == doctest::Approx(1.1));

  const Family two = testing::two_by_two();
  const BirmanSchwinger bs(two);
  const auto c = bs.crossings(0.75);
  REQUIRE(c.size() == 1);
  CHECK(c[0].omega == doctest::Approx(0.75));
  CHECK_THROWS_AS(bs.crossings(1.0), PreconditionError);
  CHECK_THROWS_AS(BirmanSchwinger(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), 1.0), PreconditionError);

  std::mt19937_64 rng(6);
  const Family f = testing::random_family(16, 4, rng);
  const BirmanSchwinger rb(f);
  const Eigen::VectorXd phi = testing::random_unit(16, rng);
  const auto cr = rb.crossings(0.123);
  CHECK(cr.size() == 4);
  double total = 0.0;
  for (const auto& x : cr) total += rb.weight(x, phi);
  CHECK(total == doctest::Approx(rb.support_norm_sq(phi)).epsilon(1e-8));
  for (std::size_t i = 0; i < cr.size(); ++i)
    for (std::size_t j = 0; j < cr.size(); ++j)
      CHECK(std::abs(cr[i].vector.dot(cr[j].vector) - (i == j ? 1.0 : 0.0)) < 1e-8);
}

TEST_CASE("branch continuation and Birman-Schwinger agree") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 3; ++t) {
    const Family f = testing::random_family(16, 3, rng);
    const BirmanSchwinger bs(f);
    const auto tr = trace_branches(f, uniform_grid(-2.0, 2.0, 33));
    const Eigen::VectorXd lam = eigenvalues_only(f.base());
    const double e = 0.5 * (lam[7] + lam[8]);
    const auto cont = level_crossings(f, tr, e, -2.0, 2.0);
    std::vector<double> oracle;
    for (const auto& c : bs.crossings(e))
      if (c.omega >= -2.0 && c.omega <= 2.0) oracle.push_back(c.omega);
    REQUIRE(cont.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(cont[i].omega - oracle[i]) < 1e-6);
  }
}

TEST_CASE("crossing CSV") {
  std::ostringstream os;
  write_crossing_csv({{0, 0.75, 0.75, 1.0}}, os);
  CHECK(os.str().rfind("branch,E,omega,weight\n", 0) == 0);
}
