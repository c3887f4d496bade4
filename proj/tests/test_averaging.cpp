#include <doctest.h>

#include <cmath>
#include <sstream>

#include "speclab/averaging.hpp"
#include "speclab/errors.hpp"
#include "test_helpers.hpp"

using namespace speclab;

TEST_CASE("scalar family saturates the average") {
  const Family f = testing::scalar_family();
  const Eigen::VectorXd phi = Eigen::VectorXd::Ones(1);
  CHECK(spectral_average(f, phi, EnergyInterval(0.3, 0.6), 0.0, 1.0) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(spectral_average(f, phi, EnergyInterval(2.0, 3.0), 0.0, 1.0) == 0.0);
  const BirmanSchwinger bs(f);
  CHECK(spectral_average_energy_route(bs, f, phi, EnergyInterval(0.3, 0.6), 0.0, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("spectral averaging preconditions") {
  const Family big(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 2.0), 1.0);
  const Eigen::VectorXd phi = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(spectral_average(big, phi, EnergyInterval(0.0, 1.0), 0.0, 1.0), PreconditionError);
  const Family f = testing::scalar_family();
  CHECK_THROWS_AS(spectral_average(f, 2.0 * phi, EnergyInterval(0.0, 1.0), 0.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(spectral_average(f, phi, EnergyInterval(0.0, 1.0), 1.0, 1.0), ConfigError);
}

TEST_CASE("random instances: bound and route agreement") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int inst = 0; inst < 2; ++inst) {
    const Family f = testing::random_family(16, 4, rng);
    const BirmanSchwinger bs(f);
    const double tau1 = -1.0 + unif(rng), tau2 = tau1 + 0.5 + unif(rng);
    const CouplingWindow window(f, tau1, tau2);
    const Eigen::VectorXd lam = eigenvalues_only(f.base());
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd phi = testing::random_unit(16, rng);
      const double a = lam[0] + unif(rng) * (lam[15] - lam[0]);
      const EnergyInterval I(a, a + 0.2 + unif(rng));
      const double omega_route = spectral_average(window, phi, I);
      const double bound = I.length() * bs.support_norm_sq(phi);
      CHECK(omega_route <= bound + 1e-6);
      const double energy_route = spectral_average_energy_route(bs, f, phi, I, tau1, tau2);
      CHECK(std::abs(omega_route - energy_route) < 1e-5);
      // The window average never exceeds the full-line value.
      try {
        const auto full = spectral_average_full_line(bs, phi, I);
        CHECK(omega_route <= full.value + 1e-6);
      } catch (const PreconditionError&) {
      }
    }
  }
}

TEST_CASE("full-line equality") {
  const Family f = testing::scalar_family(0.2);
  const BirmanSchwinger s(f);
  const auto r = spectral_average_full_line(s, Eigen::VectorXd::Constant(1, 0.7), EnergyInterval(0.5, 1.5));
  CHECK(r.value == doctest::Approx(0.49).epsilon(1e-12));
  CHECK(r.expected == doctest::Approx(0.49).epsilon(1e-12));

  std::mt19937_64 rng(12);
  const Family g = testing::random_family(16, 4, rng);
  const BirmanSchwinger bs(g);
  Eigen::VectorXd off = Eigen::VectorXd::Zero(16);
  for (int i = 0; i < 16; ++i)
    if (g.coupling()[i] == 0.0) off[i] = 1.0;
  const Eigen::VectorXd lam = eigenvalues_only(g.base());
  const EnergyInterval I(0.5 * (lam[2] + lam[3]), 0.5 * (lam[9] + lam[10]));
  CHECK(std::abs(spectral_average_full_line(bs, off, I).value) < 1e-12);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd phi = testing::random_unit(16, rng);
    const auto fl = spectral_average_full_line(bs, phi, I);
    CHECK(std::abs(fl.value - fl.expected) <= 1e-4 * fl.expected);
  }
  CHECK_THROWS_AS(spectral_average_full_line(bs, off, EnergyInterval(lam[3], lam[4] - 0.01)), PreconditionError);
}

TEST_CASE("eta density") {
  const Family two = testing::two_by_two();
  const CouplingWindow window(two, 0.0, 2.0);
  const BirmanSchwinger bs(two);
  Eigen::VectorXd phi(2);
  phi << 0.6, 0.8;
  const auto e = eta_density(window, bs, phi, 0.75);
  CHECK(e.eta == doctest::Approx(0.36).epsilon(1e-10));
  CHECK(e.extrapolated == doctest::Approx(0.36).epsilon(1e-6));
  CHECK_FALSE(e.unstable);
  CHECK(eta_density(window, bs, phi, 5.0).eta == 0.0);

  const Family s = testing::scalar_family();
  const CouplingWindow sw(s, 0.0, 1.0);
  const auto es = eta_density(sw, BirmanSchwinger(s), Eigen::VectorXd::Ones(1), 0.4);
  CHECK(es.eta == doctest::Approx(1.0));
  CHECK(es.extrapolated == doctest::Approx(1.0).epsilon(1e-8));
  // E at the end of the window: the branch stops inside the ladder.
  CHECK(eta_density(sw, BirmanSchwinger(s), Eigen::VectorXd::Ones(1), 1.0 - 5e-4).unstable);
}

TEST_CASE("average CSV") {
  std::ostringstream os;
  write_average_csv({{1, 0.0, 1.0, 0.0, 1.0, 0.25, 1.0}}, os);
  CHECK(os.str().rfind("phi_id,I_a,I_b,tau1,tau2,lhs,rhs,margin\n", 0) == 0);
  CHECK(os.str().find(",0.75\n") != std::string::npos);
}
