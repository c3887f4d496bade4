#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "speclab/cube_basis.hpp"
#include "speclab/dos.hpp"
#include "speclab/errors.hpp"

using namespace speclab;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

DosConfig desk(double kappa = 1.0, std::uint64_t seed = 2024) {
  DosConfig c;
  c.domain = BoxDomain{1, 4, 8, Boundary::Dirichlet};
  c.site = SingleSite::characteristic(kappa, c.domain);
  c.master_seed = seed;
  return c;
}

}  // namespace

TEST_CASE("constants against direct evaluation") {
  CHECK(energy_threshold(1) == doctest::Approx(kPi2 / (2.0 * (2.0 * kPi2 + 1.0))).epsilon(1e-14));
  CHECK(std::abs(energy_threshold(1) - 0.23795) < 1e-4);
  CHECK(std::abs(energy_threshold(2) - 0.45400) < 1e-4);
  const double c = 1.0 / (1.0 - 0.1 / kPi2 - (2.0 + 0.4) / 4.0);
  CHECK(trace_constant(0.1, 2) == doctest::Approx(c).epsilon(1e-14));
  CHECK(std::abs(trace_constant(0.1, 2) - 2.5650) < 1e-3);
  CHECK(wegner_constant(0.1, 0, 1.0, 1.0) == doctest::Approx(1.0 / (1.0 - 0.1 / kPi2)).epsilon(1e-14));
  CHECK(std::abs(wegner_constant(0.1, 0, 1.0, 1.0) - 1.01024) < 1e-5);
  const auto set = compute_constants(2, 0.1, 0.1, 0, 0.5, 1.0);
  CHECK(set.K1 == doctest::Approx(set.c_bd / 0.25));
  CHECK(set.C_W == doctest::Approx(2.0 * wegner_constant(0.1, 0, 1.0, 1.0)));
}

TEST_CASE("constant domains") {
  CHECK_THROWS_AS(trace_constant(energy_threshold(1), 1), DomainError);
  CHECK_THROWS_AS(trace_constant(-0.1, 1), DomainError);
  CHECK_THROWS_AS(wegner_constant(kPi2, 0, 1.0, 1.0), DomainError);
  CHECK_NOTHROW(wegner_constant(kPi2, 1, 1.0, 1.0));
  try {
    trace_constant(0.3, 1);
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("E0") != std::string::npos);
  }
  double prev = 0.0;
  for (int d = 1; d <= 60; ++d) {
    const double e0 = energy_threshold(d);
    CHECK(e0 > prev);
    CHECK(e0 < 0.5 * kPi2);
    prev = e0;
  }
  CHECK(energy_threshold(1000000) == doctest::Approx(0.5 * kPi2).epsilon(1e-4));
  const double e0 = energy_threshold(2);
  CHECK(trace_constant(0.5 * e0, 2) > 0.0);
  CHECK(trace_constant(e0 * (1 - 1e-6), 2) > 1e4);
}

TEST_CASE("discrete constants approach the continuum ones") {
  for (int d : {1, 2}) {
    const double cont = energy_threshold(d);
    double prev = 0.0;
    for (int m : {4, 8, 16, 32}) {
      const double disc = energy_threshold(d, LevelScale::discrete(m));
      CHECK(disc < cont);
      CHECK(disc > prev);
      prev = disc;
    }
    CHECK(prev == doctest::Approx(cont).epsilon(1e-3));
  }
  CHECK(LevelScale::discrete(8).level(1) == doctest::Approx(neumann_level_1d(8, 1)));
}

TEST_CASE("ldos measure trivial cases") {
  const DosConfig c = desk();
  const auto spectra = sample_spectra(c, 50);
  const auto below = mc_ldos_measure(spectra, c.domain, EnergyInterval(-2.0, -1.0));
  CHECK(below.mean == 0.0);
  CHECK(below.stderr_ == 0.0);

  DosConfig free = desk(0.0);
  free.site.profile.setZero();
  const auto fs = sample_spectra(free, 20);
  const EnergyInterval I(0.0, 5.0);
  const auto est = mc_ldos_measure(fs, free.domain, I);
  const Eigen::VectorXd lap = eigenvalues_only(build_laplacian(free.domain).dense());
  CHECK(est.mean == doctest::Approx(count_in(lap, I) / free.domain.volume()));
  CHECK(est.stderr_ == 0.0);
}

TEST_CASE("ldos measure is additive and reproducible") {
  const DosConfig c = desk();
  const auto spectra = sample_spectra(c, 200);
  const auto a = mc_ldos_measure(spectra, c.domain, EnergyInterval(0.0, 0.5));
  const auto b = mc_ldos_measure(spectra, c.domain, EnergyInterval(0.5 + 1e-9, 2.0));
  const auto ab = mc_ldos_measure(spectra, c.domain, EnergyInterval(0.0, 2.0));
  CHECK(a.mean + b.mean == doctest::Approx(ab.mean).epsilon(1e-14));

  DosConfig par = c;
  par.workers = 3;
  const auto again = sample_spectra(par, 200);
  for (std::size_t r = 0; r < spectra.size(); ++r) CHECK((spectra[r] - again[r]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("desk estimate is consistent with a longer run") {
  const DosConfig c = desk();
  const EnergyInterval I(0.05, 0.15);
  const auto small = mc_ldos_measure(c, I, 1000);
  DosConfig other = c;
  other.master_seed = 777;
  const auto big = mc_ldos_measure(other, I, 10000);
  CHECK(std::abs(small.mean - big.mean) <= 3.0 * std::hypot(small.stderr_, big.stderr_) + 1e-15);
  // A window that actually holds eigenvalues.
  const EnergyInterval J(0.2, 0.6);
  const auto s2 = mc_ldos_measure(c, J, 1000);
  const auto b2 = mc_ldos_measure(other, J, 10000);
  CHECK(s2.mean > 0.0);
  CHECK(std::abs(s2.mean - b2.mean) <= 3.0 * std::hypot(s2.stderr_, b2.stderr_));
}

TEST_CASE("Wegner bound with explicit constant") {
  const EnergyInterval I(0.05, 0.15);
  const auto r = wegner_check(desk(), I, 0, 1000);
  CHECK(r.passed);
  const auto r5 = wegner_check(desk(0.5), I, 0, 1000);
  CHECK(r5.passed);
  CHECK(r5.params["C_W"].get<double>() == doctest::Approx(2.0 * r.params["C_W"].get<double>()));
  const auto disc = wegner_check(desk(), I, 0, 200, LevelScale::discrete(8));
  CHECK(disc.passed);
  // Wider window with many eigenvalues.
  CHECK(wegner_check(desk(), EnergyInterval(0.1, 3.0), 0, 300).passed);
  CHECK_THROWS_AS(wegner_check(desk(), EnergyInterval(0.0, 10.0), 0, 10), DomainError);
}

TEST_CASE("ldos function") {
  const DosConfig c = desk();
  const auto spectra = sample_spectra(c, 300);
  const auto above = ldos_function(spectra, c, {100.0}, 0.1);
  CHECK(above.values[0] == 0.0);
  CHECK_THROWS_AS(ldos_function(spectra, c, {0.0}, 0.0), ConfigError);

  const double e = 0.3, eps = 0.2;
  const auto est = ldos_function(spectra, c, {e}, eps);
  double total = 0.0;
  for (const auto& ev : spectra) total += static_cast<double>(count_half_open(ev, e, e + eps));
  CHECK(eps * c.domain.volume() * est.values[0] == doctest::Approx(total / spectra.size()).epsilon(1e-14));
  CHECK(eps * est.values[0] ==
        doctest::Approx(mc_ldos_measure(spectra, c.domain, EnergyInterval(e + 1e-9, e + eps)).mean).epsilon(1e-12));

  const auto grid = ldos_function(spectra, c, {0.0, 0.05, 0.1, 0.15, 0.2}, 0.02);
  for (double v : grid.values) CHECK(v >= 0.0);
  CHECK(ldos_bound_check(grid, c, 0).passed);

  std::ostringstream os;
  write_dos_csv(grid, os);
  CHECK(os.str().rfind("E,epsilon,n_hat,stderr,samples,master_seed\n", 0) == 0);
}

TEST_CASE("standard errors shrink like 1/sqrt(samples)") {
  DosConfig c;
  c.domain = BoxDomain{1, 2, 4, Boundary::Neumann};
  c.site = SingleSite::characteristic(1.0, c.domain);
  c.master_seed = 5;
  const auto s = ldos_function(c, {0.4}, 0.5, 400);
  const auto l = ldos_function(c, {0.4}, 0.5, 6400);
  REQUIRE(s.stderrs[0] > 0.0);
  CHECK(s.stderrs[0] / l.stderrs[0] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("Lipschitz check") {
  const DosConfig c = desk();
  const auto spectra = sample_spectra(c, 1000);
  const auto same = lipschitz_check(spectra, c, 0.1, 0.1, 0.02);
  CHECK(same.lhs == 0.0);
  CHECK(same.passed);
  const auto r = lipschitz_check(spectra, c, 0.05, 0.15, 0.02);
  CHECK(r.passed);
  CHECK(lipschitz_check(spectra, c, 0.05, 0.15, 0.02, LevelScale::discrete(8)).passed);
  CHECK_THROWS_AS(lipschitz_check(spectra, c, 0.05, 0.3, 0.02), DomainError);

  DosConfig soft = desk(0.25);
  CHECK(lipschitz_check(soft, 0.1, 0.2, 0.02, 500).passed);

  DosConfig table = c;
  table.dist = DensityTable{0.0, 1.0, {1.0, 2.0}};
  CHECK_THROWS_AS(lipschitz_check(spectra, table, 0.05, 0.15, 0.02), ConfigError);

  DosConfig two;
  two.domain = BoxDomain{2, 2, 4, Boundary::Dirichlet};
  two.site = SingleSite::characteristic(1.0, two.domain);
  two.master_seed = 8;
  CHECK(lipschitz_check(two, 0.1, 0.3, 0.02, 100).passed);
}

TEST_CASE("fixed-site Wegner and the chain") {
  const DosConfig c = desk();
  const std::size_t k = 3;
  const auto low = sample_spectra(c, 500, Pin{k, 0.0});
  const auto mid = sample_spectra(c, 500, Pin{k, 0.5});
  const auto high = sample_spectra(c, 500, Pin{k, 1.0});
  const EnergyInterval I(0.05, 0.1);
  const auto r0 = fixed_site_wegner(low, c, k, 0.0, I);
  const auto r1 = fixed_site_wegner(high, c, k, 1.0, I);
  CHECK(r0.passed);
  CHECK(r1.passed);
  CHECK(r1.lhs <= r0.lhs);
  CHECK(fixed_site_wegner(c, k, 0.5, EnergyInterval(-1.0, -0.5 + 0.6), 50).passed);
  CHECK(potential_monotonicity(low, mid).passed);
  CHECK(potential_monotonicity(mid, high).passed);
  CHECK_FALSE(potential_monotonicity(high, low).passed);
  CHECK(fixed_site_chain(low, high, c, 0.1, 0.2).passed);

  DosConfig neu = c;
  neu.domain.bc = Boundary::Neumann;
  CHECK_THROWS_AS(fixed_site_wegner(neu, k, 0.0, I, 10), ConfigError);
  CHECK_THROWS_AS(fixed_site_wegner(c, k, 0.0, EnergyInterval(0.0, 0.3), 10), DomainError);
}

TEST_CASE("fixed-site Wegner with weak coupling sees eigenvalues in I") {
  const DosConfig c = desk(0.05, 11);
  const std::size_t k = 4;
  const auto low = sample_spectra(c, 400, Pin{k, 0.0});
  const auto high = sample_spectra(c, 400, Pin{k, 1.0});
  const EnergyInterval I(0.12, 0.22);
  const auto r0 = fixed_site_wegner(low, c, k, 0.0, I);
  const auto r1 = fixed_site_wegner(high, c, k, 1.0, I);
  CHECK(r0.lhs > 0.0);
  CHECK(r0.passed);
  CHECK(r1.passed);
  const auto chain = fixed_site_chain(low, high, c, 0.12, 0.22);
  CHECK(chain.passed);
}
