#include <doctest.h>

#include <cmath>
#include <sstream>

#include "speclab/errors.hpp"
#include "speclab/ssf.hpp"
#include "test_helpers.hpp"

using namespace speclab;

TEST_CASE("trace difference basics") {
  Eigen::VectorXd ev(3);
  ev << 0.0, 1.0, 2.0;
  CHECK(ssf_trace_difference(ev, ev, 0.5) == 0);
  CHECK_THROWS_AS(ssf_trace_difference(ev, ev, 1.0), PreconditionError);
  const auto moved = move_off_spectra(1.0, {&ev});
  CHECK(moved.shifts == 1);
  CHECK(moved.energy > 1.0);

  const Family s = testing::scalar_family();
  const CouplingWindow w(s, 0.2, 0.8);
  const Eigen::VectorXd a = eigenvalues_only(s.at(0.2)), b = eigenvalues_only(s.at(0.8));
  CHECK(ssf_trace_difference(a, b, 0.5) == 1);
  CHECK(ssf_trace_difference(a, b, 0.1) == 0);
  CHECK(ssf_trace_difference(a, b, 0.9) == 0);
  CHECK(ssf_crossing_count(w, 0.5) == 1);
  CHECK(ssf_crossing_count(w, 0.1) == 0);
  CHECK(ssf_crossing_count(w, 0.9) == 0);
}

TEST_CASE("trace difference equals crossing count on random instances") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int compared = 0;
  for (int inst = 0; inst < 4; ++inst) {
    const Family f = testing::random_family(16, 3, rng);
    const double tau1 = -1.5 * unif(rng), tau2 = tau1 + 0.5 + 2.0 * unif(rng);
    const CouplingWindow w(f, tau1, tau2);
    const Eigen::VectorXd& a = w.trace().spectra.front().eigenvalues;
    const Eigen::VectorXd& b = w.trace().spectra.back().eigenvalues;
    for (int t = 0; t < 10; ++t) {
      const double e = move_off_spectra(a[0] - 0.5 + (b[15] - a[0] + 1.0) * unif(rng), {&a, &b}).energy;
      CHECK(ssf_trace_difference(a, b, e) == ssf_crossing_count(w, e));
      ++compared;
    }
  }
  CHECK(compared == 40);
}

TEST_CASE("Birman-Solomyak limit") {
  const Family s = testing::scalar_family();
  const CouplingWindow w(s, 0.0, 1.0);
  const auto r = birman_solomyak_limit(w, 0.4);
  for (double v : r.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.extrapolant == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(birman_solomyak_limit(w, 5.0).extrapolant == 0.0);

  std::mt19937_64 rng(22);
  const Family f = testing::random_family(8, 8, rng);
  const CouplingWindow wf(f, 0.0, 2.0);
  const Eigen::VectorXd& a = wf.trace().spectra.front().eigenvalues;
  const Eigen::VectorXd& b = wf.trace().spectra.back().eigenvalues;
  // Find an energy where xi = 2 from the trace-difference oracle.
  double target = std::nan("");
  for (int i = 0; i < 400 && std::isnan(target); ++i) {
    const double e = a[0] + (b[7] - a[0]) * (i + 0.5) / 400.0;
    if (ssf_trace_difference(a, b, e) == 2 && (a.array() - e).abs().minCoeff() > 0.02 &&
        (b.array() - e).abs().minCoeff() > 0.02)
      target = e;
  }
  REQUIRE_FALSE(std::isnan(target));
  const auto bl = birman_solomyak_limit(wf, target);
  CHECK(std::abs(bl.extrapolant - 2.0) < 1e-3);
  CHECK_FALSE(bl.unstable);
}

TEST_CASE("SSF bound") {
  Eigen::VectorXd ev(2);
  ev << 0.0, 1.0;
  const auto same = ssf_bound_check(ev, ev, 1.0, 0.5, 0.5, 1.0);
  CHECK(same.lhs == 0.0);
  CHECK(same.passed);

  const Family s = testing::scalar_family();
  const Eigen::VectorXd a = eigenvalues_only(s.at(0.0)), b = eigenvalues_only(s.at(1.0));
  const auto sc = ssf_bound_check(a, b, 0.5, 0.0, 1.0, 1.0);
  CHECK(sc.lhs == 1.0);
  CHECK(sc.rhs == 1.0);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Family f = testing::random_family(16, 4, rng);
    const double tau1 = -unif(rng), tau2 = tau1 + 2.0 * unif(rng);
    const Eigen::VectorXd x = eigenvalues_only(f.at(tau1)), y = eigenvalues_only(f.at(tau2));
    const double e = move_off_spectra(-3.0 + 6.0 * unif(rng), {&x, &y}).energy;
    CHECK(ssf_bound_check(x, y, e, tau1, tau2, f.coupling_norm()).passed);
  }
}

TEST_CASE("xi is non-decreasing in tau2") {
  std::mt19937_64 rng(24);
  const Family f = testing::random_family(12, 4, rng);
  const Eigen::VectorXd x = eigenvalues_only(f.at(0.0));
  const double e = 0.5 * (x[5] + x[6]);
  int prev = 0;
  for (double tau2 = 0.1; tau2 < 3.0; tau2 += 0.1) {
    const Eigen::VectorXd y = eigenvalues_only(f.at(tau2));
    const double en = move_off_spectra(e, {&x, &y}).energy;
    const int xi = ssf_trace_difference(x, y, en);
    CHECK(xi >= prev);
    prev = xi;
  }
}

TEST_CASE("integrated identity") {
  std::mt19937_64 rng(25);
  const Family f = testing::random_family(10, 4, rng);
  const CouplingWindow w(f, -0.5, 1.0);
  const Eigen::VectorXd& a = w.trace().spectra.front().eigenvalues;
  const Eigen::VectorXd& b = w.trace().spectra.back().eigenvalues;
  const EnergyInterval I(a[2], a[6]);
  CHECK(w.trace_average(I).value == doctest::Approx(integrated_ssf(a, b, I)).epsilon(1e-8));
}

TEST_CASE("SSF records and CSV") {
  std::mt19937_64 rng(26);
  const Family f = testing::random_family(10, 3, rng);
  const CouplingWindow w(f, 0.0, 1.5);
  const Eigen::VectorXd& a = w.trace().spectra.front().eigenvalues;
  const auto rec = evaluate_ssf(w, 0.5 * (a[4] + a[5]));
  CHECK(rec.routes_agree());
  CHECK(rec.bound_holds());
  std::ostringstream os;
  write_ssf_csv({rec}, os);
  CHECK(os.str().rfind("E,tau1,tau2,xi_trace,xi_crossings,bs_limit,bound_rhs", 0) == 0);
}
