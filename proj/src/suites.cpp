#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "speclab/averaging.hpp"
#include "speclab/cli.hpp"
#include "speclab/cube_basis.hpp"
#include "speclab/errors.hpp"
#include "speclab/instances.hpp"
#include "speclab/parallel.hpp"
#include "speclab/rng.hpp"
#include "speclab/ssf.hpp"

namespace speclab {

namespace {

using nlohmann::json;

/// One CSV row: a labelled report.
struct Row {
  std::string label;
  VerificationReport report;
};

class ReportTable {
 public:
  explicit ReportTable(std::string provenance) : provenance_(std::move(provenance)) {}
  void add(std::string label, const VerificationReport& r) { rows_.push_back({std::move(label), r}); }
  std::string csv() const {
    std::ostringstream os;
    os << "# " << provenance_ << "\n"
       << "check,case,lhs,rhs,margin,passed\n"
       << std::setprecision(12);
    for (const auto& row : rows_)
      os << row.report.check << ',' << row.label << ',' << row.report.lhs << ',' << row.report.rhs << ','
         << row.report.margin << ',' << (row.report.passed ? 1 : 0) << '\n';
    return os.str();
  }

 private:
  std::string provenance_;
  std::vector<Row> rows_;
};

std::string provenance(const ExperimentConfig& c, const std::string& suite, const std::string& extra = {}) {
  std::ostringstream os;
  os << "suite=" << suite << " master_seed=" << c.dos.master_seed << " n_samples=" << c.n_samples
     << " d=" << c.dos.domain.d << " L=" << c.dos.domain.L << " m=" << c.dos.domain.m
     << " bc=" << to_string(c.dos.domain.bc) << " kappa=" << c.dos.site.kappa;
  if (!extra.empty()) os << ' ' << extra;
  return os.str();
}

std::string domain_label(const BoxDomain& d) {
  std::ostringstream os;
  os << "d=" << d.d << ";L=" << d.L << ";m=" << d.m << ";bc=" << to_string(d.bc);
  return os.str();
}

json domain_json(const BoxDomain& d) {
  return {{"d", d.d}, {"L", d.L}, {"m", d.m}, {"bc", std::string(to_string(d.bc))}};
}

double relative_margin(const VerificationReport& r) {
  const double scale = std::max({std::abs(r.lhs), std::abs(r.rhs), 1e-300});
  return r.margin / scale;
}

/// Worst-margin summary of a family of reports; passes only if all pass.
VerificationReport worst_of(const std::string& check, const std::vector<VerificationReport>& reports,
                            json params = json::object()) {
  VerificationReport out;
  out.check = check;
  std::size_t failures = 0;
  const VerificationReport* worst = nullptr;
  for (const auto& r : reports) {
    if (!r.passed) ++failures;
    if (!worst || relative_margin(r) < relative_margin(*worst)) worst = &r;
  }
  if (worst) {
    out.lhs = worst->lhs;
    out.rhs = worst->rhs;
    out.margin = worst->margin;
    params["worst"] = worst->params;
    if (!worst->note.empty()) out.note = worst->note;
  }
  out.passed = failures == 0;
  params["instances"] = reports.size();
  params["failures"] = failures;
  out.params = std::move(params);
  return out;
}

std::uint64_t suite_seed(const ExperimentConfig& c, std::uint64_t tag) {
  return counter_hash(c.dos.master_seed, 0x5eed0000ull + tag, 0);
}

DosConfig dos_for(const ExperimentConfig& c, const BoxDomain& domain, double kappa) {
  DosConfig d = c.dos;
  if (!(domain == c.dos.domain) || !(kappa == c.dos.site.kappa) || c.dos.site.is_characteristic()) {
    d.domain = domain;
    d.site = SingleSite::characteristic(kappa, domain);
  }
  return d;
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& r) { return r.passed; });
}

// ---------------------------------------------------------------- trace_bound

SuiteResult run_trace_bound(const ExperimentConfig& config) {
  SuiteResult out;
  out.name = "trace_bound";
  const auto& p = config.trace_bound;
  ReportTable table(provenance(config, out.name, "b_fraction=" + std::to_string(p.b_fraction)));

  // Trace bound and eigenfunction mass, per domain.
  for (const auto& dc : p.domains) {
    const DosConfig dos = dos_for(config, dc.domain, config.dos.site.kappa);
    const std::size_t count = std::max(dc.realizations, dc.domain.bc == Boundary::Dirichlet ? p.mass_realizations : 0);
    struct PerRealization {
      std::vector<VerificationReport> trace;
      std::optional<VerificationReport> mass;
    };
    auto add_mass_check = [&](double kappa, const std::vector<VerificationReport>& reps) {
      std::size_t checked = 0;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        checked += reps[r].params["eigenvectors_checked"].get<std::size_t>();
        std::ostringstream label;
        label << domain_label(dc.domain) << ";kappa=" << kappa << ";r=" << r;
        table.add(label.str(), reps[r]);
      }
      json params = domain_json(dc.domain);
      params["kappa"] = kappa;
      params["energy_cap"] = dc.domain.d / 4.0;
      params["eigenvectors_checked"] = checked;
      auto rep = worst_of("eigenfunction_mass", reps, params);
      if (checked == 0) rep.note = "vacuous: no eigenvalue below d/4 in any realization";
      out.checks.push_back(rep);
    };
    const auto results = parallel_map(count, dos.workers, [&](std::size_t r) {
      PerRealization pr;
      const auto real = sample_disorder(dos.dist, dos.domain, dos.master_seed, r);
      const SpectralData spec = eigendecompose(build_hamiltonian(dos.domain, dos.site, real));
      if (r < dc.realizations)
        for (int n : p.levels) {
          const double b = p.b_fraction * neumann_level_1d(dos.domain.m, n + 1);
          auto rep = trace_bound_check(spec, EnergyInterval(0.0, b), n, dos.domain);
          rep.seed = dos.master_seed;
          pr.trace.push_back(std::move(rep));
        }
      if (dos.domain.bc == Boundary::Dirichlet && r < p.mass_realizations)
        pr.mass = eigenfunction_mass_check(spec, dos.domain, dos.domain.d / 4.0);
      return pr;
    });
    for (std::size_t li = 0; li < p.levels.size(); ++li) {
      std::vector<VerificationReport> reps;
      for (std::size_t r = 0; r < dc.realizations; ++r) {
        reps.push_back(results[r].trace[li]);
        table.add(domain_label(dc.domain) + ";n=" + std::to_string(p.levels[li]) + ";r=" + std::to_string(r),
                  reps.back());
      }
      json params = domain_json(dc.domain);
      params["n"] = p.levels[li];
      out.checks.push_back(worst_of("trace_bound", reps, params));
    }
    if (dc.domain.bc == Boundary::Dirichlet && p.mass_realizations > 0) {
      std::vector<VerificationReport> reps;
      for (std::size_t r = 0; r < p.mass_realizations; ++r) reps.push_back(*results[r].mass);
      add_mass_check(dos.site.kappa, reps);
      for (double kappa : p.mass_kappas) {
        const DosConfig low = dos_for(config, dc.domain, kappa);
        add_mass_check(kappa, parallel_map(p.mass_realizations, low.workers, [&](std::size_t r) {
                         const auto real = sample_disorder(low.dist, low.domain, low.master_seed, r);
                         const SpectralData spec = eigendecompose(build_hamiltonian(low.domain, low.site, real));
                         return eigenfunction_mass_check(spec, low.domain, low.domain.d / 4.0);
                       }));
      }
    }
  }

  // Boundary-term cancellation under all three boundary conditions.
  for (Boundary bc : {Boundary::Dirichlet, Boundary::Neumann, Boundary::Periodic}) {
    BoxDomain dom = config.dos.domain;
    dom.bc = bc;
    const DosConfig dos = dos_for(config, dom, config.dos.site.kappa);
    const SymmetricOperator lap = build_laplacian(dom);
    const auto worst = parallel_map(p.boundary_instances, dos.workers, [&](std::size_t r) {
      const auto real = sample_disorder(dos.dist, dom, dos.master_seed, r);
      const SpectralData spec = eigendecompose(build_hamiltonian(dom, dos.site, real));
      double ratio = 0.0;
      for (std::size_t j = 0; j < spec.size(); ++j) {
        const Eigen::VectorXd psi = spec.vector(j);
        const auto terms = boundary_terms(psi, dom, &lap);
        const double sum = std::accumulate(terms.begin(), terms.end(), 0.0);
        const double scale = dom.cell_volume() * psi.norm() * (lap.matrix * psi).norm();
        ratio = std::max(ratio, std::abs(sum) / scale);
      }
      return ratio;
    });
    std::vector<VerificationReport> reps;
    for (std::size_t r = 0; r < worst.size(); ++r) {
      reps.push_back(VerificationReport::inequality("boundary_cancellation", worst[r], 1e-10));
      table.add(domain_label(dom) + ";r=" + std::to_string(r), reps.back());
    }
    out.checks.push_back(worst_of("boundary_cancellation", reps, domain_json(dom)));
  }

  // Poincare inequality on each cube configuration in use.
  std::vector<std::pair<int, int>> cubes;
  for (const auto& dc : p.domains)
    if (std::find(cubes.begin(), cubes.end(), std::make_pair(dc.domain.d, dc.domain.m)) == cubes.end())
      cubes.emplace_back(dc.domain.d, dc.domain.m);
  const std::uint64_t seed = suite_seed(config, 1);
  for (const auto& [d, m] : cubes) {
    const int cap = std::min(m - 1, 3);
    const CubeBasis basis = neumann_cube_basis(m, d, cap);
    for (int n = 0; n + 1 <= cap; ++n) {
      CounterStream stream(seed, static_cast<std::uint64_t>(100 * d + m) * 16 + static_cast<std::uint64_t>(n));
      std::vector<VerificationReport> reps;
      for (std::size_t t = 0; t < p.poincare_vectors; ++t) {
        const Eigen::VectorXd psi =
            random_unit_vector(stream, static_cast<int>(basis.local_size()), basis.cell_volume());
        reps.push_back(check_poincare(psi, basis, n));
      }
      json params = {{"d", d}, {"m", m}, {"n", n}, {"vectors", p.poincare_vectors}};
      auto agg = worst_of("poincare", reps, params);
      table.add("d=" + std::to_string(d) + ";m=" + std::to_string(m) + ";n=" + std::to_string(n), agg);
      out.checks.push_back(agg);

      const auto mode = std::find_if(basis.modes.begin(), basis.modes.end(), [&](const CubeMode& md) {
        return md.index[0] == n + 1 && md.max_index() == n + 1 && md.index[1] == 0 && md.index[2] == 0;
      });
      const auto sat = check_poincare(mode->values, basis, n);
      auto eq = VerificationReport::equality("poincare_saturation", sat.lhs, sat.rhs, 1e-12);
      eq.params = params;
      table.add("d=" + std::to_string(d) + ";m=" + std::to_string(m) + ";n=" + std::to_string(n), eq);
      out.checks.push_back(eq);
    }
  }
  out.files["trace_bound.csv"] = table.csv();
  return out;
}

// --------------------------------------------------------- spectral_averaging

SuiteResult run_spectral_averaging(const ExperimentConfig& config) {
  SuiteResult out;
  out.name = "spectral_averaging";
  const auto& p = config.spectral_averaging;
  const std::uint64_t seed = suite_seed(config, 2);
  const unsigned workers = config.dos.workers;

  struct Trial {
    AverageRow row;
    double energy_route = 0.0;
    std::optional<double> full_line;
  };
  const auto per_instance = parallel_map(p.instances, workers, [&](std::size_t inst) {
    const Family family = random_family(seed, inst, p.size, p.rank);
    const BirmanSchwinger bs(family);
    CounterStream stream(seed, 1000 + inst);
    std::vector<Trial> trials;
    for (std::size_t w = 0; w < p.windows; ++w) {
      const double tau1 = -1.0 + stream.uniform();
      const double tau2 = tau1 + 0.2 + 1.8 * stream.uniform();
      const CouplingWindow window(family, tau1, tau2);
      const double lo = window.trace().spectra.front().eigenvalues.minCoeff();
      const double hi = window.trace().spectra.back().eigenvalues.maxCoeff();
      for (std::size_t t = 0; t < p.trials_per_window; ++t) {
        const Eigen::VectorXd phi = random_unit_vector(stream, p.size);
        const double a = lo - 0.5 + (hi - lo + 0.5) * stream.uniform();
        const EnergyInterval I(a, a + 0.05 + 1.45 * stream.uniform());
        Trial tr;
        tr.row = {(inst * p.windows + w) * p.trials_per_window + t, I.a, I.b, tau1, tau2,
                  spectral_average(window, phi, I), I.length() * bs.support_norm_sq(phi)};
        tr.energy_route = spectral_average_energy_route(bs, family, phi, I, tau1, tau2);
        try {
          tr.full_line = spectral_average_full_line(bs, phi, I).value;
        } catch (const PreconditionError&) {
        }
        trials.push_back(std::move(tr));
      }
    }
    return trials;
  });

  std::vector<AverageRow> rows;
  std::vector<VerificationReport> bound, routes, domination;
  std::ostringstream route_csv;
  route_csv << "# " << provenance(config, out.name) << "\nphi_id,omega_route,energy_route,difference,full_line\n"
            << std::setprecision(12);
  for (const auto& trials : per_instance)
    for (const auto& tr : trials) {
      rows.push_back(tr.row);
      bound.push_back(VerificationReport::inequality("spectral_average_bound", tr.row.lhs, tr.row.rhs, p.bound_slack));
      const double diff = std::abs(tr.row.lhs - tr.energy_route);
      routes.push_back(VerificationReport::inequality("route_agreement", diff, p.route_tolerance));
      if (tr.full_line)
        domination.push_back(
            VerificationReport::inequality("monotone_domination", tr.row.lhs, *tr.full_line, p.bound_slack));
      route_csv << tr.row.phi_id << ',' << tr.row.lhs << ',' << tr.energy_route << ',' << diff << ','
                << (tr.full_line ? *tr.full_line : std::nan("")) << '\n';
    }
  const json base = {{"size", p.size}, {"rank", p.rank}, {"trials", rows.size()}};
  out.checks.push_back(worst_of("spectral_average_bound", bound, base));
  out.checks.push_back(worst_of("route_agreement", routes, base));
  out.checks.push_back(worst_of("monotone_domination", domination, base));

  // Full-line equality.
  std::ostringstream full_csv;
  full_csv << "# " << provenance(config, out.name) << "\ntrial,I_a,I_b,value,expected,relative_error\n"
           << std::setprecision(12);
  std::vector<VerificationReport> full;
  CounterStream fstream(seed, 2000);
  for (std::size_t t = 0; t < p.full_line_trials; ++t) {
    const Family family = random_family(seed, 5000 + t % std::max<std::size_t>(p.instances, 1), p.size, p.rank);
    const BirmanSchwinger bs(family);
    const Eigen::VectorXd& ev = bs.h0_eigenvalues();
    const Eigen::VectorXd phi = random_unit_vector(fstream, p.size);
    for (int attempt = 0;; ++attempt) {
      const double a = ev[0] - 0.5 + (ev[ev.size() - 1] - ev[0] + 0.5) * fstream.uniform();
      const EnergyInterval I(a, a + 0.1 + 2.0 * fstream.uniform());
      try {
        const auto r = spectral_average_full_line(bs, phi, I);
        const double rel = std::abs(r.value - r.expected) / std::max(r.expected, 1e-300);
        auto rep = VerificationReport::inequality("full_line_equality", rel, p.full_line_tolerance);
        rep.params = {{"value", r.value}, {"expected", r.expected}, {"shifted_nodes", r.shifted_nodes}};
        full.push_back(rep);
        full_csv << t << ',' << I.a << ',' << I.b << ',' << r.value << ',' << r.expected << ',' << rel << '\n';
        break;
      } catch (const PreconditionError&) {
        if (attempt > 20) throw;
      }
    }
  }
  out.checks.push_back(worst_of("full_line_equality", full, {{"rank", p.rank}, {"size", p.size}}));

  // Feynman-Hellmann residuals and branch monotonicity.
  std::ostringstream fh_csv;
  fh_csv << "# " << provenance(config, out.name) << "\ninstance,omega,branch,derivative,expectation,residual,skipped\n"
         << std::setprecision(12);
  struct FhInstance {
    std::vector<std::tuple<double, std::size_t, FeynmanHellmann>> points;
    double worst_drop = 0.0;
    double tolerance = 0.0;
    double u_norm = 0.0;
    std::string failure;
  };
  const auto fh = parallel_map(p.fh_instances, workers, [&](std::size_t inst) {
    const Family family = random_family(seed, 9000 + inst, p.size, p.rank);
    FhInstance fi;
    fi.u_norm = family.coupling_norm();
    for (double omega : {-0.75, -0.25, 0.25, 0.75})
      for (std::size_t j = 0; j < family.size(); ++j)
        fi.points.emplace_back(omega, j, feynman_hellmann_residual(family, omega, j));
    try {
      const BranchTrace tr = trace_branches(family, uniform_grid(-1.0, 1.0, 33));
      for (std::size_t j = 0; j < tr.branch_count(); ++j) {
        const auto b = tr.branch(j);
        for (std::size_t i = 1; i < b.size(); ++i) fi.worst_drop = std::max(fi.worst_drop, b[i - 1] - b[i]);
      }
      fi.tolerance = 1e-9 * (family.scale() + 2.0 * family.coupling_norm());
    } catch (const std::exception& e) {
      fi.failure = e.what();
    }
    return fi;
  });
  std::vector<VerificationReport> fh_reps, mono;
  std::size_t skipped = 0;
  for (std::size_t inst = 0; inst < fh.size(); ++inst) {
    for (const auto& [omega, j, r] : fh[inst].points) {
      fh_csv << inst << ',' << omega << ',' << j << ',' << r.derivative << ',' << r.expectation << ','
             << r.residual << ',' << (r.skipped ? 1 : 0) << '\n';
      if (r.skipped) {
        ++skipped;
        continue;
      }
      fh_reps.push_back(
          VerificationReport::inequality("feynman_hellmann", r.residual, 1e-6 * (1.0 + fh[inst].u_norm)));
    }
    auto m = VerificationReport::inequality("branch_monotonicity", fh[inst].worst_drop, fh[inst].tolerance);
    if (!fh[inst].failure.empty()) {
      m.passed = false;
      m.note = fh[inst].failure;
    }
    mono.push_back(m);
  }
  auto fh_check = worst_of("feynman_hellmann", fh_reps, {{"skipped_near_degenerate", skipped}});
  out.checks.push_back(fh_check);
  out.checks.push_back(worst_of("branch_monotonicity", mono));

  std::ostringstream sweep;
  sweep << "# " << provenance(config, out.name) << "\n";
  write_average_csv(rows, sweep);
  out.files["spectral_averaging.csv"] = sweep.str();
  out.files["spectral_averaging_routes.csv"] = route_csv.str();
  out.files["spectral_averaging_full_line.csv"] = full_csv.str();
  out.files["feynman_hellmann.csv"] = fh_csv.str();
  return out;
}

// ------------------------------------------------------------------------ ssf

SuiteResult run_ssf(const ExperimentConfig& config) {
  SuiteResult out;
  out.name = "ssf";
  const auto& p = config.ssf;
  const std::uint64_t seed = suite_seed(config, 3);
  const double eps_max = *std::max_element(p.epsilons.begin(), p.epsilons.end());
  const std::size_t total = p.instances + p.physical_instances;

  auto make_family = [&](std::size_t inst) {
    if (inst < p.instances) return random_family(seed, inst, p.size, p.rank);
    const std::size_t r = inst - p.instances;
    const auto& dom = config.dos.domain;
    const auto real = sample_disorder(config.dos.dist, dom, config.dos.master_seed, r);
    return site_family(dom, config.dos.site, real, (r * 5 + 1) % dom.cube_count());
  };

  struct Triple {
    SsfRecord record;
    double oracle_gap = 0.0;
    bool excluded = false;
  };
  struct InstanceResult {
    std::vector<Triple> triples;
    double integrated_lhs = 0.0;
    double integrated_rhs = 0.0;
    bool tau2_monotone = true;
  };
  const auto results = parallel_map(total, config.dos.workers, [&](std::size_t inst) {
    const Family family = make_family(inst);
    const bool physical = inst >= p.instances;
    const BirmanSchwinger bs(family);
    CounterStream stream(seed, 3000 + inst);
    InstanceResult ir;
    for (std::size_t t = 0; t < p.triples_per_instance; ++t) {
      const double tau1 = physical ? 0.5 * stream.uniform() : -1.0 + stream.uniform();
      const double tau2 = tau1 + (physical ? 0.2 + 0.5 * stream.uniform() : 0.3 + 1.7 * stream.uniform());
      const CouplingWindow window(family, tau1, tau2);
      const Eigen::VectorXd& ev1 = window.trace().spectra.front().eigenvalues;
      const Eigen::VectorXd& ev2 = window.trace().spectra.back().eigenvalues;
      const auto n = ev1.size();
      // Prefer energies swept by some branch; keep E clear of the window
      // endpoint spectra so the epsilon ladder sees no branch ends.
      double energy = 0.0;
      bool clear = false;
      for (int attempt = 0; attempt < 100 && !clear; ++attempt) {
        if (stream.uniform() < 0.7) {
          const auto j = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(stream.uniform() * n));
          energy = ev1[j] + (ev2[j] - ev1[j]) * stream.uniform();
        } else {
          energy = ev1[0] - 0.5 + (ev2[n - 1] - ev1[0] + 1.0) * stream.uniform();
        }
        const double gap = std::min((ev1.array() - energy).abs().minCoeff(), (ev2.array() - energy).abs().minCoeff());
        clear = gap > 2.0 * eps_max && bs.distance_to_spectrum(energy) > 1e-6 * bs.h0_norm();
      }
      Triple tr;
      tr.record = evaluate_ssf(window, energy, p.epsilons);
      tr.excluded = !clear || tr.record.bs_unstable;
      // Crossing sets: continuation against the Birman-Schwinger oracle.
      std::vector<double> cont, oracle;
      for (const auto& c : window.crossings(tr.record.energy)) cont.push_back(c.omega);
      for (const auto& c : bs.crossings(tr.record.energy))
        if (c.omega >= tau1 && c.omega <= tau2) oracle.push_back(c.omega);
      if (cont.size() != oracle.size()) {
        tr.oracle_gap = std::numeric_limits<double>::infinity();
      } else {
        for (std::size_t i = 0; i < cont.size(); ++i) tr.oracle_gap = std::max(tr.oracle_gap, std::abs(cont[i] - oracle[i]));
      }
      if (t == 0) {
        const EnergyInterval I(std::min(ev1[0], ev2[0]), ev1[std::min<Eigen::Index>(n - 1, 3)]);
        ir.integrated_lhs = window.trace_average(I).value;
        ir.integrated_rhs = integrated_ssf(ev1, ev2, I);
        int prev = 0;
        for (int s = 1; s <= 10; ++s) {
          const double t2 = tau1 + (tau2 - tau1) * s / 10.0;
          const Eigen::VectorXd ev = eigenvalues_only(family.at(t2));
          const double e = move_off_spectra(tr.record.energy, {&ev1, &ev}).energy;
          const int xi = ssf_trace_difference(ev1, ev, e);
          if (xi < prev) ir.tau2_monotone = false;
          prev = xi;
        }
      }
      ir.triples.push_back(std::move(tr));
    }
    return ir;
  });

  std::vector<SsfRecord> records;
  std::vector<VerificationReport> routes, limits, oracle, integrated, monotone;
  std::size_t excluded = 0;
  for (std::size_t inst = 0; inst < results.size(); ++inst) {
    for (const auto& tr : results[inst].triples) {
      records.push_back(tr.record);
      routes.push_back(VerificationReport::equality("ssf_routes", tr.record.xi_trace, tr.record.xi_crossings, 0.0));
      oracle.push_back(VerificationReport::inequality("crossing_oracle", tr.oracle_gap, 1e-6));
      if (tr.excluded) {
        ++excluded;
      } else {
        limits.push_back(VerificationReport::equality("birman_solomyak_limit", tr.record.bs_limit,
                                                      tr.record.xi_trace, 1e-3));
      }
    }
    const auto& ir = results[inst];
    integrated.push_back(VerificationReport::equality("integrated_identity", ir.integrated_lhs, ir.integrated_rhs,
                                                      1e-6 * std::max(1.0, std::abs(ir.integrated_rhs))));
    auto m = VerificationReport::inequality("ssf_tau2_monotone", ir.tau2_monotone ? 0.0 : 1.0, 0.0);
    monotone.push_back(m);
  }
  out.checks.push_back(worst_of("ssf_routes", routes, {{"triples", records.size()}}));
  out.checks.push_back(worst_of("birman_solomyak_limit", limits, {{"excluded_unstable", excluded}}));
  out.checks.push_back(worst_of("crossing_oracle", oracle));
  out.checks.push_back(worst_of("integrated_identity", integrated));
  out.checks.push_back(worst_of("ssf_tau2_monotone", monotone));

  // Bound sweep: cheap, endpoint spectra only.
  ReportTable table(provenance(config, out.name));
  std::vector<VerificationReport> bounds;
  CounterStream bstream(seed, 4000);
  for (std::size_t t = 0; t < p.bound_triples; ++t) {
    const Family family = make_family(t % std::max<std::size_t>(total, 1));
    const double tau1 = -1.0 + bstream.uniform();
    const double tau2 = tau1 + 2.0 * bstream.uniform();
    const Eigen::VectorXd ev1 = eigenvalues_only(family.at(tau1)), ev2 = eigenvalues_only(family.at(tau2));
    const double e = move_off_spectra(ev1[0] - 1.0 + (ev2[ev2.size() - 1] - ev1[0] + 2.0) * bstream.uniform(),
                                      {&ev1, &ev2})
                         .energy;
    bounds.push_back(ssf_bound_check(ev1, ev2, e, tau1, tau2, family.coupling_norm()));
    table.add("triple=" + std::to_string(t), bounds.back());
  }
  out.checks.push_back(worst_of("ssf_bound", bounds));

  std::ostringstream csv;
  csv << "# " << provenance(config, out.name) << "\n";
  write_ssf_csv(records, csv);
  out.files["ssf.csv"] = csv.str();
  out.files["ssf_bound.csv"] = table.csv();
  return out;
}

// --------------------------------------------------------------------- wegner

SuiteResult run_wegner(const ExperimentConfig& config) {
  SuiteResult out;
  out.name = "wegner";
  const auto& p = config.wegner;
  ReportTable table(provenance(config, out.name, "epsilon=" + std::to_string(p.epsilon)));
  std::ostringstream ldos;
  ldos << "# " << provenance(config, out.name, "epsilon=" + std::to_string(p.epsilon)) << "\n"
       << "kappa,E,epsilon,n_hat,stderr,samples,master_seed\n"
       << std::setprecision(12);
  const EnergyInterval I(p.a, p.b);
  for (double kappa : p.kappas) {
    const DosConfig dos = dos_for(config, config.dos.domain, kappa);
    const auto spectra = sample_spectra(dos, config.n_samples);
    const std::string label = "kappa=" + std::to_string(kappa);
    for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dos.domain.m)}) {
      auto r = wegner_check(spectra, dos, I, p.n, scale);
      r.params["kappa"] = kappa;
      table.add(label + ";" + scale.name(), r);
      out.checks.push_back(r);
    }
    const DosEstimate est = ldos_function(spectra, dos, p.ldos_energies, p.epsilon);
    for (std::size_t i = 0; i < est.energies.size(); ++i)
      ldos << kappa << ',' << est.energies[i] << ',' << est.epsilon << ',' << est.values[i] << ','
           << est.stderrs[i] << ',' << est.samples << ',' << est.master_seed << '\n';
    for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dos.domain.m)}) {
      auto r = ldos_bound_check(est, dos, p.n, scale);
      r.params["kappa"] = kappa;
      table.add(label + ";" + scale.name(), r);
      out.checks.push_back(r);
    }
    if (p.ladder.size() >= 2)
      for (double e : p.ldos_energies) {
        auto r = ladder_stability(spectra, dos, e, p.ladder);
        r.note = "advisory: finite-volume estimates need not be smooth in E";
        table.add(label + ";E=" + std::to_string(e), r);
        out.advisories.push_back(r);
      }
  }
  out.files["wegner.csv"] = table.csv();
  out.files["wegner_ldos.csv"] = ldos.str();
  return out;
}

// ------------------------------------------------------------------ lipschitz

SuiteResult run_lipschitz(const ExperimentConfig& config) {
  SuiteResult out;
  out.name = "lipschitz";
  const auto& p = config.lipschitz;
  ReportTable table(provenance(config, out.name, "epsilon=" + std::to_string(p.epsilon)));
  std::vector<std::pair<DomainCase, double>> runs;
  for (const auto& dc : p.domains) runs.emplace_back(dc, config.dos.site.kappa);
  for (double k : p.extra_kappas) runs.emplace_back(p.domains.front(), k);
  for (const auto& [dc, kappa] : runs) {
    const DosConfig dos = dos_for(config, dc.domain, kappa);
    const auto spectra = sample_spectra(dos, config.n_samples);
    for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dc.domain.m)}) {
      std::vector<VerificationReport> reps;
      for (std::size_t i = 0; i < dc.energies.size(); ++i)
        for (std::size_t j = i + 1; j < dc.energies.size(); ++j) {
          const double e1 = std::min(dc.energies[i], dc.energies[j]);
          const double e2 = std::max(dc.energies[i], dc.energies[j]);
          reps.push_back(lipschitz_check(spectra, dos, e1, e2, p.epsilon, scale));
          std::ostringstream label;
          label << domain_label(dc.domain) << ";kappa=" << kappa << ";" << scale.name() << ";E1=" << e1
                << ";E2=" << e2;
          table.add(label.str(), reps.back());
        }
      json params = domain_json(dc.domain);
      params["kappa"] = kappa;
      params["constants"] = scale.name();
      params["energies"] = dc.energies;
      params["epsilon"] = p.epsilon;
      out.checks.push_back(worst_of("lipschitz", reps, params));
    }
  }
  out.files["lipschitz.csv"] = table.csv();
  return out;
}

// ----------------------------------------------------------------- fixed_site

SuiteResult run_fixed_site(const ExperimentConfig& config) {
  SuiteResult out;
  out.name = "fixed_site";
  const auto& p = config.fixed_site;
  const DosConfig& dos = config.dos;
  const std::size_t k = p.site.value_or(dos.domain.cube_count() / 2);
  ReportTable table(provenance(config, out.name, "site=" + std::to_string(k)));
  const EnergyInterval I(p.a, p.b);

  std::vector<double> taus = p.taus;
  for (double t : {0.0, 1.0})
    if (std::find(taus.begin(), taus.end(), t) == taus.end()) taus.push_back(t);
  std::sort(taus.begin(), taus.end());
  std::map<double, std::vector<Eigen::VectorXd>> spectra;
  for (double tau : taus) spectra[tau] = sample_spectra(dos, config.n_samples, Pin{k, tau});

  for (double tau : p.taus)
    for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dos.domain.m)}) {
      auto r = fixed_site_wegner(spectra[tau], dos, k, tau, I, scale);
      table.add("tau=" + std::to_string(tau) + ";" + scale.name(), r);
      out.checks.push_back(r);
    }
  for (std::size_t i = 1; i < taus.size(); ++i) {
    auto r = potential_monotonicity(spectra[taus[i - 1]], spectra[taus[i]]);
    r.params["tau_low"] = taus[i - 1];
    r.params["tau_high"] = taus[i];
    table.add("tau=" + std::to_string(taus[i - 1]) + "->" + std::to_string(taus[i]), r);
    out.checks.push_back(r);
  }
  // Larger pinned coupling never raises the count below b.
  {
    const double low = mean_estimate([&] {
                         std::vector<double> xs;
                         for (const auto& ev : spectra[taus.front()]) xs.push_back(static_cast<double>(count_in(ev, I)));
                         return xs;
                       }())
                           .mean;
    const double high = mean_estimate([&] {
                          std::vector<double> xs;
                          for (const auto& ev : spectra[taus.back()]) xs.push_back(static_cast<double>(count_in(ev, I)));
                          return xs;
                        }())
                            .mean;
    auto r = VerificationReport::inequality("fixed_site_ordering", high, low);
    r.params = {{"tau_low", taus.front()}, {"tau_high", taus.back()}};
    table.add("ordering", r);
    out.checks.push_back(r);
  }
  for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dos.domain.m)}) {
    auto r = fixed_site_chain(spectra[0.0], spectra[1.0], dos, p.chain_e1, p.chain_e2, scale);
    table.add(std::string("chain;") + scale.name(), r);
    out.checks.push_back(r);
  }
  out.files["fixed_site.csv"] = table.csv();
  return out;
}

SuiteResult run_named_suite(const std::string& name, const ExperimentConfig& config) {
  if (name == "trace_bound") return run_trace_bound(config);
  if (name == "spectral_averaging") return run_spectral_averaging(config);
  if (name == "ssf") return run_ssf(config);
  if (name == "wegner") return run_wegner(config);
  if (name == "lipschitz") return run_lipschitz(config);
  if (name == "fixed_site") return run_fixed_site(config);
  throw ConfigError("unknown suite '" + name + "'");
}

RunOutcome run_suite(const ExperimentConfig& config_in, std::ostream& log) {
  config_in.validate();
  ExperimentConfig config = config_in;
  config.dos.workers = config.workers.value_or(default_workers());

  RunOutcome outcome;
  outcome.passed = true;
  json suites = json::array();
  for (const auto& name : config.selected()) {
    const auto start = std::chrono::steady_clock::now();
    SuiteResult r = run_named_suite(name, config);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json checks = json::array(), advisories = json::array(), files = json::array();
    for (const auto& c : r.checks) {
      log << (c.passed ? "PASS " : "FAIL ") << name << '/' << c.check << "  lhs=" << c.lhs << " rhs=" << c.rhs
          << " margin=" << c.margin << '\n';
      checks.push_back(c.to_json());
    }
    for (const auto& a : r.advisories) advisories.push_back(a.to_json());
    for (const auto& [file, body] : r.files) files.push_back(file);
    suites.push_back({{"suite", name},
                      {"passed", r.passed()},
                      {"seconds", r.seconds},
                      {"checks", checks},
                      {"advisories", advisories},
                      {"files", files}});
    outcome.passed = outcome.passed && r.passed();
    outcome.suites.push_back(std::move(r));
  }
  outcome.summary = {{"config", config.to_json()},
                     {"workers", config.dos.workers},
                     {"suites", suites},
                     {"passed", outcome.passed}};

  std::filesystem::create_directories(config.output_dir);
  for (const auto& r : outcome.suites)
    for (const auto& [file, body] : r.files) {
      std::ofstream f(config.output_dir / file, std::ios::binary);
      f << body;
    }
  std::ofstream summary(config.output_dir / "summary.json");
  summary << outcome.summary.dump(2) << '\n';
  return outcome;
}

void print_constants(std::ostream& out, int d, double b, double energy, int n, double kappa, double rho_sup, int m) {
  std::vector<ConstantSet> sets{compute_constants(d, b, energy, n, kappa, rho_sup)};
  if (m > 0) sets.push_back(compute_constants(d, b, energy, n, kappa, rho_sup, LevelScale::discrete(m)));
  out << "d = " << d << ", b = " << b << ", E = " << energy << ", n = " << n << ", kappa = " << kappa
      << ", rho_sup = " << rho_sup << "\n";
  out << std::left << std::setw(10) << "levels" << std::right << std::setw(14) << "E0" << std::setw(14) << "c(b,d)"
      << std::setw(14) << "C_W" << std::setw(14) << "K1" << "\n";
  for (const auto& s : sets) {
    out << std::left << std::setw(10) << (s.scale == "discrete" ? "m=" + std::to_string(m) : s.scale) << std::right
        << std::fixed << std::setprecision(6) << std::setw(14) << s.E0 << std::setw(14) << s.c_bd << std::setw(14)
        << s.C_W << std::setw(14) << s.K1 << "\n";
    out.unsetf(std::ios::fixed);
  }
}

}  // namespace speclab
