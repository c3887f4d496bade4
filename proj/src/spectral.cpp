#include "speclab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "speclab/errors.hpp"

namespace speclab {

double SpectralData::norm() const {
  if (eigenvalues.size() == 0) return 0.0;
  return std::max(std::abs(eigenvalues[0]), std::abs(eigenvalues[eigenvalues.size() - 1]));
}

SpectralData eigendecompose(const Eigen::MatrixXd& h, double cell_volume, std::string source,
                            const EigenOptions& options) {
  if (h.rows() != h.cols()) throw ConfigError("eigendecompose needs a square matrix");
  if (static_cast<std::size_t>(h.rows()) > options.budget)
    throw ConfigError("matrix of size " + std::to_string(h.rows()) + " exceeds the dense budget");
  if (!(cell_volume > 0.0)) throw ConfigError("cell volume must be positive");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("dense symmetric eigensolver failed to converge for " + source);

  SpectralData s;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  s.cell_volume = cell_volume;
  s.source = std::move(source);

  if (options.verify && h.rows() > 0) {
    const double hnorm = s.norm();
    const Eigen::MatrixXd r = h * s.eigenvectors - s.eigenvectors * s.eigenvalues.asDiagonal();
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      const double res = r.col(j).norm();
      if (res > 1e-10 * (hnorm + std::abs(s.eigenvalues[j])) + 1e-300) {
        std::ostringstream os;
        os << "eigenpair " << j << " residual " << res << " exceeds 1e-10*(||H||+|lambda|) for "
           << s.source;
        throw ConvergenceError(os.str());
      }
    }
    const Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.eigenvectors;
    const double dev = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-10) throw ConvergenceError("eigenvectors not orthonormal for " + s.source);
  }
  s.eigenvectors /= std::sqrt(cell_volume);
  return s;
}

SpectralData eigendecompose(const SymmetricOperator& h, const EigenOptions& options) {
  return eigendecompose(h.dense(), h.cell_volume, h.description, options);
}

Eigen::VectorXd eigenvalues_only(const Eigen::MatrixXd& h, std::size_t budget) {
  if (static_cast<std::size_t>(h.rows()) > budget)
    throw ConfigError("matrix of size " + std::to_string(h.rows()) + " exceeds the dense budget");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed to converge");
  return solver.eigenvalues();
}

EnergyInterval::EnergyInterval(double lo, double hi) : a(lo), b(hi) {
  if (!(lo <= hi)) throw ConfigError("energy interval needs a <= b");
}

double EnergyInterval::tie_tolerance() const {
  return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

bool EnergyInterval::contains(double e) const {
  const double t = tie_tolerance();
  return e >= a - t && e <= b + t;
}

std::size_t count_in(const Eigen::VectorXd& eigenvalues, const EnergyInterval& interval) {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (interval.contains(eigenvalues[i])) ++n;
  return n;
}

std::size_t count_below(const Eigen::VectorXd& eigenvalues, double e) {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues[i] < e) ++n;
  return n;
}

std::size_t projector_trace(const SpectralData& spec, const EnergyInterval& interval) {
  return count_in(spec.eigenvalues, interval);
}

double projector_element(const SpectralData& spec, const EnergyInterval& interval,
                         const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  if (static_cast<std::size_t>(f.size()) != spec.size() || static_cast<std::size_t>(g.size()) != spec.size())
    throw ConfigError("projector_element: vector dimension does not match the spectrum");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < spec.eigenvalues.size(); ++j) {
    if (!interval.contains(spec.eigenvalues[j])) continue;
    const auto psi = spec.eigenvectors.col(j);
    sum += (spec.cell_volume * f.dot(psi)) * (spec.cell_volume * psi.dot(g));
  }
  return sum;
}

Eigen::Index best_match(const SpectralData& spec, const Eigen::VectorXd& v, double* best) {
  const Eigen::VectorXd ov = (spec.cell_volume * (spec.eigenvectors.transpose() * v)).cwiseAbs();
  Eigen::Index idx = 0;
  const double top = ov.maxCoeff(&idx);
  if (best) *best = top;
  return idx;
}

std::vector<int> max_overlap_assignment(const Eigen::MatrixXd& overlap) {
  // Hungarian method on cost = -overlap, 1-based potentials.
  const int n = static_cast<int>(overlap.rows());
  if (overlap.cols() != overlap.rows()) throw ConfigError("assignment needs a square overlap matrix");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -overlap(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double BranchTrace::energy(std::size_t point, std::size_t branch) const {
  return spectra[point].eigenvalues[labels[point][branch]];
}

Eigen::VectorXd BranchTrace::vector(std::size_t point, std::size_t branch) const {
  return spectra[point].eigenvectors.col(labels[point][branch]);
}

std::vector<double> BranchTrace::branch(std::size_t j) const {
  std::vector<double> e(points());
  for (std::size_t i = 0; i < points(); ++i) e[i] = energy(i, j);
  return e;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw ConfigError("a grid needs at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = hi;
  return g;
}

namespace {

SpectralData decompose_at(const Family& family, double omega) {
  std::ostringstream os;
  os << family.description() << " @ omega=" << std::setprecision(17) << omega;
  return eigendecompose(family.at(omega), family.cell_volume(), os.str());
}

struct Appender {
  const Family& family;
  const BranchOptions& options;
  BranchTrace& trace;

  void push(double omega, int depth) {
    const std::size_t last = trace.points() - 1;
    SpectralData next = decompose_at(family, omega);
    const SpectralData& prev = trace.spectra[last];
    const auto& prev_labels = trace.labels[last];
    const Eigen::Index n = prev.eigenvectors.cols();
    Eigen::MatrixXd ordered(prev.eigenvectors.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) ordered.col(j) = prev.eigenvectors.col(prev_labels[j]);
    const Eigen::MatrixXd overlap =
        (next.cell_volume * (ordered.transpose() * next.eigenvectors)).cwiseAbs();
    std::vector<int> assign = max_overlap_assignment(overlap);
    double worst = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) worst = std::min(worst, overlap(j, assign[j]));

    if (worst < options.overlap_floor) {
      const double lo = trace.omega_grid[last];
      if (depth >= options.max_refine_depth) {
        std::ostringstream os;
        os << "eigenvector overlap " << worst << " below floor " << options.overlap_floor
           << " on omega in [" << std::setprecision(17) << lo << ", " << omega
           << "]; refine the coupling grid there";
        throw RefineError(os.str());
      }
      push(0.5 * (lo + omega), depth + 1);
      push(omega, depth + 1);
      return;
    }
    trace.omega_grid.push_back(omega);
    trace.spectra.push_back(std::move(next));
    trace.labels.push_back(std::move(assign));
    trace.step_overlap.push_back(worst);
    trace.overlap_floor = std::min(trace.overlap_floor, worst);
  }
};

}  // namespace

BranchTrace trace_branches(const Family& family, std::vector<double> omega_grid,
                           const BranchOptions& options) {
  if (omega_grid.empty()) throw ConfigError("coupling grid is empty");
  for (std::size_t i = 1; i < omega_grid.size(); ++i)
    if (!(omega_grid[i] > omega_grid[i - 1])) throw ConfigError("coupling grid must be strictly increasing");

  BranchTrace trace;
  trace.omega_grid.push_back(omega_grid.front());
  trace.spectra.push_back(decompose_at(family, omega_grid.front()));
  std::vector<int> identity(trace.spectra.front().size());
  for (std::size_t j = 0; j < identity.size(); ++j) identity[j] = static_cast<int>(j);
  trace.labels.push_back(std::move(identity));

  Appender appender{family, options, trace};
  for (std::size_t i = 1; i < omega_grid.size(); ++i) appender.push(omega_grid[i], 0);

  // Branch monotonicity: u^2 >= 0 makes every analytic branch non-decreasing.
  const double span = std::max(std::abs(trace.omega_grid.front()), std::abs(trace.omega_grid.back()));
  const double tol = 1e-9 * (family.scale() + span * family.coupling_norm());
  for (std::size_t j = 0; j < trace.branch_count(); ++j) {
    for (std::size_t i = 1; i < trace.points(); ++i) {
      const double drop = trace.energy(i - 1, j) - trace.energy(i, j);
      if (drop > tol) {
        std::ostringstream os;
        os << "branch " << j << " decreases by " << drop << " on omega in [" << trace.omega_grid[i - 1]
           << ", " << trace.omega_grid[i] << "]";
        throw InvariantViolation(os.str());
      }
    }
  }
  return trace;
}

void write_branch_csv(const BranchTrace& trace, std::ostream& out) {
  out << "omega,branch_index,eigenvalue,min_overlap\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < trace.points(); ++i) {
    const double ov = i == 0 ? 1.0 : trace.step_overlap[i - 1];
    for (std::size_t j = 0; j < trace.branch_count(); ++j)
      out << trace.omega_grid[i] << ',' << j << ',' << trace.energy(i, j) << ',' << ov << '\n';
  }
}

FeynmanHellmann feynman_hellmann_residual(const Family& family, double omega, std::size_t j,
                                          double step) {
  FeynmanHellmann r;
  const SpectralData spec = decompose_at(family, omega);
  if (j >= spec.size()) throw ConfigError("branch index out of range");
  const auto jj = static_cast<Eigen::Index>(j);
  const double hnorm = std::max(spec.norm(), 1e-300);
  double gap = std::numeric_limits<double>::infinity();
  if (jj > 0) gap = std::min(gap, spec.eigenvalues[jj] - spec.eigenvalues[jj - 1]);
  if (jj + 1 < spec.eigenvalues.size()) gap = std::min(gap, spec.eigenvalues[jj + 1] - spec.eigenvalues[jj]);
  if (gap <= 1e-6 * hnorm) {
    r.skipped = true;
    std::ostringstream os;
    os << "eigenvalue " << j << " is near-degenerate (gap " << gap << ")";
    r.reason = os.str();
    return r;
  }
  const Eigen::VectorXd psi = spec.vector(j);
  r.expectation = spec.cell_volume * psi.dot(family.coupling().cwiseProduct(psi));

  const SpectralData plus = decompose_at(family, omega + step);
  const SpectralData minus = decompose_at(family, omega - step);
  const double e_plus = plus.eigenvalues[best_match(plus, psi)];
  const double e_minus = minus.eigenvalues[best_match(minus, psi)];
  r.derivative = (e_plus - e_minus) / (2.0 * step);
  r.residual = std::abs(r.derivative - r.expectation);
  r.within_contract = r.residual <= 1e-6 * (1.0 + family.coupling_norm());
  return r;
}

namespace {

BranchState match_state(const Family& family, double omega, const Eigen::VectorXd& reference,
                        const BranchOptions& options, double lo, double hi) {
  const SpectralData s = decompose_at(family, omega);
  double ov = 0.0;
  const Eigen::Index idx = best_match(s, reference, &ov);
  if (ov < options.overlap_floor) {
    std::ostringstream os;
    os << "lost branch identity (overlap " << ov << ") while bisecting on omega in ["
       << std::setprecision(17) << lo << ", " << hi << "]";
    throw RefineError(os.str());
  }
  return {omega, s.eigenvalues[idx], s.eigenvectors.col(idx)};
}

/// Branch j at an arbitrary omega within the trace range.
BranchState state_at(const Family& family, const BranchTrace& trace, std::size_t j, double omega,
                     const BranchOptions& options) {
  const auto& g = trace.omega_grid;
  auto it = std::upper_bound(g.begin(), g.end(), omega);
  const std::size_t i = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
  if (g[i] == omega) return {omega, trace.energy(i, j), trace.vector(i, j)};
  const double hi = i + 1 < g.size() ? g[i + 1] : omega;
  return match_state(family, omega, trace.vector(i, j), options, g[i], hi);
}

}  // namespace

std::optional<BranchState> solve_crossing(const Family& family, const BranchTrace& trace,
                                          std::size_t branch, double energy, double tau1,
                                          double tau2, const BranchOptions& options) {
  if (!(tau1 <= tau2)) throw ConfigError("crossing window needs tau1 <= tau2");
  if (trace.points() == 0 || branch >= trace.branch_count()) throw ConfigError("branch index out of range");
  const auto& g = trace.omega_grid;
  const double slack = 1e-14 * std::max(1.0, std::abs(g.back() - g.front()));
  if (tau1 < g.front() - slack || tau2 > g.back() + slack)
    throw ConfigError("crossing window lies outside the traced coupling range");
  tau1 = std::max(tau1, g.front());
  tau2 = std::min(tau2, g.back());

  const double tol = 1e-10 * std::max(1.0, std::abs(energy));
  BranchState lo = state_at(family, trace, branch, tau1, options);
  if (lo.energy > energy + tol) return std::nullopt;
  if (std::abs(lo.energy - energy) <= tol) return lo;
  BranchState hi = state_at(family, trace, branch, tau2, options);
  if (hi.energy < energy - tol) return std::nullopt;
  if (std::abs(hi.energy - energy) <= tol) return hi;

  // Tighten the bracket with traced grid points before bisecting.
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] <= lo.omega || g[i] >= hi.omega) continue;
    const double e = trace.energy(i, branch);
    if (e < energy) {
      lo = {g[i], e, trace.vector(i, branch)};
    } else {
      hi = {g[i], e, trace.vector(i, branch)};
      break;
    }
  }

  const double width_floor = 1e-13 * std::max(1.0, std::abs(tau2 - tau1));
  BranchState best = std::abs(lo.energy - energy) < std::abs(hi.energy - energy) ? lo : hi;
  for (int iter = 0; iter < 200 && hi.omega - lo.omega > width_floor; ++iter) {
    const double mid = 0.5 * (lo.omega + hi.omega);
    BranchState s = match_state(family, mid, lo.vector, options, lo.omega, hi.omega);
    if (std::abs(s.energy - energy) <= std::abs(best.energy - energy)) best = s;
    if (s.energy < energy)
      lo = std::move(s);
    else
      hi = std::move(s);
  }
  if (std::abs(best.energy - energy) > tol) {
    std::ostringstream os;
    os << "branch " << branch << " jumps across E=" << energy << " near omega " << best.omega
       << "; refine the coupling grid";
    throw RefineError(os.str());
  }
  return best;
}

double crossing_weight(const Family& family, const Eigen::VectorXd& psi, const Eigen::VectorXd& phi) {
  const Eigen::VectorXd upsi = family.u().cwiseProduct(psi);
  const double w = family.cell_volume();
  const double nrm = w * upsi.squaredNorm();
  if (nrm <= 0.0) return 0.0;
  const double proj = w * upsi.dot(phi);
  return proj * proj / nrm;
}

std::vector<CrossingRecord> level_crossings(const Family& family, const BranchTrace& trace,
                                            double energy, double tau1, double tau2,
                                            const Eigen::VectorXd* phi, const BranchOptions& options) {
  std::vector<CrossingRecord> out;
  for (std::size_t j = 0; j < trace.branch_count(); ++j) {
    auto s = solve_crossing(family, trace, j, energy, tau1, tau2, options);
    if (!s) continue;
    CrossingRecord rec{j, energy, s->omega, 0.0};
    if (phi) rec.weight = crossing_weight(family, s->vector, *phi);
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.omega < b.omega || (a.omega == b.omega && a.branch < b.branch);
  });
  return out;
}

void write_crossing_csv(const std::vector<CrossingRecord>& records, std::ostream& out) {
  out << "branch,E,omega,weight\n" << std::setprecision(17);
  for (const auto& r : records) out << r.branch << ',' << r.energy << ',' << r.omega << ',' << r.weight << '\n';
}

BirmanSchwinger::BirmanSchwinger(const Eigen::MatrixXd& h0, const Eigen::VectorXd& u, double cell_volume)
    : dim_(h0.rows()), cell_volume_(cell_volume) {
  if (h0.rows() != h0.cols() || h0.rows() != u.size()) throw ConfigError("Birman-Schwinger: size mismatch");
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] < 0.0) throw ConfigError("Birman-Schwinger: u must be nonnegative");
    if (u[i] > kSupportFloor) support_.push_back(i);
  }
  if (support_.empty()) throw PreconditionError("Birman-Schwinger: u has empty support");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h0, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw ConvergenceError("Birman-Schwinger: eigensolver failed");
  eigenvalues_ = solver.eigenvalues();
  norm_ = std::max(1e-300, std::max(std::abs(eigenvalues_[0]), std::abs(eigenvalues_[eigenvalues_.size() - 1])));
  const auto s = static_cast<Eigen::Index>(support_.size());
  support_rows_.resize(s, dim_);
  u_support_.resize(s);
  for (Eigen::Index r = 0; r < s; ++r) {
    support_rows_.row(r) = solver.eigenvectors().row(support_[r]);
    u_support_[r] = u[support_[r]];
  }
}

BirmanSchwinger::BirmanSchwinger(const Family& family)
    : BirmanSchwinger(family.base(), family.u(), family.cell_volume()) {}

double BirmanSchwinger::distance_to_spectrum(double energy) const {
  return (eigenvalues_.array() - energy).abs().minCoeff();
}

std::vector<BirmanSchwinger::Crossing> BirmanSchwinger::crossings(double energy) const {
  const double dist = distance_to_spectrum(energy);
  if (dist <= 1e-8 * norm_) {
    std::ostringstream os;
    os << "E = " << energy << " lies within " << dist << " of sigma(H_0); Birman-Schwinger kernel undefined";
    throw PreconditionError(os.str());
  }
  const Eigen::VectorXd resolvent = (eigenvalues_.array() - energy).inverse().matrix();
  Eigen::MatrixXd k = support_rows_ * resolvent.asDiagonal() * support_rows_.transpose();
  k = u_support_.asDiagonal() * k * u_support_.asDiagonal();
  k = 0.5 * (k + k.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw ConvergenceError("Birman-Schwinger: kernel eigensolver failed");
  const Eigen::VectorXd mu = solver.eigenvalues();
  const double scale = mu.cwiseAbs().maxCoeff();
  std::vector<Crossing> out;
  out.reserve(static_cast<std::size_t>(mu.size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (std::abs(mu[i]) <= 1e-13 * scale) {
      std::ostringstream os;
      os << "Birman-Schwinger kernel is singular on supp u at E = " << energy;
      throw PreconditionError(os.str());
    }
    Crossing c;
    c.omega = -1.0 / mu[i];
    c.vector = Eigen::VectorXd::Zero(dim_);
    for (std::size_t r = 0; r < support_.size(); ++r)
      c.vector[support_[r]] = solver.eigenvectors()(static_cast<Eigen::Index>(r), i) / std::sqrt(cell_volume_);
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.omega < b.omega; });
  return out;
}

double BirmanSchwinger::support_norm_sq(const Eigen::VectorXd& phi) const {
  double s = 0.0;
  for (auto i : support_) s += phi[i] * phi[i];
  return cell_volume_ * s;
}

double BirmanSchwinger::weight(const Crossing& c, const Eigen::VectorXd& phi) const {
  const double p = cell_volume_ * c.vector.dot(phi);
  return p * p;
}

std::vector<BirmanSchwinger::Crossing> birman_schwinger_crossings(const Eigen::MatrixXd& h0,
                                                                  const Eigen::VectorXd& u,
                                                                  double energy, double cell_volume) {
  return BirmanSchwinger(h0, u, cell_volume).crossings(energy);
}

}  // namespace speclab
