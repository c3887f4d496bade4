#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "speclab/cli.hpp"
#include "speclab/cube_basis.hpp"
#include "speclab/errors.hpp"

namespace speclab {

namespace {

using nlohmann::json;

/// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(raw(key), where(key));
  }

  template <class T>
  std::optional<T> maybe(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(raw(key), where(key));
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError("unknown configuration key '" + where(key) + "'");
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t> ||
                    std::is_same_v<T, unsigned>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
          throw ConfigError(where + " must be a nonnegative integer");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where + " must be a number");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(Section::convert<double>(x, where));
  return out;
}

std::vector<int> int_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be a list of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(Section::convert<int>(x, where));
  return out;
}

std::pair<double, double> interval_of(const json& v, const std::string& where) {
  const auto xs = number_list(v, where);
  if (xs.size() != 2 || !(xs[0] <= xs[1])) throw ConfigError(where + " must be [a, b] with a <= b");
  return {xs[0], xs[1]};
}

BoxDomain parse_domain(Section& s, const BoxDomain& fallback) {
  BoxDomain d = fallback;
  d.d = s.get<int>("d", d.d);
  d.L = s.get<int>("L", d.L);
  d.m = s.get<int>("m", d.m);
  if (auto bc = s.maybe<std::string>("bc")) d.bc = parse_boundary(*bc);
  return d;
}

std::vector<DomainCase> parse_cases(const json& v, const std::string& where, const BoxDomain& fallback,
                                    bool with_energies) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a nonempty list");
  std::vector<DomainCase> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Section s(v[i], where + "[" + std::to_string(i) + "]");
    DomainCase c;
    c.domain = parse_domain(s, fallback);
    c.realizations = s.get<std::size_t>("realizations", 0);
    if (with_energies && s.has("energies")) c.energies = number_list(s.raw("energies"), s.where("energies"));
    s.finish();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<double> default_lipschitz_grid(const BoxDomain& domain, double epsilon) {
  const double top = energy_threshold(domain.d, LevelScale::discrete(domain.m)) - epsilon;
  std::vector<double> grid;
  for (int i = 0; i < 5; ++i) grid.push_back(0.9 * top * i / 4.0);
  return grid;
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.dos.domain = BoxDomain{1, 4, 8, Boundary::Dirichlet};
  c.dos.site = SingleSite::characteristic(1.0, c.dos.domain);
  c.dos.master_seed = 2024;
  c.trace_bound.domains = {{c.dos.domain, 200, {}}};
  c.lipschitz.domains = {{c.dos.domain, 0, {0.0, 0.05, 0.1, 0.15, 0.2}}};
  return c;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c = default_config();
  Section top(j, "");
  c.suite = top.get<std::string>("suite", c.suite);

  if (top.has("domain")) {
    Section s(top.raw("domain"), "domain");
    c.dos.domain = parse_domain(s, c.dos.domain);
    s.finish();
  }
  c.dos.domain.validate();

  double kappa = 1.0;
  std::optional<Eigen::VectorXd> profile;
  if (top.has("site")) {
    Section s(top.raw("site"), "site");
    kappa = s.get<double>("kappa", kappa);
    if (s.has("profile")) {
      const json& p = s.raw("profile");
      if (p.is_string()) {
        if (p.get<std::string>() != "characteristic")
          throw ConfigError("site.profile must be \"characteristic\" or a list of samples");
      } else {
        const auto xs = number_list(p, "site.profile");
        profile = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
      }
    }
    s.finish();
  }
  c.dos.site = SingleSite::characteristic(kappa, c.dos.domain);
  if (profile) c.dos.site.profile = *profile;

  if (top.has("distribution")) {
    const json& v = top.raw("distribution");
    if (v.is_string()) {
      if (v.get<std::string>() != "uniform") throw ConfigError("distribution must be \"uniform\" or a density table");
      c.dos.dist = UniformUnit{};
    } else {
      Section s(v, "distribution");
      DensityTable t;
      t.lo = s.get<double>("lo", 0.0);
      t.hi = s.get<double>("hi", 1.0);
      if (!s.has("weights")) throw ConfigError("distribution.weights is required for a density table");
      t.weights = number_list(s.raw("weights"), "distribution.weights");
      s.finish();
      c.dos.dist = t;
    }
  }
  c.dos.master_seed = top.get<std::uint64_t>("master_seed", c.dos.master_seed);
  c.n_samples = top.get<std::size_t>("n_samples", c.n_samples);
  c.workers = top.maybe<unsigned>("workers");
  if (auto out = top.maybe<std::string>("output_dir")) c.output_dir = *out;

  // Defaults that follow the primary domain.
  c.trace_bound.domains = {{c.dos.domain, 200, {}}};
  c.lipschitz.domains = {{c.dos.domain, 0, default_lipschitz_grid(c.dos.domain, c.lipschitz.epsilon)}};

  if (top.has("trace_bound")) {
    Section s(top.raw("trace_bound"), "trace_bound");
    auto& p = c.trace_bound;
    if (s.has("domains")) p.domains = parse_cases(s.raw("domains"), "trace_bound.domains", c.dos.domain, false);
    for (auto& dc : p.domains)
      if (dc.realizations == 0) dc.realizations = 200;
    if (s.has("levels")) p.levels = int_list(s.raw("levels"), "trace_bound.levels");
    p.b_fraction = s.get<double>("b_fraction", p.b_fraction);
    p.boundary_instances = s.get<std::size_t>("boundary_instances", p.boundary_instances);
    p.poincare_vectors = s.get<std::size_t>("poincare_vectors", p.poincare_vectors);
    p.mass_realizations = s.get<std::size_t>("mass_realizations", p.mass_realizations);
    if (s.has("mass_kappas")) p.mass_kappas = number_list(s.raw("mass_kappas"), "trace_bound.mass_kappas");
    s.finish();
  }
  if (top.has("spectral_averaging")) {
    Section s(top.raw("spectral_averaging"), "spectral_averaging");
    auto& p = c.spectral_averaging;
    p.size = s.get<int>("size", p.size);
    p.rank = s.get<int>("rank", p.rank);
    p.instances = s.get<std::size_t>("instances", p.instances);
    p.windows = s.get<std::size_t>("windows", p.windows);
    p.trials_per_window = s.get<std::size_t>("trials_per_window", p.trials_per_window);
    p.bound_slack = s.get<double>("bound_slack", p.bound_slack);
    p.route_tolerance = s.get<double>("route_tolerance", p.route_tolerance);
    p.full_line_trials = s.get<std::size_t>("full_line_trials", p.full_line_trials);
    p.full_line_tolerance = s.get<double>("full_line_tolerance", p.full_line_tolerance);
    p.fh_instances = s.get<std::size_t>("fh_instances", p.fh_instances);
    s.finish();
  }
  if (top.has("ssf")) {
    Section s(top.raw("ssf"), "ssf");
    auto& p = c.ssf;
    p.size = s.get<int>("size", p.size);
    p.rank = s.get<int>("rank", p.rank);
    p.instances = s.get<std::size_t>("instances", p.instances);
    p.triples_per_instance = s.get<std::size_t>("triples_per_instance", p.triples_per_instance);
    p.physical_instances = s.get<std::size_t>("physical_instances", p.physical_instances);
    p.bound_triples = s.get<std::size_t>("bound_triples", p.bound_triples);
    if (s.has("epsilons")) p.epsilons = number_list(s.raw("epsilons"), "ssf.epsilons");
    s.finish();
  }
  if (top.has("wegner")) {
    Section s(top.raw("wegner"), "wegner");
    auto& p = c.wegner;
    if (s.has("interval")) std::tie(p.a, p.b) = interval_of(s.raw("interval"), "wegner.interval");
    p.n = s.get<int>("n", p.n);
    if (s.has("kappas")) p.kappas = number_list(s.raw("kappas"), "wegner.kappas");
    if (s.has("ldos_energies")) p.ldos_energies = number_list(s.raw("ldos_energies"), "wegner.ldos_energies");
    p.epsilon = s.get<double>("epsilon", p.epsilon);
    if (s.has("ladder")) p.ladder = number_list(s.raw("ladder"), "wegner.ladder");
    s.finish();
  }
  if (top.has("lipschitz")) {
    Section s(top.raw("lipschitz"), "lipschitz");
    auto& p = c.lipschitz;
    p.epsilon = s.get<double>("epsilon", p.epsilon);
    if (s.has("domains")) {
      p.domains = parse_cases(s.raw("domains"), "lipschitz.domains", c.dos.domain, true);
    } else {
      p.domains = {{c.dos.domain, 0, default_lipschitz_grid(c.dos.domain, p.epsilon)}};
    }
    for (auto& dc : p.domains)
      if (dc.energies.empty()) dc.energies = default_lipschitz_grid(dc.domain, p.epsilon);
    if (s.has("extra_kappas")) p.extra_kappas = number_list(s.raw("extra_kappas"), "lipschitz.extra_kappas");
    s.finish();
  }
  if (top.has("fixed_site")) {
    Section s(top.raw("fixed_site"), "fixed_site");
    auto& p = c.fixed_site;
    p.site = s.maybe<std::size_t>("site");
    if (s.has("taus")) p.taus = number_list(s.raw("taus"), "fixed_site.taus");
    if (s.has("interval")) std::tie(p.a, p.b) = interval_of(s.raw("interval"), "fixed_site.interval");
    if (s.has("chain")) std::tie(p.chain_e1, p.chain_e2) = interval_of(s.raw("chain"), "fixed_site.chain");
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open configuration file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration file " + file.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

std::vector<std::string> ExperimentConfig::selected() const {
  if (suite == "all") return suite_names();
  return {suite};
}

void ExperimentConfig::validate() const {
  const auto& names = suite_names();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw ConfigError("unknown suite '" + suite + "'");
  dos.validate();
  if (workers && *workers == 0) throw ConfigError("workers must be positive");
  if (n_samples < 2) throw ConfigError("n_samples must be at least 2");
  const auto sel = selected();
  auto on = [&](const std::string& s) { return std::find(sel.begin(), sel.end(), s) != sel.end(); };

  if (on("trace_bound")) {
    for (const auto& dc : trace_bound.domains) {
      dc.domain.validate();
      for (int n : trace_bound.levels)
        if (n < 0 || n + 1 >= dc.domain.m)
          throw ConfigError("trace_bound.levels: n = " + std::to_string(n) + " needs n + 1 < m = " +
                            std::to_string(dc.domain.m));
    }
    if (!(trace_bound.b_fraction > 0.0 && trace_bound.b_fraction < 1.0))
      throw ConfigError("trace_bound.b_fraction must lie in (0, 1) so that b < lambda_{n+1}");
    for (double k : trace_bound.mass_kappas) require_positive(k, "trace_bound.mass_kappas");
  }
  if (on("spectral_averaging")) {
    const auto& p = spectral_averaging;
    if (p.size < 1 || p.rank < 1 || p.rank > p.size) throw ConfigError("spectral_averaging needs 1 <= rank <= size");
    require_positive(p.bound_slack, "spectral_averaging.bound_slack");
    require_positive(p.route_tolerance, "spectral_averaging.route_tolerance");
    require_positive(p.full_line_tolerance, "spectral_averaging.full_line_tolerance");
  }
  if (on("ssf")) {
    if (ssf.size < 1 || ssf.rank < 1 || ssf.rank > ssf.size) throw ConfigError("ssf needs 1 <= rank <= size");
    if (ssf.epsilons.size() < 2) throw ConfigError("ssf.epsilons needs at least two entries");
    for (double e : ssf.epsilons) require_positive(e, "ssf.epsilons entries");
  }
  if (on("wegner")) {
    for (double k : wegner.kappas) {
      if (!(k > 0.0 && k <= 1.0)) throw ConfigError("wegner.kappas entries must lie in (0, 1]");
      for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dos.domain.m)})
        wegner_constant(wegner.b, wegner.n, k, density_sup(dos.dist), scale);
    }
    require_positive(wegner.epsilon, "wegner.epsilon");
    for (double e : wegner.ladder) require_positive(e, "wegner.ladder entries");
    if (!wegner.kappas.empty())
      for (double e : wegner.ldos_energies)
        wegner_constant(e + wegner.epsilon, wegner.n, wegner.kappas.front(), density_sup(dos.dist),
                        LevelScale::discrete(dos.domain.m));
  }
  if (on("lipschitz")) {
    if (!dos.covering())
      throw ConfigError("lipschitz suite needs a characteristic profile and the uniform [0,1] distribution");
    require_positive(lipschitz.epsilon, "lipschitz.epsilon");
    for (const auto& dc : lipschitz.domains) {
      dc.domain.validate();
      if (dc.energies.size() < 2) throw ConfigError("lipschitz energy grids need at least two points");
      const double top = *std::max_element(dc.energies.begin(), dc.energies.end()) + lipschitz.epsilon;
      if (*std::min_element(dc.energies.begin(), dc.energies.end()) < 0.0)
        throw ConfigError("lipschitz energies must be nonnegative");
      for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dc.domain.m)}) {
        const double e0 = energy_threshold(dc.domain.d, scale);
        if (!(top < e0)) {
          std::ostringstream os;
          os << "lipschitz: E2 + eps = " << top << " must stay below E0(" << dc.domain.d << ") = " << e0 << " ("
             << scale.name() << " levels)";
          throw DomainError(os.str());
        }
      }
    }
    for (double k : lipschitz.extra_kappas)
      if (!(k > 0.0 && k <= 1.0)) throw ConfigError("lipschitz.extra_kappas entries must lie in (0, 1]");
  }
  if (on("fixed_site")) {
    if (dos.domain.bc != Boundary::Dirichlet) throw ConfigError("fixed_site suite needs Dirichlet boundary conditions");
    if (fixed_site.site && *fixed_site.site >= dos.domain.cube_count())
      throw ConfigError("fixed_site.site lies outside the box");
    for (double t : fixed_site.taus)
      if (!(t >= 0.0)) throw ConfigError("fixed_site.taus entries must be nonnegative");
    if (!(dos.site.kappa > 0.0)) throw DomainError("fixed_site suite needs kappa > 0");
    for (const LevelScale& scale : {LevelScale::continuum(), LevelScale::discrete(dos.domain.m)}) {
      trace_constant(fixed_site.b, dos.domain.d, scale);
      trace_constant(fixed_site.chain_e2, dos.domain.d, scale);
    }
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["suite"] = suite;
  j["domain"] = {{"d", dos.domain.d}, {"L", dos.domain.L}, {"m", dos.domain.m},
                 {"bc", std::string(to_string(dos.domain.bc))}};
  j["site"] = {{"kappa", dos.site.kappa},
               {"profile", dos.site.is_characteristic()
                               ? json("characteristic")
                               : json(std::vector<double>(dos.site.profile.data(),
                                                          dos.site.profile.data() + dos.site.profile.size()))}};
  if (const auto* t = std::get_if<DensityTable>(&dos.dist))
    j["distribution"] = {{"lo", t->lo}, {"hi", t->hi}, {"weights", t->weights}};
  else
    j["distribution"] = "uniform";
  j["master_seed"] = dos.master_seed;
  j["n_samples"] = n_samples;
  j["output_dir"] = output_dir.string();

  auto cases = [](const std::vector<DomainCase>& cs, bool energies) {
    json out = json::array();
    for (const auto& c : cs) {
      json e = {{"d", c.domain.d}, {"L", c.domain.L}, {"m", c.domain.m}, {"bc", std::string(to_string(c.domain.bc))}};
      if (energies)
        e["energies"] = c.energies;
      else
        e["realizations"] = c.realizations;
      out.push_back(e);
    }
    return out;
  };
  const auto& t = trace_bound;
  j["trace_bound"] = {{"domains", cases(t.domains, false)},
                      {"levels", t.levels},
                      {"b_fraction", t.b_fraction},
                      {"boundary_instances", t.boundary_instances},
                      {"poincare_vectors", t.poincare_vectors},
                      {"mass_realizations", t.mass_realizations},
                      {"mass_kappas", t.mass_kappas}};
  const auto& a = spectral_averaging;
  j["spectral_averaging"] = {{"size", a.size},
                             {"rank", a.rank},
                             {"instances", a.instances},
                             {"windows", a.windows},
                             {"trials_per_window", a.trials_per_window},
                             {"bound_slack", a.bound_slack},
                             {"route_tolerance", a.route_tolerance},
                             {"full_line_trials", a.full_line_trials},
                             {"full_line_tolerance", a.full_line_tolerance},
                             {"fh_instances", a.fh_instances}};
  j["ssf"] = {{"size", ssf.size},
              {"rank", ssf.rank},
              {"instances", ssf.instances},
              {"triples_per_instance", ssf.triples_per_instance},
              {"physical_instances", ssf.physical_instances},
              {"bound_triples", ssf.bound_triples},
              {"epsilons", ssf.epsilons}};
  j["wegner"] = {{"interval", {wegner.a, wegner.b}},
                 {"n", wegner.n},
                 {"kappas", wegner.kappas},
                 {"ldos_energies", wegner.ldos_energies},
                 {"epsilon", wegner.epsilon},
                 {"ladder", wegner.ladder}};
  j["lipschitz"] = {{"epsilon", lipschitz.epsilon},
                    {"domains", cases(lipschitz.domains, true)},
                    {"extra_kappas", lipschitz.extra_kappas}};
  j["fixed_site"] = {{"taus", fixed_site.taus},
                     {"interval", {fixed_site.a, fixed_site.b}},
                     {"chain", {fixed_site.chain_e1, fixed_site.chain_e2}}};
  if (fixed_site.site) j["fixed_site"]["site"] = *fixed_site.site;
  return j;
}

}  // namespace speclab
