#include "pglab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pglab {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>& bad) : j_(j), path_(std::move(path)), bad_(bad) {
    if (!j_.is_object()) bad_.push_back(path_.empty() ? "<root>" : path_);
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    const json* v = raw(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw std::invalid_argument("number expected");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v->is_number_integer() && !v->is_number_unsigned()) throw std::invalid_argument("integer expected");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("boolean expected");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw std::invalid_argument("string expected");
      }
      out = v->get<T>();
    } catch (const std::exception&) {
      bad_.push_back(key_path(key));
    }
  }

  /// Scalar or [v0, v1] pair.
  void get_pair(const char* key, double& a, double& b) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_number()) {
      a = b = v->get<double>();
    } else if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number()) {
      a = (*v)[0].get<double>();
      b = (*v)[1].get<double>();
    } else {
      bad_.push_back(key_path(key));
    }
  }

  void finish() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) bad_.push_back(key_path(it.key()));
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void fail(const std::string& key) { bad_.push_back(key_path(key)); }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& bad_;
  std::set<std::string> seen_;
};

template <class E>
bool pick(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, E& out) {
  for (const auto& [name, value] : table)
    if (s == name) {
      out = value;
      return true;
    }
  return false;
}

MethodConfig method_iid() {
  MethodConfig m;
  m.name = "iid";
  return m;
}

MethodConfig method_pg_rbf() {
  MethodConfig m;
  m.name = "pg_rbf";
  m.sampler = "pg";
  m.potential.kernel = KernelKind::RbfEuclidean;
  m.potential.alpha0 = 300.0;
  m.potential.alpha1 = 10.0;
  m.potential.rule = BandwidthRule::LogInterp;
  m.potential.h0 = 0.02;
  m.potential.h1 = 1.0;
  return m;
}

MethodConfig method_pg_radial() {
  MethodConfig m;
  m.name = "pg_radial";
  m.sampler = "pg";
  m.guidance.mode = Mode::ODE;
  m.guidance.beta0 = m.guidance.beta1 = 0.0;
  m.potential.kernel = KernelKind::RbfRadial;
  m.potential.alpha0 = 30.0;
  m.potential.alpha1 = 3.0;
  m.potential.rule = BandwidthRule::LogInterp;
  m.potential.h0 = 0.02;
  m.potential.h1 = 1.0;
  return m;
}

void apply_kind_defaults(ExperimentConfig& c) {
  if (c.kind == "ring_modes" || c.kind == "sweep") {
    c.methods = {method_iid(), method_pg_rbf(), method_pg_radial()};
    if (c.kind == "sweep") {
      c.sweep.methods = {"pg_rbf"};
      c.sweep.param = "alpha0";
      c.sweep.values = {1, 10, 30, 100, 300};
    }
  } else if (c.kind == "svgd_compare") {
    MethodConfig s;
    s.name = "svgd";
    s.sampler = "svgd";
    s.svgd.iters = 500;
    s.svgd.step_size = 0.002;
    s.init_scale = 3.0;
    c.methods = {method_iid(), s, method_pg_rbf()};
  } else if (c.kind == "torus_coverage") {
    c.target.type = "torus_mixture";
    c.target.variance = 0.05;
    const double a = 2.0;
    for (double x : {-a, a})
      for (double y : {-a, a}) {
        Vec m(2);
        m << x, y;
        c.target.components.push_back({0.25, m, 0.05});
      }
    MethodConfig t;
    t.name = "pg_torus";
    t.sampler = "pg";
    t.potential.kernel = KernelKind::RbfTorus;
    t.potential.alpha0 = 10.0;
    t.potential.alpha1 = 1.0;
    t.potential.rule = BandwidthRule::LogInterp;
    t.potential.h0 = 0.1;
    t.potential.h1 = 2.0;
    MethodConfig p = t;
    p.name = "pg_perm";
    p.potential.kernel = KernelKind::PermInvariantTorus;
    p.potential.perm_set = {{0, 1}, {1, 0}};
    c.n = 4;
    c.methods = {method_iid(), t, p};
  } else if (c.kind == "pfgm_demo") {
    c.target.type = "gmm";
    Vec a(2), b(2);
    a << -1.5, 0.0;
    b << 1.5, 0.0;
    c.target.components = {{0.8, a, 0.05}, {0.2, b, 0.05}};
    c.n = 8;
    MethodConfig p;
    p.name = "pfgm";
    p.sampler = "pfgm";
    p.pfgm.D = 2;
    p.pfgm.repulsion = 0.0;
    MethodConfig q = p;
    q.name = "pfgm_pg";
    q.pfgm.repulsion = 0.1;
    c.methods = {p, q};
  } else if (c.kind == "marginal_table") {
    c.target.type = "hex_center";
    c.target.variance = 0.01;
    c.n = 10;
    c.methods.clear();
  } else if (c.kind == "fk_validation") {
    c.target.type = "bimodal_1d";
    c.target.offset = 1.0;
    c.target.variance = 0.2;
    c.n = 2;
    c.methods.clear();
  }
}

void parse_target(const json& j, TargetConfig& t, std::vector<std::string>& bad) {
  Reader r(j, "target", bad);
  r.get("type", t.type);
  r.get("modes", t.modes);
  r.get("radius", t.radius);
  r.get("variance", t.variance);
  r.get("offset", t.offset);
  r.get("wrap_order", t.wrap_order);
  r.get("threshold_sigmas", t.threshold_sigmas);
  if (const json* comps = r.raw("components")) {
    t.components.clear();
    if (!comps->is_array()) {
      r.fail("components");
    } else {
      for (std::size_t k = 0; k < comps->size(); ++k) {
        Reader c((*comps)[k], "target.components[" + std::to_string(k) + "]", bad);
        Component comp{1.0, Vec(), t.variance};
        c.get("weight", comp.weight);
        c.get("variance", comp.variance);
        if (const json* m = c.raw("mean")) {
          if (m->is_array()) {
            comp.mean.resize(static_cast<Eigen::Index>(m->size()));
            for (std::size_t q = 0; q < m->size(); ++q) {
              if ((*m)[q].is_number())
                comp.mean[static_cast<Eigen::Index>(q)] = (*m)[q].get<double>();
              else
                c.fail("mean");
            }
          } else {
            c.fail("mean");
          }
        } else {
          c.fail("mean");
        }
        c.finish();
        t.components.push_back(comp);
      }
    }
  }
  r.finish();
  static const std::set<std::string> types{"ring", "hex_center", "bimodal_1d", "gmm", "torus_mixture"};
  if (!types.count(t.type)) bad.push_back("target.type");
}

void parse_method(const json& j, MethodConfig& m, const std::string& path, std::vector<std::string>& bad) {
  Reader r(j, path, bad);
  r.get("name", m.name);
  r.get("sampler", m.sampler);
  static const std::set<std::string> samplers{"iid", "pg", "low_temp", "metadynamics", "svgd", "pfgm"};
  if (!samplers.count(m.sampler)) r.fail("sampler");
  r.get("steps", m.guidance.steps);
  std::string s;
  if (r.has("mode")) {
    r.get("mode", s);
    if (!pick<Mode>(s, {{"sde", Mode::SDE}, {"ode", Mode::ODE}}, m.guidance.mode)) r.fail("mode");
    if (m.guidance.mode == Mode::ODE && !r.has("beta")) m.guidance.beta0 = m.guidance.beta1 = 0.0;
  }
  if (r.has("integrator")) {
    r.get("integrator", s);
    if (!pick<Integrator>(s, {{"euler", Integrator::Euler}, {"heun", Integrator::Heun}}, m.guidance.integrator))
      r.fail("integrator");
  }
  if (r.has("prior")) {
    r.get("prior", s);
    if (!pick<PriorKind>(s, {{"standard", PriorKind::Standard}, {"exact", PriorKind::Exact}}, m.guidance.prior))
      r.fail("prior");
  }
  r.get_pair("beta", m.guidance.beta0, m.guidance.beta1);
  r.get_pair("gamma", m.guidance.gamma0, m.guidance.gamma1);
  if (r.has("kernel")) {
    r.get("kernel", s);
    if (!pick<KernelKind>(s,
                          {{"rbf", KernelKind::RbfEuclidean},
                           {"rbf_radial", KernelKind::RbfRadial},
                           {"rbf_torus", KernelKind::RbfTorus},
                           {"perm_torus", KernelKind::PermInvariantTorus}},
                          m.potential.kernel))
      r.fail("kernel");
  }
  r.get_pair("alpha", m.potential.alpha0, m.potential.alpha1);
  if (const json* bw = r.raw("bandwidth")) {
    Reader b(*bw, r.key_path("bandwidth"), bad);
    if (b.has("rule")) {
      b.get("rule", s);
      if (!pick<BandwidthRule>(s,
                               {{"sigma_sq", BandwidthRule::SigmaSq},
                                {"median", BandwidthRule::MedianHeuristic},
                                {"fixed", BandwidthRule::Fixed},
                                {"log_interp", BandwidthRule::LogInterp}},
                               m.potential.rule))
        b.fail("rule");
    }
    b.get_pair("h", m.potential.h0, m.potential.h1);
    b.finish();
    m.svgd.rule = m.potential.rule == BandwidthRule::Fixed ? BandwidthRule::Fixed : BandwidthRule::MedianHeuristic;
    m.svgd.h = m.potential.h0;
  }
  if (r.has("normalization")) {
    r.get("normalization", s);
    if (!pick<Normalization>(s, {{"none", Normalization::None}, {"over_n", Normalization::OverN}},
                             m.potential.normalization))
      r.fail("normalization");
  }
  if (const json* perms = r.raw("perms")) {
    try {
      m.potential.perm_set = perms->get<std::vector<Permutation>>();
    } catch (const std::exception&) {
      r.fail("perms");
    }
  }
  r.get("perm_cap", m.potential.perm_cap);
  r.get("lambda", m.low_temp.lambda);
  r.get("psi", m.low_temp.psi);
  r.get("sigma_d", m.low_temp.sigma_d);
  r.get("omega", m.meta.omega);
  r.get("sigma_meta", m.meta.sigma_meta);
  if (r.has("cv")) {
    r.get("cv", s);
    if (!pick<CollectiveVariable>(s, {{"identity", CollectiveVariable::Identity}, {"angle", CollectiveVariable::Angle}},
                                  m.meta.cv))
      r.fail("cv");
  }
  r.get("iters", m.svgd.iters);
  r.get("step_size", m.svgd.step_size);
  r.get("sigma_floor", m.svgd.sigma_floor);
  r.get("anneal", m.svgd.anneal);
  r.get("init_scale", m.init_scale);
  r.get("D", m.pfgm.D);
  r.get("repulsion", m.pfgm.repulsion);
  r.get("r_min", m.pfgm.r_min);
  r.get("dataset_size", m.dataset_size);
  r.finish();
  if (m.name.empty()) bad.push_back(path + ".name");
  if (m.guidance.steps < 1) bad.push_back(path + ".steps");
}

}  // namespace

MixtureTarget TargetConfig::build() const {
  MixtureTarget t;
  if (type == "ring") {
    t = ring_mixture(modes, radius, variance);
  } else if (type == "hex_center") {
    t = hex_center_mixture(variance);
  } else if (type == "bimodal_1d") {
    t = bimodal_1d(offset, variance);
  } else if (type == "gmm") {
    t.components = components;
  } else if (type == "torus_mixture") {
    t = wrapped_mixture(components, wrap_order);
  } else {
    throw ConfigError("unknown target type", {"target.type"});
  }
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid target: ") + e.what(), {"target"});
  }
  return t;
}

double TargetConfig::threshold() const {
  double v = variance;
  if (!components.empty() && (type == "gmm" || type == "torus_mixture")) v = components.front().variance;
  return threshold_sigmas * std::sqrt(v);
}

void apply_param(MethodConfig& m, const std::string& param, double value) {
  if (param == "alpha0") m.potential.alpha0 = value;
  else if (param == "alpha1") m.potential.alpha1 = value;
  else if (param == "alpha") m.potential.alpha0 = m.potential.alpha1 = value;
  else if (param == "h0") m.potential.h0 = value;
  else if (param == "h1") m.potential.h1 = value;
  else if (param == "omega") m.meta.omega = value;
  else if (param == "lambda") m.low_temp.lambda = value;
  else if (param == "repulsion") m.pfgm.repulsion = value;
  else if (param == "steps") m.guidance.steps = static_cast<int>(value);
  else throw ConfigError("unknown sweep parameter", {"sweep.param"});
}

ExperimentConfig parse_config(const json& doc) {
  std::vector<std::string> bad;
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object", {"<root>"});
  if (doc.contains("kind") && doc.at("kind").is_string()) c.kind = doc.at("kind").get<std::string>();
  static const std::set<std::string> kinds{"ring_modes", "marginal_table", "fk_validation", "svgd_compare",
                                           "torus_coverage", "pfgm_demo", "sweep"};
  if (!kinds.count(c.kind)) throw ConfigError("unknown experiment kind '" + c.kind + "'", {"kind"});
  apply_kind_defaults(c);

  Reader r(doc, "", bad);
  r.get("kind", c.kind);
  r.get("seed", c.seed);
  r.get("trials", c.trials);
  r.get("n", c.n);
  r.get("threads", c.threads);
  r.get("csv_rows", c.csv_rows);
  r.get("coverage_trials", c.coverage_trials);
  r.get("plot_sets", c.plot_sets);
  if (const json* s = r.raw("schedule")) {
    Reader q(*s, "schedule", bad);
    q.get("sigma_min", c.schedule.sigma_min);
    q.get("sigma_max", c.schedule.sigma_max);
    q.get("T", c.schedule.T);
    q.finish();
  }
  if (const json* t = r.raw("target")) parse_target(*t, c.target, bad);
  if (const json* ms = r.raw("methods")) {
    c.methods.clear();
    if (!ms->is_array()) {
      r.fail("methods");
    } else {
      for (std::size_t k = 0; k < ms->size(); ++k) {
        MethodConfig m;
        parse_method((*ms)[k], m, "methods[" + std::to_string(k) + "]", bad);
        c.methods.push_back(m);
      }
    }
  }
  if (const json* s = r.raw("sweep")) {
    Reader q(*s, "sweep", bad);
    if (const json* v = q.raw("methods")) {
      try {
        c.sweep.methods = v->get<std::vector<std::string>>();
      } catch (const std::exception&) {
        q.fail("methods");
      }
    }
    q.get("param", c.sweep.param);
    if (const json* v = q.raw("values")) {
      try {
        c.sweep.values = v->get<std::vector<double>>();
      } catch (const std::exception&) {
        q.fail("values");
      }
    }
    q.finish();
  }
  if (const json* f = r.raw("fk")) {
    Reader q(*f, "fk", bad);
    q.get("paths", c.fk.paths);
    q.get("sampler_runs", c.fk.sampler_runs);
    q.get("steps", c.fk.steps);
    q.get("grid_lo", c.fk.grid_lo);
    q.get("grid_step", c.fk.grid_step);
    q.get("grid_points", c.fk.grid_points);
    q.get_pair("alpha", c.fk.alpha0, c.fk.alpha1);
    q.get("h", c.fk.h);
    q.get("check_points", c.fk.check_points);
    q.get("check_paths", c.fk.check_paths);
    q.finish();
  }
  if (const json* f = r.raw("table")) {
    Reader q(*f, "table", bad);
    q.get("pool_size", c.table.pool_size);
    q.get("sets", c.table.sets);
    q.get("alpha", c.table.alpha);
    q.get("h", c.table.h);
    q.get("grid_lo", c.table.grid_lo);
    q.get("grid_hi", c.table.grid_hi);
    q.get("grid", c.table.grid);
    q.get("batches", c.table.batches);
    q.get("sets_per_batch", c.table.sets_per_batch);
    q.get("lr", c.table.lr);
    q.finish();
  }
  if (const json* f = r.raw("measure")) {
    Reader q(*f, "measure", bad);
    q.get("alpha", c.measure.alpha);
    q.get("h", c.measure.h);
    q.finish();
  }
  r.finish();

  if (c.trials < 1) bad.push_back("trials");
  if (c.n < 1) bad.push_back("n");
  if (c.csv_rows < 0) bad.push_back("csv_rows");
  std::set<std::string> names;
  for (const MethodConfig& m : c.methods)
    if (!names.insert(m.name).second) bad.push_back("methods(" + m.name + ")");
  if (c.kind == "sweep") {
    if (c.sweep.values.empty()) bad.push_back("sweep.values");
    if (c.sweep.methods.empty()) bad.push_back("sweep.methods");
    for (const std::string& m : c.sweep.methods)
      if (!names.count(m)) bad.push_back("sweep.methods(" + m + ")");
    static const std::set<std::string> params{"alpha0", "alpha1", "alpha", "h0", "h1", "omega", "lambda", "repulsion", "steps"};
    if (!params.count(c.sweep.param)) bad.push_back("sweep.param");
  }
  try {
    c.schedule.validate();
  } catch (const std::exception&) {
    bad.push_back("schedule");
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "invalid configuration keys:";
    for (const std::string& k : bad) os << ' ' << k;
    throw ConfigError(os.str(), bad);
  }
  c.target.build();
  c.echo = doc;
  c.echo.erase("threads");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path, {path});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what(), {path});
  }
  return parse_config(doc);
}

}  // namespace pglab
