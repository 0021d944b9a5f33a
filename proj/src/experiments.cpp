#include "pglab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pglab/parallel.hpp"
#include "pglab/svg.hpp"

namespace pglab {

using nlohmann::json;

namespace {

json summary_json(const Summary& s) {
  json j{{"mean", s.mean}, {"median", s.median}, {"count", s.count}};
  j["stderr"] = s.stderr_defined ? json(s.stderr_mean) : json(nullptr);
  return j;
}

std::vector<double> to_double(const std::vector<int>& v) { return std::vector<double>(v.begin(), v.end()); }

json sets_json(const std::vector<Mat>& sets) {
  json out = json::array();
  for (const Mat& x : sets) {
    json set = json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < x.cols(); ++k) row.push_back(x(i, k));
      set.push_back(row);
    }
    out.push_back(set);
  }
  return out;
}

json method_json(const MethodTrials& m) {
  json j;
  j["name"] = m.name;
  j["trials"] = m.modes.size();
  j["modes"] = m.modes;
  j["log_phi"] = m.log_phi;
  j["similarity"] = m.similarity;
  j["flagged"] = m.flagged;
  const std::vector<double> modes = to_double(m.modes);
  j["summary"] = {{"modes", summary_json(summarize(modes))},
                  {"log_phi", summary_json(summarize(m.log_phi))},
                  {"similarity", summary_json(summarize(m.similarity))}};
  return j;
}

void append_csv(std::string& csv, const MethodTrials& m, int n, std::uint64_t seed) {
  char buf[256];
  for (std::size_t k = 0; k < m.modes.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%d,%d,%.9g,%.9g,%llu\n", k, m.name.c_str(), n, m.modes[k], m.log_phi[k],
                  m.similarity[k], static_cast<unsigned long long>(seed));
    csv += buf;
  }
}

constexpr const char* kCsvHeader = "trial_id,method,n,modes,log_phi,similarity,seed\n";

Mat centers_of(const MixtureTarget& target) { return target.means(); }

json all_modes_fraction(const std::vector<int>& modes, int total) {
  if (modes.empty()) return 0.0;
  long hits = 0;
  for (int v : modes) hits += v == total;
  return static_cast<double>(hits) / static_cast<double>(modes.size());
}

MethodTrials evaluate_sets(const std::string& name, const std::vector<Mat>& sets, const ExperimentConfig& cfg,
                           const MixtureTarget& target) {
  MethodTrials m;
  m.name = name;
  const Mat centers = centers_of(target);
  const double thr = cfg.target.threshold();
  for (const Mat& x : sets) {
    m.modes.push_back(mode_coverage(x, centers, thr, target.space));
    m.log_phi.push_back(measured_log_phi(cfg, x));
    const SimilarityResult s = in_batch_similarity(x);
    m.similarity.push_back(s.value);
    m.flagged = m.flagged || s.excluded_pairs;
  }
  for (int k = 0; k < cfg.plot_sets && k < static_cast<int>(sets.size()); ++k) m.plot_sets.push_back(sets[k]);
  return m;
}

json base_report(const ExperimentConfig& cfg) {
  json r;
  r["schema"] = 1;
  r["version"] = kLibraryVersion;
  r["kind"] = cfg.kind;
  r["seed"] = cfg.seed;
  r["config"] = cfg.echo;
  r["target"] = {{"type", cfg.target.type}, {"threshold", cfg.target.threshold()}};
  json centers = json::array();
  const Mat c = cfg.target.build().means();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.cols(); ++k) row.push_back(c(i, k));
    centers.push_back(row);
  }
  r["target"]["centers"] = centers;
  return r;
}

void sets_experiment(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  const MixtureTarget target = cfg.target.build();
  json methods = json::array();
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const MethodConfig& method = cfg.methods[mi];
    MethodTrials m = run_trials(method, cfg, target, RngStream(cfg.seed, mi + 1), threads);
    json j = method_json(m);
    j["sampler"] = method.sampler;
    j["all_modes_fraction"] = all_modes_fraction(m.modes, static_cast<int>(target.components.size()));
    j["plot_sets"] = sets_json(m.plot_sets);
    if (cfg.coverage_trials > 0 && method.sampler == "iid") {
      std::vector<double> draws(static_cast<std::size_t>(cfg.coverage_trials));
      const Mat centers = centers_of(target);
      const RngStream base = RngStream(cfg.seed, mi + 1).child(1u << 30);
      parallel_for(draws.size(), threads, [&](std::size_t k) {
        RngStream rng = base.child(k);
        draws[k] = samples_to_coverage(target, centers, cfg.target.threshold(), method.guidance, cfg.schedule, rng);
      });
      j["samples_to_coverage"] = summary_json(summarize(draws));
    }
    methods.push_back(j);
    append_csv(out.csv, m, cfg.n, cfg.seed);
  }
  out.report["methods"] = methods;
}

void sweep_experiment(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  const MixtureTarget target = cfg.target.build();
  json methods = json::array();
  json series = json::array();
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const MethodConfig& method = cfg.methods[mi];
    const bool swept =
        std::find(cfg.sweep.methods.begin(), cfg.sweep.methods.end(), method.name) != cfg.sweep.methods.end();
    json line{{"method", method.name}, {"swept", swept}, {"values", json::array()}, {"mean", json::array()},
              {"stderr", json::array()}};
    const std::size_t count = swept ? cfg.sweep.values.size() : 1;
    for (std::size_t v = 0; v < count; ++v) {
      MethodConfig m = method;
      if (swept) {
        apply_param(m, cfg.sweep.param, cfg.sweep.values[v]);
        char buf[64];
        std::snprintf(buf, sizeof buf, "[%s=%.6g]", cfg.sweep.param.c_str(), cfg.sweep.values[v]);
        m.name += buf;
      }
      MethodTrials t = run_trials(m, cfg, target, RngStream(cfg.seed, mi + 1).child(v), threads);
      json j = method_json(t);
      j["all_modes_fraction"] = all_modes_fraction(t.modes, static_cast<int>(target.components.size()));
      if (swept) j["param_value"] = cfg.sweep.values[v];
      const Summary s = summarize(to_double(t.modes));
      line["values"].push_back(swept ? cfg.sweep.values[v] : 0.0);
      line["mean"].push_back(s.mean);
      line["stderr"].push_back(s.stderr_defined ? s.stderr_mean : 0.0);
      methods.push_back(j);
      append_csv(out.csv, t, cfg.n, cfg.seed);
    }
    series.push_back(line);
  }
  out.report["methods"] = methods;
  out.report["sweep"] = {{"param", cfg.sweep.param}, {"values", cfg.sweep.values}, {"series", series}};
}

/// Nearest-center cell histogram of every particle in the sets.
std::vector<double> cell_histogram(const std::vector<Mat>& sets, const Mat& centers) {
  std::vector<double> h(static_cast<std::size_t>(centers.rows()), 0.0);
  for (const Mat& x : sets)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
      h[static_cast<std::size_t>(best)] += 1.0;
    }
  return h;
}

void marginal_table(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  const MixtureTarget target = cfg.target.build();
  const TableConfig& tc = cfg.table;
  PotentialSpec spec;
  spec.alpha0 = spec.alpha1 = tc.alpha;
  spec.rule = BandwidthRule::Fixed;
  spec.h0 = tc.h;
  const NoiseSchedule sched = cfg.schedule;
  const LogPhiFn log_phi0 = [&](const Mat& x) { return log_phi(spec, x, 0.0, sched); };

  RngStream pool_rng(cfg.seed, 1), iid_rng(cfg.seed, 2), tilt_rng(cfg.seed, 3), gamma_rng(cfg.seed, 4),
      hat_rng(cfg.seed, 5);
  const std::vector<Mat> pool = iid_exact_sets(target, tc.pool_size, cfg.n, pool_rng);
  const std::vector<Mat> iid = iid_exact_sets(target, tc.sets, cfg.n, iid_rng);
  std::vector<double> lw(pool.size());
  parallel_for(pool.size(), threads, [&](std::size_t k) { lw[k] = log_phi0(pool[k]); });
  const ReweightResult tilt = resample_pool(pool, lw, tc.sets, tilt_rng);

  GammaTrainConfig gc;
  gc.batches = tc.batches;
  gc.sets_per_batch = tc.sets_per_batch;
  gc.lr = tc.lr;
  const GammaTrainResult trained =
      train_gamma(target, log_phi0, GammaGrid::zeros(tc.grid_lo, tc.grid_hi, tc.grid), gc, cfg.n, gamma_rng);
  std::vector<double> lw_hat(pool.size());
  parallel_for(pool.size(), threads,
               [&](std::size_t k) { lw_hat[k] = lw[k] + sum_log_gamma(trained.grid, pool[k]); });
  const ReweightResult hat = resample_pool(pool, lw_hat, tc.sets, hat_rng);

  const std::vector<std::pair<std::string, const std::vector<Mat>*>> rows{
      {"iid", &iid}, {"p_hat", &hat.sets}, {"p_tilde", &tilt.sets}};
  const Mat centers = centers_of(target);
  const std::vector<double> ref = cell_histogram(pool, centers);
  json methods = json::array();
  for (const auto& [name, sets] : rows) {
    MethodTrials m = evaluate_sets(name, *sets, cfg, target);
    json j = method_json(m);
    j["plot_sets"] = sets_json(m.plot_sets);
    j["marginal_tv"] = total_variation(cell_histogram(*sets, centers), ref);
    methods.push_back(j);
    append_csv(out.csv, m, cfg.n, cfg.seed);
  }
  out.report["methods"] = methods;
  out.report["table"] = {{"ess_p_tilde", tilt.ess},       {"low_ess_p_tilde", tilt.low_ess},
                         {"ess_p_hat", hat.ess},          {"low_ess_p_hat", hat.low_ess},
                         {"gamma_offset", trained.offset}, {"gamma_clamped", trained.clamped},
                         {"gamma_trace_last", trained.trace.empty() ? 0.0 : trained.trace.back()}};
}

void fk_validation(const ExperimentConfig& cfg, int threads, ExperimentOutput& out) {
  const MixtureTarget target = cfg.target.build();
  if (target.dim() != 1) throw ConfigError("fk_validation needs a one-dimensional target", {"target"});
  const FkConfig& fc = cfg.fk;
  PotentialSpec spec;
  spec.alpha0 = fc.alpha0;
  spec.alpha1 = fc.alpha1;
  spec.rule = BandwidthRule::Fixed;
  spec.h0 = fc.h;
  GuidanceConfig gcfg;
  gcfg.steps = fc.steps;
  gcfg.prior = PriorKind::Exact;
  const int G = fc.grid_points;
  std::vector<double> grid(static_cast<std::size_t>(G));
  for (int a = 0; a < G; ++a) grid[static_cast<std::size_t>(a)] = fc.grid_lo + a * fc.grid_step;

  const RngStream run_base(cfg.seed, 1);
  const std::size_t runs = static_cast<std::size_t>(fc.sampler_runs);
  std::vector<Mat> samples(runs);
  parallel_for(runs, threads, [&](std::size_t r) {
    RngStream rng = run_base.child(r);
    samples[r] = sample_pg(target, spec, 2, gcfg, cfg.schedule, rng).x;
  });
  std::vector<double> hist(static_cast<std::size_t>(G * G), 0.0);
  auto bin = [&](double v) { return static_cast<int>(std::floor((v - fc.grid_lo) / fc.grid_step + 0.5)); };
  for (const Mat& x : samples) {
    const int a = bin(x(0, 0)), b = bin(x(1, 0));
    if (a >= 0 && a < G && b >= 0 && b < G) hist[static_cast<std::size_t>(a * G + b)] += 1.0;
  }

  FkOptions opt;
  opt.num_paths = fc.paths;
  opt.steps = fc.steps;
  opt.threads = threads;
  const std::vector<FkEstimate> fk =
      feynman_kac_product_grid(target, &spec, grid, opt, cfg.schedule, RngStream(cfg.seed, 2));
  std::vector<double> fk_value(fk.size()), fk_se(fk.size()), product(fk.size());
  for (std::size_t c = 0; c < fk.size(); ++c) {
    fk_value[c] = fk[c].value;
    fk_se[c] = fk[c].stderr_value;
    product[c] = std::exp(mixture_log_density(target, Vec::Constant(1, grid[c / G]), 0.0) +
                          mixture_log_density(target, Vec::Constant(1, grid[c % G]), 0.0));
  }

  RngStream point_rng(cfg.seed, 3);
  std::vector<Mat> points;
  for (int k = 0; k < fc.check_points; ++k) {
    Mat x(2, 1);
    for (int i = 0; i < 2; ++i) x(i, 0) = sample_mixture(target, 0.0, point_rng)(0);
    points.push_back(x);
  }
  FkOptions copt = opt;
  copt.num_paths = fc.check_paths;
  const std::vector<FkEstimate> check =
      feynman_kac_density(target, nullptr, points, copt, cfg.schedule, RngStream(cfg.seed, 4));
  json check_rows = json::array();
  int within = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double exact = std::exp(mixture_log_density(target, points[k].row(0).transpose(), 0.0) +
                                  mixture_log_density(target, points[k].row(1).transpose(), 0.0));
    const double z = check[k].stderr_value > 0 ? (check[k].value - exact) / check[k].stderr_value : 0.0;
    within += std::abs(z) <= 3.0;
    check_rows.push_back({{"x1", points[k](0, 0)},
                          {"x2", points[k](1, 0)},
                          {"estimate", check[k].value},
                          {"stderr", check[k].stderr_value},
                          {"exact", exact},
                          {"z", z}});
  }

  const std::size_t kept = cfg.csv_rows > 0 ? std::min(runs, static_cast<std::size_t>(cfg.csv_rows)) : runs;
  std::vector<Mat> kept_sets(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(kept));
  MethodTrials m = evaluate_sets("pg", kept_sets, cfg, target);
  json j = method_json(m);
  j["plot_sets"] = json::array();
  out.report["methods"] = json::array({j});
  append_csv(out.csv, m, 2, cfg.seed);
  out.report["fk"] = {{"grid", grid},
                      {"fk", fk_value},
                      {"fk_stderr", fk_se},
                      {"histogram", hist},
                      {"product", product},
                      {"tv_fk_hist", total_variation(fk_value, hist)},
                      {"tv_product_hist", total_variation(product, hist)},
                      {"sampler_runs", runs},
                      {"paths", fc.paths},
                      {"check", check_rows},
                      {"check_within_3se", within}};
}

}  // namespace

ParticleSet run_method(const MethodConfig& method, const MixtureTarget& target, int n, const NoiseSchedule& schedule,
                       RngStream& rng) {
  const std::string& s = method.sampler;
  if (s == "iid") return sample_iid(target, n, method.guidance, schedule, rng);
  if (s == "pg") return sample_pg(target, method.potential, n, method.guidance, schedule, rng);
  if (s == "low_temp") return sample_low_temp(target, n, method.low_temp, method.guidance, schedule, rng);
  if (s == "metadynamics") return sample_metadynamics_seq(target, method.meta, n, method.guidance, schedule, rng);
  if (s == "svgd") return svgd_run(target, method.svgd, n, method.init_scale, rng);
  if (s == "pfgm") {
    RngStream data_rng = rng.child(1u << 30);
    Mat data(method.dataset_size, target.dim());
    for (int k = 0; k < method.dataset_size; ++k) data.row(k) = sample_mixture(target, 0.0, data_rng).transpose();
    PfgmConfig pc = method.pfgm;
    pc.sigma_max = schedule.sigma_max;
    return pfgm_guided_ode(data, n, pc, rng).set;
  }
  throw ConfigError("unknown sampler '" + s + "'", {"sampler"});
}

MethodTrials run_trials(const MethodConfig& method, const ExperimentConfig& cfg, const MixtureTarget& target,
                        const RngStream& base, int threads) {
  std::vector<Mat> sets(static_cast<std::size_t>(cfg.trials));
  parallel_for(sets.size(), threads, [&](std::size_t k) {
    RngStream rng = base.child(k);
    sets[k] = run_method(method, target, cfg.n, cfg.schedule, rng).x;
  });
  return evaluate_sets(method.name, sets, cfg, target);
}

int samples_to_coverage(const MixtureTarget& target, const Mat& centers, double threshold, const GuidanceConfig& gcfg,
                        const NoiseSchedule& schedule, RngStream& rng, int cap) {
  constexpr int kBatch = 10;
  std::vector<char> seen(static_cast<std::size_t>(centers.rows()), 0);
  Eigen::Index missing = centers.rows();
  int draws = 0;
  for (std::uint64_t batch = 0; draws < cap; ++batch) {
    RngStream brng = rng.child(batch);
    const Mat x = sample_iid(target, kBatch, gcfg, schedule, brng).x;
    for (Eigen::Index i = 0; i < x.rows() && draws < cap; ++i) {
      ++draws;
      const int m = nearest_mode(x.row(i).transpose(), centers, threshold, target.space);
      if (m >= 0 && !seen[static_cast<std::size_t>(m)]) {
        seen[static_cast<std::size_t>(m)] = 1;
        if (--missing == 0) return draws;
      }
    }
  }
  return draws;
}

double measured_log_phi(const ExperimentConfig& cfg, const Mat& x) {
  PotentialSpec spec;
  spec.rule = BandwidthRule::Fixed;
  if (cfg.kind == "marginal_table") {
    spec.alpha0 = spec.alpha1 = cfg.table.alpha;
    spec.h0 = cfg.table.h;
  } else {
    spec.alpha0 = spec.alpha1 = cfg.measure.alpha;
    spec.h0 = cfg.measure.h;
  }
  if (cfg.target.type == "torus_mixture") spec.kernel = KernelKind::RbfTorus;
  return log_phi(spec, x, 0.0, cfg.schedule);
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int threads) {
  const auto start = std::chrono::steady_clock::now();
  threads = resolve_threads(threads);
  ExperimentOutput out;
  out.report = base_report(cfg);
  out.csv = kCsvHeader;
  if (cfg.kind == "sweep")
    sweep_experiment(cfg, threads, out);
  else if (cfg.kind == "marginal_table")
    marginal_table(cfg, threads, out);
  else if (cfg.kind == "fk_validation")
    fk_validation(cfg, threads, out);
  else
    sets_experiment(cfg, threads, out);
  out.report["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.plots = emit_plots(out.report);
  return out;
}

std::map<std::string, std::string> emit_plots(const json& report) {
  std::map<std::string, std::string> files;
  const std::string kind = report.value("kind", "");
  svg::Series centers{"centers", {}, {}};
  if (report.contains("target"))
    for (const json& c : report["target"]["centers"]) {
      centers.x.push_back(c[0].get<double>());
      centers.y.push_back(c.size() > 1 ? c[1].get<double>() : 0.0);
    }
  if (kind == "sweep" && report.contains("sweep")) {
    std::vector<svg::Series> lines;
    const json& sw = report["sweep"];
    std::vector<double> xs = sw["values"].get<std::vector<double>>();
    bool log_x = !xs.empty();
    double lo = 1e300, hi = -1e300;
    for (double v : xs) log_x = log_x && v > 0, lo = std::min(lo, v), hi = std::max(hi, v);
    log_x = log_x && hi / lo > 10.0;
    for (const json& s : sw["series"]) {
      svg::Series line{s["method"].get<std::string>(), {}, s["mean"].get<std::vector<double>>()};
      if (s["swept"].get<bool>()) {
        line.x = s["values"].get<std::vector<double>>();
      } else if (!xs.empty()) {
        line.x = {lo, hi};
        line.y = {line.y[0], line.y[0]};
      }
      lines.push_back(line);
    }
    files["sweep.svg"] = svg::line_chart("mean modes vs " + sw["param"].get<std::string>(), sw["param"], "mean modes",
                                         lines, log_x);
    return files;
  }
  if (kind == "fk_validation" && report.contains("fk")) {
    const json& fk = report["fk"];
    const std::vector<double> grid = fk["grid"].get<std::vector<double>>();
    const double step = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
    const int g = static_cast<int>(grid.size());
    files["fk_density.svg"] = svg::heatmap("Feynman-Kac density estimate", fk["fk"].get<std::vector<double>>(), g,
                                           grid.front(), step);
    files["fk_histogram.svg"] = svg::heatmap("sampler histogram", fk["histogram"].get<std::vector<double>>(), g,
                                             grid.front(), step);
  }
  for (const json& m : report.value("methods", json::array())) {
    const std::string name = m["name"].get<std::string>();
    if (m.contains("plot_sets") && !m["plot_sets"].empty() && m["plot_sets"][0][0].size() >= 2) {
      std::vector<svg::Series> groups;
      int k = 0;
      for (const json& set : m["plot_sets"]) {
        svg::Series s{"set " + std::to_string(k++), {}, {}};
        for (const json& p : set) {
          s.x.push_back(p[0].get<double>());
          s.y.push_back(p[1].get<double>());
        }
        groups.push_back(s);
      }
      files["scatter_" + name + ".svg"] = svg::scatter(name + " samples", groups, centers);
    }
    const std::vector<int> modes = m["modes"].get<std::vector<int>>();
    int top = 0;
    for (int v : modes) top = std::max(top, v);
    std::vector<double> counts(static_cast<std::size_t>(top + 1), 0.0);
    for (int v : modes) counts[static_cast<std::size_t>(v)] += 1.0;
    files["hist_" + name + ".svg"] = svg::histogram(name + " modes recovered", "modes", counts, 0);
  }
  return files;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

void write_outputs(const ExperimentOutput& out, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  };
  write("report.json", dump_report(out.report));
  write("trials.csv", out.csv);
  for (const auto& [name, text] : out.plots) write(name, text);
}

}  // namespace pglab
