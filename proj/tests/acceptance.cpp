// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include "helpers.hpp"
#include "pglab/experiments.hpp"

using namespace pglab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

int worker_threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const json& method_named(const json& report, const std::string& name) {
  for (const json& m : report["methods"])
    if (m["name"] == name) return m;
  throw std::runtime_error("method missing from report: " + name);
}

double mean_of(const json& m, const char* key) { return m["summary"][key]["mean"].get<double>(); }
double se_of(const json& m, const char* key) { return m["summary"][key]["stderr"].get<double>(); }

/// Upper end of a's 3-stderr interval lies below the lower end of b's.
bool separated(const json& a, const json& b, const char* key) {
  return mean_of(a, key) + 3 * se_of(a, key) < mean_of(b, key) - 3 * se_of(b, key);
}

Vec torus_point(int d, RngStream& rng) {
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = wrap_angle(2 * kPi * rng.uniform());
  return v;
}

Mat rotate(const Mat& x, double angle) {
  Eigen::Matrix2d R;
  R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return x * R.transpose();
}

double repulsive_log_phi0(const Mat& x) {
  double s = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) s += std::exp(-(x.row(i) - x.row(j)).squaredNorm());
  return -s;
}

Outcome ac1_closed_forms() {
  Outcome o;
  const double em = expected_modes_iid(10), cc = coupon_collector_mean(10);
  o.require(std::abs(em - 6.513216) < 5e-7, fmt("E[modes] closed form %.7f", em));
  o.require(std::abs(cc - 29.289683) < 5e-7, fmt("coupon mean closed form %.7f", cc));

  json doc{{"kind", "ring_modes"}, {"seed", 101}, {"trials", 2000}, {"coverage_trials", 2000}};
  doc["methods"] = json::array({{{"name", "iid"}, {"sampler", "iid"}}});
  const ExperimentOutput out = run_experiment(parse_config(doc), worker_threads());
  const json& iid = method_named(out.report, "iid");
  const double modes = mean_of(iid, "modes");
  o.require(std::abs(modes - 6.51) <= 0.15, fmt("iid modes %.3f", modes));
  const double cov = iid["samples_to_coverage"]["mean"].get<double>();
  o.require(std::abs(cov - 29.29) <= 1.0, fmt("samples to coverage %.3f", cov));
  return o;
}

Outcome ac2_ring_sweep() {
  Outcome o;
  json doc{{"kind", "sweep"}, {"seed", 102}, {"trials", 2000}};
  doc["sweep"] = {{"methods", {"pg_rbf"}}, {"param", "alpha0"}, {"values", {30, 100, 300, 1000}}};
  const ExperimentOutput out = run_experiment(parse_config(doc), worker_threads());
  const json* best = nullptr;
  for (const json& m : out.report["methods"])
    if (m.contains("param_value") && (!best || mean_of(m, "modes") > mean_of(*best, "modes"))) best = &m;
  if (!best) throw std::runtime_error("sweep produced no swept methods");
  const json& iid = method_named(out.report, "iid");
  const json& radial = method_named(out.report, "pg_radial");
  o.require(mean_of(*best, "modes") >= 8.5,
            fmt2("best Euclidean %.3f at alpha0=%g", mean_of(*best, "modes"), (*best)["param_value"].get<double>()));
  o.require(mean_of(radial, "modes") >= 9.5, fmt("radial %.3f", mean_of(radial, "modes")));
  const double all10 = radial["all_modes_fraction"].get<double>();
  o.require(all10 >= 0.95, fmt("radial all-10 fraction %.3f", all10));
  o.require(separated(iid, *best, "modes") && separated(iid, radial, "modes"),
            fmt("3-stderr separation from iid %.3f", mean_of(iid, "modes")));
  return o;
}

Outcome ac3_feynman_kac() {
  Outcome o;
  json doc{{"kind", "fk_validation"}, {"seed", 103}};
  doc["fk"] = {{"paths", 100000}, {"sampler_runs", 1000000}, {"steps", 200}, {"check_points", 20}, {"check_paths", 20000}};
  const ExperimentOutput out = run_experiment(parse_config(doc), worker_threads());
  const json& fk = out.report["fk"];
  const double tv = fk["tv_fk_hist"].get<double>(), tv0 = fk["tv_product_hist"].get<double>();
  o.require(tv < 0.05, fmt2("TV(FK, histogram) %.4f (product baseline %.4f)", tv, tv0));
  const int within = fk["check_within_3se"].get<int>();
  o.require(within == 20, fmt("Phi=1 points within 3 stderr %.0f/20", within));
  return o;
}

Mat simplex(int n, double scale) { return scale * Mat::Identity(n, n); }

Outcome ac4_svgd_equivalence() {
  Outcome o;
  NoiseSchedule s;
  double worst = 0;
  int configs = 0;
  for (int n = 2; n <= 6; ++n)
    for (double scale : {0.3, 0.7, 1.2})
      for (double t : {0.1, 0.5, 0.9}) {
        const MixtureTarget g = gaussian_target(Vec::Constant(n, 0.2), 0.6);
        worst = std::max(worst, svgd_equiv_pg_step(simplex(n, scale), g, 0.8, t, 0.01, s).discrepancy);
        ++configs;
      }
  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  for (int n = 2; n <= 3; ++n)
    for (double r : {0.5, 1.0, 2.0}) {
      Mat poly(n, 2);
      for (int i = 0; i < n; ++i) poly.row(i) << r * std::cos(2 * kPi * i / n), r * std::sin(2 * kPi * i / n);
      worst = std::max(worst, svgd_equiv_pg_step(poly, ring, 0.5, 0.4, 0.02, s).discrepancy);
      ++configs;
    }
  o.require(worst < 1e-10, fmt2("equidistant discrepancy %.2e over %.0f configs", worst, configs));

  RngStream rng(104, 0);
  double sym = 0;
  for (int c = 0; c < 100; ++c) {
    const SymmetricSumCheck r =
        symmetric_sum_identity(testing::random_mat(2 + c % 6, 1 + c % 3, 1.0, rng), 0.2 + rng.uniform());
    sym = std::max(sym, (r.full - r.doubled).cwiseAbs().maxCoeff());
  }
  o.require(sym < 1e-12, fmt("symmetric-sum identity %.2e over 100 configs", sym));
  return o;
}

Outcome ac5_learned_potential() {
  Outcome o;
  LatticeSurrogate lat;
  lat.phi0.resize(static_cast<std::size_t>(lat.num_states()));
  for (int st = 0; st < lat.num_states(); ++st) {
    const std::vector<int> s = lat.decode(st);
    const double d = lat.points[static_cast<std::size_t>(s[0])] - lat.points[static_cast<std::size_t>(s[1])];
    lat.phi0[static_cast<std::size_t>(st)] = std::exp(-std::exp(-d * d));
  }
  RngStream lat_rng(105, 0);
  double worst = 0;
  for (double t : {0.1, 0.5, 0.9}) {
    const std::vector<double> exact = lattice_conditional_phi(lat, t);
    const std::vector<double> trained = train_lattice_phi(lat, t, 8000000, lat_rng);
    for (std::size_t k = 0; k < exact.size(); ++k) worst = std::max(worst, std::abs(exact[k] - trained[k]));
  }
  o.require(worst < 1e-3, fmt("lattice max |Phi_t - E[Phi_0|X_t]| %.2e", worst));

  NoiseSchedule s;
  const MixtureTarget g = gaussian_target(Vec::Zero(1), 1.0);
  RngStream train_rng(106, 0);
  TrainConfig tc;
  tc.batches = 6000;
  tc.sets_per_batch = 32;
  tc.lr = 5.0;
  tc.plateau_window = 0;
  const PhiModel model = train_phi(g, repulsive_log_phi0, PhiModel::product_form(11, 1.0), 2, tc, s, train_rng).model;

  GuidanceConfig gcfg;
  gcfg.steps = 100;
  gcfg.prior = PriorKind::Exact;
  const int sets = 40000, G = 12;
  const double lo = -3.0, w = 0.5;
  auto cell = [&](const Mat& x, std::vector<double>& h) {
    const int a = static_cast<int>(std::floor((x(0, 0) - lo) / w)), b = static_cast<int>(std::floor((x(1, 0) - lo) / w));
    if (a >= 0 && a < G && b >= 0 && b < G) h[static_cast<std::size_t>(a * G + b)] += 1;
  };
  std::vector<double> learned(G * G, 0.0), oracle(G * G, 0.0);
  const RngStream base(107, 0);
  for (int k = 0; k < sets; ++k) {
    RngStream r = base.child(static_cast<std::uint64_t>(k));
    cell(sample_learned_pg(g, model, 2, gcfg, s, r).x, learned);
  }
  RngStream or_rng(108, 0);
  for (const Mat& x : reweighted_sampler(g, repulsive_log_phi0, 400000, 2, 200000, or_rng).sets) cell(x, oracle);
  const double tv = total_variation(learned, oracle);
  o.require(tv < 0.1, fmt("TV(learned PG, reweighted oracle) %.4f", tv));
  return o;
}

Outcome ac6_table() {
  Outcome o;
  const ExperimentOutput out = run_experiment(parse_config(json{{"kind", "marginal_table"}, {"seed", 106}}), worker_threads());
  const json& iid = method_named(out.report, "iid");
  const json& hat = method_named(out.report, "p_hat");
  const json& tilde = method_named(out.report, "p_tilde");
  o.require(separated(iid, hat, "modes") && separated(hat, tilde, "modes"),
            "modes ordering iid < p_hat < p_tilde");
  o.require(separated(iid, hat, "log_phi") && separated(hat, tilde, "log_phi"),
            "E[log Phi'] ordering iid < p_hat < p_tilde");
  const double modes[3] = {mean_of(iid, "modes"), mean_of(tilde, "modes"), mean_of(hat, "modes")};
  const double lphi[3] = {mean_of(iid, "log_phi"), mean_of(tilde, "log_phi"), mean_of(hat, "log_phi")};
  const double target_modes[3] = {4.9, 5.9, 5.3}, target_lphi[3] = {-37.3, -31.8, -36.3};
  bool near_modes = true, near_lphi = true;
  for (int k = 0; k < 3; ++k) {
    near_modes = near_modes && std::abs(modes[k] - target_modes[k]) <= 0.4;
    near_lphi = near_lphi && std::abs(lphi[k] - target_lphi[k]) <= 1.5;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "modes iid/p_tilde/p_hat %.2f/%.2f/%.2f", modes[0], modes[1], modes[2]);
  o.require(near_modes, buf);
  std::snprintf(buf, sizeof buf, "E[log Phi'] %.2f/%.2f/%.2f", lphi[0], lphi[1], lphi[2]);
  o.require(near_lphi, buf);
  const double tv = hat["marginal_tv"].get<double>();
  o.require(tv < 0.05, fmt("marginal TV(p_hat_1, p) %.4f", tv));
  return o;
}

Outcome ac7_properties() {
  Outcome o;
  NoiseSchedule s;
  RngStream rng(107, 0);

  const std::vector<Permutation> perms{{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  double kernel_worst = 0;
  for (int c = 0; c < 100; ++c) {
    const double h = 0.3 + rng.uniform();
    const Vec x = testing::random_mat(2, 1, 1.0, rng), y = testing::random_mat(2, 1, 1.0, rng);
    kernel_worst = std::max(kernel_worst, testing::rel_err(rbf_kernel(x, y, h).grad_x,
                                                           testing::fd_grad([&](const Vec& z) { return rbf_kernel(z, y, h).value; }, x), 1e-4));
    Vec yr = testing::random_mat(2, 1, 1.0, rng);
    if (std::abs(wrap_angle(std::atan2(x[1], x[0]) - std::atan2(yr[1], yr[0]))) > 3.0) yr = -yr;
    kernel_worst = std::max(kernel_worst, testing::rel_err(radial_kernel(x, yr, h).grad_x,
                                                           testing::fd_grad([&](const Vec& z) { return radial_kernel(z, yr, h).value; }, x), 1e-4));
    const Vec a = torus_point(3, rng), b = torus_point(3, rng);
    kernel_worst = std::max(kernel_worst, testing::rel_err(torus_kernel(a, b, h).grad_x,
                                                           testing::fd_grad([&](const Vec& z) { return torus_kernel(z, b, h).value; }, a), 1e-4));
    kernel_worst = std::max(kernel_worst, testing::rel_err(perm_invariant_kernel(a, b, perms, h).grad_x,
                                                           testing::fd_grad([&](const Vec& z) { return perm_invariant_kernel(z, b, perms, h).value; }, a), 1e-4));
  }
  double potential_worst = 0;
  for (KernelKind kind : {KernelKind::RbfEuclidean, KernelKind::RbfRadial, KernelKind::RbfTorus, KernelKind::PermInvariantTorus}) {
    for (int c = 0; c < 100; ++c) {
      PotentialSpec spec;
      spec.kernel = kind;
      spec.alpha0 = 0.5 + rng.uniform();
      spec.alpha1 = 0.2 + rng.uniform();
      spec.rule = BandwidthRule::Fixed;
      spec.h0 = 0.4 + rng.uniform();
      spec.perm_set = {{0, 1}, {1, 0}};
      Mat x = testing::random_mat(3, 2, 1.0, rng);
      if (kind == KernelKind::RbfTorus || kind == KernelKind::PermInvariantTorus)
        for (int i = 0; i < 3; ++i) x.row(i) = torus_point(2, rng).transpose();
      const double t = rng.uniform();
      potential_worst = std::max(potential_worst, testing::rel_err(potential_gradient(spec, x, t, s).grad,
                                                                   testing::fd_grad_rows([&](const Mat& y) { return log_phi(spec, y, t, s); }, x), 1e-4));
    }
  }
  o.require(kernel_worst < 1e-5 && potential_worst < 1e-5,
            fmt2("kernel / potential FD rel err %.1e / %.1e", kernel_worst, potential_worst));

  double score_worst = 0;
  for (const MixtureTarget& target : {ring_mixture(10, 1.0, 0.005), hex_center_mixture(0.01), bimodal_1d(1.0, 0.2)}) {
    for (int c = 0; c < 100; ++c) {
      const double t = 0.2 + 0.8 * rng.uniform();
      const Vec x = testing::random_mat(target.dim(), 1, 1.5, rng);
      score_worst = std::max(score_worst, testing::rel_err(gmm_score_t(target, x, t, s),
                                                           testing::fd_grad([&](const Vec& y) { return gmm_log_density_t(target, y, t, s); }, x)));
    }
  }
  const MixtureTarget wrapped = wrapped_mixture({{0.6, Vec::Constant(2, 0.5), 0.3}, {0.4, Vec::Constant(2, -1.0), 0.1}});
  for (int c = 0; c < 100; ++c) {
    const double t = 0.2 + 0.8 * rng.uniform();
    const Vec tau = torus_point(2, rng);
    score_worst = std::max(score_worst, testing::rel_err(wrapped_mixture_score_t(wrapped, tau, t, s),
                                                         testing::fd_grad([&](const Vec& y) { return wrapped_log_density_t(wrapped, y, t, s); }, tau)));
  }
  o.require(score_worst < 1e-5, fmt("score FD rel err %.1e", score_worst));

  double learned_worst = 0;
  for (int c = 0; c < 100; ++c) {
    const double t = rng.uniform();
    PhiModel p = PhiModel::product_form(6, 1.0);
    for (double& v : p.theta) v = 0.5 * rng.normal();
    const PhiModel m = PhiModel::mlp(3, 2, 8, 1.0, rng, 0.5);
    const Mat x = testing::random_mat(3, 2, 1.0, rng);
    for (const PhiModel* model : {static_cast<const PhiModel*>(&p), &m})
      learned_worst = std::max(learned_worst, testing::rel_err(phi_eval(*model, x, t).grad,
                                                               testing::fd_grad_rows([&](const Mat& y) { return phi_eval(*model, y, t).log_value; }, x), 1e-4));
  }
  o.require(learned_worst < 1e-5, fmt("learned potential FD rel err %.1e", learned_worst));

  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  {
    GuidanceConfig cfg;
    cfg.mode = Mode::ODE;
    PotentialSpec spec;
    spec.kernel = KernelKind::RbfRadial;
    spec.alpha0 = 30;
    spec.alpha1 = 3;
    spec.rule = BandwidthRule::LogInterp;
    spec.h0 = 0.02;
    spec.h1 = 1.0;
    std::vector<RngStream> none;
    double rot = 0;
    for (int c = 0; c < 10; ++c) {
      const Mat x_T = testing::random_mat(10, 2, 3.0, rng);
      const double angle = 2 * kPi * (c + 1) / 10.0;
      const Mat a = rotate(integrate(ring, x_T, cfg, s, potential_field(spec, s), none).x, angle);
      const Mat b = integrate(ring, rotate(x_T, angle), cfg, s, potential_field(spec, s), none).x;
      rot = std::max(rot, (a - b).cwiseAbs().maxCoeff());
    }
    o.require(rot < 1e-9, fmt("rotation equivariance of the radial ODE %.1e", rot));
  }

  {
    GuidanceConfig cfg;
    cfg.steps = 50;
    PotentialSpec spec;
    spec.alpha0 = spec.alpha1 = 50;
    spec.rule = BandwidthRule::Fixed;
    spec.h0 = 0.1;
    RngStream r(108, 0);
    const Mat iid = sample_iid(ring, 6, cfg, s, r).x;
    GuidanceConfig off = cfg;
    off.gamma0 = off.gamma1 = 0.0;
    bool exact = sample_pg(ring, spec, 6, off, s, r).x == iid;
    exact = exact && sample_low_temp(ring, 6, LowTempConfig{1.0, 0.0, 0.5}, cfg, s, r).x == iid;
    MetaConfig meta;
    meta.omega = 0.0;
    exact = exact && sample_metadynamics_seq(ring, meta, 6, cfg, s, r).x == iid;
    exact = exact && sample_pg(ring, spec, 1, cfg, s, r).x == sample_iid(ring, 1, cfg, s, r).x;
    o.require(exact, "reductions gamma=0, lambda=1 psi=0, omega=0, n=1 bit-identical");
  }

  double period = 0;
  bool perm_exact = true;
  for (int c = 0; c < 100; ++c) {
    const Vec a = torus_point(3, rng), b = torus_point(3, rng);
    Vec shifted = a;
    shifted[c % 3] += 2 * kPi;
    period = std::max(period, std::abs(torus_kernel(shifted, b, 0.7).value - torus_kernel(a, b, 0.7).value));
    const double v = perm_invariant_kernel(a, b, perms, 0.7).value;
    for (const Permutation& p : perms) {
      Vec bp(3);
      for (int k = 0; k < 3; ++k) bp[k] = b[p[static_cast<std::size_t>(k)]];
      perm_exact = perm_exact && std::abs(perm_invariant_kernel(a, bp, perms, 0.7).value - v) <= 1e-15 * std::max(1.0, v);
    }
    const PhiModel mlp = PhiModel::mlp(3, 2, 8, 1.0, rng, 0.5);
    const Mat x = testing::random_mat(3, 2, 1.0, rng);
    Mat xp(3, 2);
    xp << x.row(2), x.row(0), x.row(1);
    perm_exact = perm_exact && phi_eval(mlp, x, 0.3).log_value == phi_eval(mlp, xp, 0.3).log_value;
  }
  o.require(period < 1e-13, fmt("torus periodicity %.1e", period));
  o.require(perm_exact, "permutation invariance of kernels and learned potentials");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (!fs::exists(b / name)) {
      why = name + " missing";
      return false;
    }
    if (name == "report.json") {
      json ra = json::parse(slurp(entry.path())), rb = json::parse(slurp(b / name));
      ra.erase("wall_clock_seconds");
      rb.erase("wall_clock_seconds");
      if (ra != rb) {
        why = "report.json differs";
        return false;
      }
    } else if (slurp(entry.path()) != slurp(b / name)) {
      why = name + " differs";
      return false;
    }
  }
  return true;
}

Outcome ac8_reproducibility() {
  Outcome o;
  const fs::path root = fs::current_path() / "acceptance_repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, json>> configs{
      {"ring", json{{"kind", "ring_modes"}, {"seed", 7}, {"trials", 60}, {"coverage_trials", 30}}},
      {"table", json{{"kind", "marginal_table"}, {"seed", 8}, {"table", {{"pool_size", 3000}, {"sets", 500}, {"batches", 300}}}}},
      {"fk", json{{"kind", "fk_validation"}, {"seed", 9}, {"fk", {{"paths", 400}, {"sampler_runs", 3000}, {"steps", 50}, {"check_points", 4}, {"check_paths", 300}}}}},
      {"torus", json{{"kind", "torus_coverage"}, {"seed", 10}, {"trials", 20}}},
  };
  for (const auto& [name, doc] : configs) {
    const fs::path cfg = root / (name + ".json");
    std::ofstream(cfg) << doc.dump(2);
    std::vector<fs::path> dirs;
    for (const char* run : {"t1", "t3", "t1b"}) {
      const fs::path out = root / (name + "_" + run);
      const std::string threads = std::string(run) == "t3" ? "3" : "1";
      const std::string cmd = std::string("\"") + PG_LAB_BINARY + "\" run --config \"" + cfg.string() + "\" --out \"" +
                              out.string() + "\" --threads " + threads + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) throw std::runtime_error("pg_lab failed for " + name);
      dirs.push_back(out);
    }
    std::string why;
    const bool ok = same_outputs(dirs[0], dirs[1], why) && same_outputs(dirs[1], dirs[0], why) &&
                    same_outputs(dirs[0], dirs[2], why);
    o.require(ok, name + (ok ? " identical across reruns and --threads 1/3" : ": " + why));
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 closed forms and I.I.D. ring baseline", ac1_closed_forms},
      {"AC2 ring mode discovery", ac2_ring_sweep},
      {"AC3 Feynman-Kac joint density", ac3_feynman_kac},
      {"AC4 SVGD equivalence", ac4_svgd_equivalence},
      {"AC5 learned potential", ac5_learned_potential},
      {"AC6 diversity/marginal table", ac6_table},
      {"AC7 property suites", ac7_properties},
      {"AC8 reproducibility", ac8_reproducibility},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
