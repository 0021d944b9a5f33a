#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pglab/experiments.hpp"

namespace {

enum Exit { kOk = 0, kRuntime = 1, kConfig = 2 };

struct Options {
  std::string config;
  std::string out = "pg_lab_out";
  std::string report_dir;
  std::int64_t seed = -1;
  int threads = 0;
};

void mark_failure(const std::string& dir, const std::string& what) {
  try {
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "FAILED") << what << '\n';
  } catch (const std::exception&) {
  }
}

int run(const Options& o, bool require_sweep) {
  pglab::ExperimentConfig cfg;
  try {
    cfg = pglab::load_config(o.config);
    if (o.seed >= 0) {
      cfg.seed = static_cast<std::uint64_t>(o.seed);
      cfg.echo["seed"] = cfg.seed;
    }
    if (require_sweep && cfg.kind != "sweep") throw pglab::ConfigError("sweep requires kind \"sweep\"", {"kind"});
  } catch (const pglab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  try {
    const pglab::ExperimentOutput out = pglab::run_experiment(cfg, o.threads > 0 ? o.threads : cfg.threads);
    pglab::write_outputs(out, o.out);
    std::cout << "wrote " << o.out << "/report.json (" << out.plots.size() << " plots)\n";
    return kOk;
  } catch (const pglab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    mark_failure(o.out, e.what());
    return kRuntime;
  }
}

int validate(const Options& o) {
  try {
    const pglab::ExperimentConfig cfg = pglab::load_config(o.config);
    std::cout << "ok: " << cfg.kind << ", " << cfg.methods.size() << " method(s)\n";
    return kOk;
  } catch (const pglab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
}

int report(const Options& o) {
  try {
    const std::filesystem::path src = std::filesystem::path(o.report_dir) / "report.json";
    std::ifstream in(src);
    if (!in) throw std::runtime_error("cannot open " + src.string());
    const nlohmann::json rep = nlohmann::json::parse(in);
    const std::string dir = o.out.empty() ? o.report_dir : o.out;
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : pglab::emit_plots(rep)) {
      std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
      f << text;
    }
    return kOk;
  } catch (const std::exception& e) {
    std::cerr << "report failure: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle guidance experiment runner"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "overrides the configured seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads (0 = PG_LAB_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment");
  add_common(run_cmd);
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep_cmd);
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a configuration");
  validate_cmd->add_option("--config", o.config, "experiment configuration (JSON)")->required();
  CLI::App* report_cmd = app.add_subcommand("report", "re-render plots from report.json");
  report_cmd->add_option("--in", o.report_dir, "directory holding report.json")->required();
  report_cmd->add_option("--out", o.out, "plot directory (default: --in)");
  o.out.clear();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  if (run_cmd->parsed() || sweep_cmd->parsed()) {
    if (o.out.empty()) o.out = "pg_lab_out";
    return run(o, sweep_cmd->parsed());
  }
  if (validate_cmd->parsed()) return validate(o);
  return report(o);
}
