#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pglab/learned.hpp"

namespace pglab {

/// Invalid experiment configuration; `keys` lists offending paths.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& what, std::vector<std::string> keys = {})
      : std::runtime_error(what), keys(std::move(keys)) {}
  std::vector<std::string> keys;
};

struct TargetConfig {
  std::string type = "ring";  // ring | hex_center | bimodal_1d | gmm | torus_mixture
  int modes = 10;
  double radius = 1.0;
  double variance = 0.005;
  double offset = 1.0;
  std::vector<Component> components;
  int wrap_order = 3;
  double threshold_sigmas = 4.0;

  MixtureTarget build() const;
  double threshold() const;
};

struct MethodConfig {
  std::string name;
  std::string sampler = "iid";  // iid | pg | low_temp | metadynamics | svgd | pfgm
  GuidanceConfig guidance;
  PotentialSpec potential;
  LowTempConfig low_temp;
  MetaConfig meta;
  SvgdConfig svgd;
  double init_scale = 3.0;
  PfgmConfig pfgm;
  int dataset_size = 200;
};

struct SweepConfig {
  std::vector<std::string> methods;
  std::string param = "alpha0";  // alpha0 | alpha1 | h0 | h1 | omega | lambda | repulsion | steps
  std::vector<double> values;
};

struct FkConfig {
  int paths = 20000;
  int sampler_runs = 200000;
  int steps = 200;
  double grid_lo = -2.5;
  double grid_step = 0.25;
  int grid_points = 21;
  double alpha0 = 10.0;
  double alpha1 = 0.1;
  double h = 1.0;
  int check_points = 20;
  int check_paths = 10000;
};

struct TableConfig {
  int pool_size = 50000;
  int sets = 5000;
  double alpha = 1.0;
  double h = 3.25;
  double grid_lo = -1.6;
  double grid_hi = 1.6;
  int grid = 33;
  int batches = 20000;
  int sets_per_batch = 64;
  double lr = 0.3;
};

struct MeasureConfig {
  double alpha = 1.0;
  double h = 1.0;
};

struct ExperimentConfig {
  std::string kind = "ring_modes";  // ring_modes | marginal_table | fk_validation | svgd_compare | torus_coverage | pfgm_demo | sweep
  std::uint64_t seed = 0;
  int trials = 200;
  int n = 10;
  int threads = 0;
  int csv_rows = 10000;  // cap for per-run CSV rows in fk_validation; 0 = no cap
  int coverage_trials = 0;
  int plot_sets = 20;
  NoiseSchedule schedule;
  TargetConfig target;
  std::vector<MethodConfig> methods;
  SweepConfig sweep;
  FkConfig fk;
  TableConfig table;
  MeasureConfig measure;
  nlohmann::json echo;  // input document with overrides applied, threads removed
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);
/// Applies a sweep parameter value to a method.
void apply_param(MethodConfig& m, const std::string& param, double value);

}  // namespace pglab
