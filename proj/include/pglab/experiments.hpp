#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "pglab/config.hpp"
#include "pglab/oracles.hpp"

namespace pglab {

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Draws one particle set for a configured method.
ParticleSet run_method(const MethodConfig& method, const MixtureTarget& target, int n, const NoiseSchedule& schedule,
                       RngStream& rng);

/// Per-trial observables of one method.
struct MethodTrials {
  std::string name;
  std::vector<int> modes;
  std::vector<double> log_phi;
  std::vector<double> similarity;
  std::vector<Mat> plot_sets;
  bool flagged = false;  // any trial raised a numeric-floor flag or excluded similarity pair
};

MethodTrials run_trials(const MethodConfig& method, const ExperimentConfig& cfg, const MixtureTarget& target,
                        const RngStream& base, int threads);

/// I.I.D. draws one at a time until every center is covered; returns the number of draws (capped).
int samples_to_coverage(const MixtureTarget& target, const Mat& centers, double threshold, const GuidanceConfig& gcfg,
                        const NoiseSchedule& schedule, RngStream& rng, int cap = 100000);

/// Log Phi used for reporting (measure or table settings of the config).
double measured_log_phi(const ExperimentConfig& cfg, const Mat& x);

struct ExperimentOutput {
  nlohmann::json report;
  std::string csv;
  std::map<std::string, std::string> plots;  // file name -> SVG text
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg, int threads);

/// SVG files derived from a report alone.
std::map<std::string, std::string> emit_plots(const nlohmann::json& report);

/// Writes report.json, trials.csv and the plots into `dir` (created if missing).
void write_outputs(const ExperimentOutput& out, const std::string& dir);

/// Serialized report; `wall_clock_seconds` is the only field that varies between reruns.
std::string dump_report(const nlohmann::json& report);

}  // namespace pglab
