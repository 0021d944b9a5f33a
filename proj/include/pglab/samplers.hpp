#pragma once

#include <vector>

#include "pglab/potentials.hpp"
#include "pglab/targets.hpp"

namespace pglab {

enum class Mode { SDE, ODE };
enum class PriorKind { Standard, Exact };

struct GuidanceConfig {
  int steps = 100;
  Mode mode = Mode::SDE;
  double beta0 = 1.0;  // Langevin weight at t = 0
  double beta1 = 1.0;  // Langevin weight at t = T
  double gamma0 = 1.0;
  double gamma1 = 1.0;
  Integrator integrator = Integrator::Euler;
  PriorKind prior = PriorKind::Standard;

  void validate() const;
};

struct LowTempConfig {
  double lambda = 1.0;
  double psi = 0.0;
  double sigma_d = 0.5;
};

enum class CollectiveVariable { Identity, Angle };

struct MetaConfig {
  double omega = 0.0;
  double sigma_meta = 0.1;
  CollectiveVariable cv = CollectiveVariable::Identity;
};

struct SvgdConfig {
  int iters = 1000;
  double step_size = 0.01;
  BandwidthRule rule = BandwidthRule::MedianHeuristic;
  double h = 1.0;  // used by Fixed
  double sigma_floor = 0.02;
  bool anneal = false;
  double divergence_bound = 1e6;
};

struct PfgmConfig {
  int D = 1;
  int steps = 100;
  double r_max = 0.0;  // 0 selects sigma_max * sqrt(D)
  double r_min = 1e-3;
  double sigma_max = 3.0;
  double repulsion = 1.0;
  double distance_floor = 1e-9;
};

struct PfgmResult {
  ParticleSet set;
  bool floored = false;
};

/// Child stream i of the trial stream for particle i.
std::vector<RngStream> particle_streams(const RngStream& trial, int n);

Mat sample_prior(const MixtureTarget& target, int n, const NoiseSchedule& schedule, PriorKind prior,
                 std::vector<RngStream>& streams);

/// Reverse-time integration from x_T at t = T down to t = 0 with an optional guidance field.
ParticleSet integrate(const MixtureTarget& target, const Mat& x_T, const GuidanceConfig& cfg,
                      const NoiseSchedule& schedule, const FieldFn& guidance, std::vector<RngStream>& streams);

ParticleSet sample_iid(const MixtureTarget& target, int n, const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                       RngStream& rng);
ParticleSet sample_iid(const MixtureTarget& target, const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                       std::vector<RngStream>& streams);

FieldFn potential_field(const PotentialSpec& spec, const NoiseSchedule& schedule);

ParticleSet sample_pg(const MixtureTarget& target, const PotentialSpec& spec, int n, const GuidanceConfig& cfg,
                      const NoiseSchedule& schedule, RngStream& rng);
ParticleSet sample_pg(const MixtureTarget& target, const PotentialSpec& spec, const GuidanceConfig& cfg,
                      const NoiseSchedule& schedule, std::vector<RngStream>& streams);

double lambda_t(const LowTempConfig& ltc, double sigma_t);
ParticleSet sample_low_temp(const MixtureTarget& target, int n, const LowTempConfig& ltc, const GuidanceConfig& cfg,
                            const NoiseSchedule& schedule, RngStream& rng);
ParticleSet sample_low_temp(const MixtureTarget& target, const LowTempConfig& ltc, const GuidanceConfig& cfg,
                            const NoiseSchedule& schedule, std::vector<RngStream>& streams);

/// Sequential sampling; sample k is guided away from samples 1..k-1 and uses stream k.
ParticleSet sample_metadynamics_seq(const MixtureTarget& target, const MetaConfig& meta, int n,
                                    const GuidanceConfig& cfg, const NoiseSchedule& schedule, RngStream& rng);
/// Gradient of the bias -omega * sum_j exp(-|s(x) - s(p_j)|^2 / 2 sigma^2) at each row of x.
Mat metadynamics_gradient(const MetaConfig& meta, const Mat& x, const Mat& previous);

ParticleSet svgd_run(const MixtureTarget& target, const SvgdConfig& cfg, const Mat& init);
ParticleSet svgd_run(const MixtureTarget& target, const SvgdConfig& cfg, int n, double init_scale, RngStream& rng);
/// Stein direction psi(x_i) = 1/max(n-1,1) sum_j [k(x_j,x_i) s(x_j) + grad_{x_j} k(x_j,x_i)].
Mat svgd_direction(const Mat& x, const Mat& score, double h);

struct SvgdEquivResult {
  Mat pg_step;        // exact PG-ODE step under Phi = (sum k)^{-(n-1)/2}
  Mat svgd_form;      // SVGD-form step, eps = (n-1) g^2 dt / (2 S_i), kernel term scaled by (n-1)/n
  Mat svgd_literal;   // SVGD-form step with eps = n g^2 dt / (2 S_i) and the plain psi
  double discrepancy = 0.0;
  double literal_discrepancy = 0.0;
};

SvgdEquivResult svgd_equiv_pg_step(const Mat& x, const MixtureTarget& target, double h, double t, double dt,
                                   const NoiseSchedule& schedule);

struct SymmetricSumCheck {
  Mat full;     // grad_{x_i} sum_{a,b} k(x_a, x_b)
  Mat doubled;  // 2 sum_j grad_{x_i} k(x_i, x_j)
};
SymmetricSumCheck symmetric_sum_identity(const Mat& x, double h);

PfgmResult pfgm_guided_ode(const Mat& dataset, int n, const PfgmConfig& cfg, RngStream& rng);
/// dx/dr for every particle at radius r (data attraction plus weighted pairwise repulsion).
Mat pfgm_velocity(const Mat& dataset, const Mat& x, double r, int D, double repulsion, double distance_floor,
                  bool* floored);

}  // namespace pglab
