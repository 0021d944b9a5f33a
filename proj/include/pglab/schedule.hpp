#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pglab/rng.hpp"

namespace pglab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Space { Euclidean, Torus };

struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite value produced inside an integrator; carries the step index.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, int step) : std::runtime_error(what), step(step) {}
  int step;
};

/// VE-geometric schedule: sigma(t) = sigma_min^(1-t/T) * sigma_max^(t/T), f = 0.
struct NoiseSchedule {
  double sigma_min = 0.01;
  double sigma_max = 3.0;
  double T = 1.0;

  void validate() const;
  double sigma(double t) const;
  double sigma2(double t) const { const double s = sigma(t); return s * s; }
  /// g(t)^2 = d sigma^2 / dt.
  double g2(double t) const;
};

double sigma_at(const NoiseSchedule& schedule, double t);

/// exp(s log v1 + (1-s) log v0) with s = t/T; v0 == v1 returns v0 exactly (zero allowed).
double log_interp(double v0, double v1, double t, double T = 1.0);

/// Maps an angle to (-pi, pi].
double wrap_angle(double a);

struct ParticleSet {
  Mat x;  // n x d
  Space space = Space::Euclidean;
  double t = 0.0;

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
  void normalize();
};

/// Field evaluated on the whole set: (coords n x d, t) -> n x d.
using FieldFn = std::function<Mat(const Mat&, double)>;

Vec perturb(const Vec& x0, double t, const NoiseSchedule& schedule, Space space, RngStream& rng);

struct StepWeights {
  double beta = 1.0;
  double gamma = 1.0;
};

/// Euler–Maruyama step from t to t - dt:
/// x += ½(1+β) g² dt (score + γ guidance) + sqrt(β g² dt) ξ, row i drawing from rngs[i].
ParticleSet reverse_sde_step(const ParticleSet& set, const FieldFn& score_fn, const FieldFn& guidance_fn,
                             double dt, const NoiseSchedule& schedule, StepWeights weights,
                             std::vector<RngStream>& rngs, int step_index = 0);

enum class Integrator { Euler, Heun };

/// Probability-flow step from t to t - dt: velocity ½ g² (score + γ guidance).
ParticleSet ode_step(const ParticleSet& set, const FieldFn& score_fn, const FieldFn& guidance_fn, double dt,
                     const NoiseSchedule& schedule, Integrator integrator = Integrator::Euler,
                     double gamma = 1.0, int step_index = 0);

/// Shared update core: x += drift_coef * g2 * dt * (s + γ G) + sqrt(noise_scale * g2 * dt) ξ.
void em_update(Mat& x, const Mat& score, const Mat* guidance, double gamma, double drift_coef,
               double noise_scale, double g2, double dt, std::vector<RngStream>* rngs);

void check_finite(const Mat& m, const char* what, int step);
void wrap_rows(Mat& x);

}  // namespace pglab
