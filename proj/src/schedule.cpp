#include "pglab/schedule.hpp"

#include <cmath>
#include <numbers>

namespace pglab {

void NoiseSchedule::validate() const {
  if (!(sigma_min > 0) || !(sigma_max > sigma_min) || !(T > 0))
    throw DomainError("schedule requires 0 < sigma_min < sigma_max and T > 0");
}

double NoiseSchedule::sigma(double t) const {
  if (!(t >= 0.0 && t <= T)) throw DomainError("time outside [0, T]: " + std::to_string(t));
  const double s = t / T;
  return std::exp((1.0 - s) * std::log(sigma_min) + s * std::log(sigma_max));
}

double NoiseSchedule::g2(double t) const {
  return 2.0 * sigma2(t) * std::log(sigma_max / sigma_min) / T;
}

double sigma_at(const NoiseSchedule& schedule, double t) { return schedule.sigma(t); }

double log_interp(double v0, double v1, double t, double T) {
  if (v0 == v1) return v0;
  if (!(v0 > 0) || !(v1 > 0)) throw DomainError("log interpolation needs positive end values");
  const double s = t / T;
  return std::exp(s * std::log(v1) + (1.0 - s) * std::log(v0));
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

void wrap_rows(Mat& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = wrap_angle(x.data()[i]);
}

void ParticleSet::normalize() {
  if (space == Space::Torus) wrap_rows(x);
}

Vec perturb(const Vec& x0, double t, const NoiseSchedule& schedule, Space space, RngStream& rng) {
  const double s = schedule.sigma(t);
  Vec out(x0.size());
  for (Eigen::Index j = 0; j < x0.size(); ++j) out[j] = x0[j] + s * rng.normal();
  if (space == Space::Torus)
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] = wrap_angle(out[j]);
  return out;
}

void check_finite(const Mat& m, const char* what, int step) {
  if (!m.allFinite())
    throw NumericError(std::string("non-finite ") + what + " at step " + std::to_string(step), step);
}

void em_update(Mat& x, const Mat& score, const Mat* guidance, double gamma, double drift_coef,
               double noise_scale, double g2, double dt, std::vector<RngStream>* rngs) {
  const double a = drift_coef * g2 * dt;
  const double b = std::sqrt(noise_scale * g2 * dt);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double gterm = guidance ? (*guidance)(i, j) : 0.0;
      x(i, j) += a * (score(i, j) + gamma * gterm);
    }
    if (rngs && noise_scale > 0.0) {
      RngStream& r = (*rngs)[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += b * r.normal();
    }
  }
}

ParticleSet reverse_sde_step(const ParticleSet& set, const FieldFn& score_fn, const FieldFn& guidance_fn,
                             double dt, const NoiseSchedule& schedule, StepWeights weights,
                             std::vector<RngStream>& rngs, int step_index) {
  if (dt < 0 || dt > set.t + 1e-12) throw DomainError("dt must lie in [0, t]");
  if (rngs.size() != static_cast<std::size_t>(set.n())) throw DomainError("one rng stream per particle required");
  const Mat s = score_fn(set.x, set.t);
  check_finite(s, "score", step_index);
  Mat g;
  if (guidance_fn) {
    g = guidance_fn(set.x, set.t);
    check_finite(g, "guidance", step_index);
  }
  ParticleSet out = set;
  em_update(out.x, s, guidance_fn ? &g : nullptr, weights.gamma, 0.5 * (1.0 + weights.beta), weights.beta,
            schedule.g2(set.t), dt, &rngs);
  out.t = std::max(0.0, set.t - dt);
  out.normalize();
  return out;
}

namespace {
Mat velocity(const FieldFn& score_fn, const FieldFn& guidance_fn, const Mat& x, double t,
             const NoiseSchedule& schedule, double gamma, int step) {
  Mat v = score_fn(x, t);
  check_finite(v, "score", step);
  if (guidance_fn) {
    const Mat g = guidance_fn(x, t);
    check_finite(g, "guidance", step);
    v += gamma * g;
  }
  return 0.5 * schedule.g2(t) * v;
}
}  // namespace

ParticleSet ode_step(const ParticleSet& set, const FieldFn& score_fn, const FieldFn& guidance_fn, double dt,
                     const NoiseSchedule& schedule, Integrator integrator, double gamma, int step_index) {
  if (dt < 0 || dt > set.t + 1e-12) throw DomainError("dt must lie in [0, t]");
  ParticleSet out = set;
  if (dt == 0.0) return out;
  const double t1 = std::max(0.0, set.t - dt);
  const Mat k1 = velocity(score_fn, guidance_fn, set.x, set.t, schedule, gamma, step_index);
  if (integrator == Integrator::Euler) {
    out.x += dt * k1;
  } else {
    Mat xp = set.x + dt * k1;
    if (set.space == Space::Torus) wrap_rows(xp);
    const Mat k2 = velocity(score_fn, guidance_fn, xp, t1, schedule, gamma, step_index);
    out.x += 0.5 * dt * (k1 + k2);
  }
  out.t = t1;
  out.normalize();
  return out;
}

}  // namespace pglab
