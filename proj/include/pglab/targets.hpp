#pragma once

#include <vector>

#include "pglab/schedule.hpp"

namespace pglab {

struct Component {
  double weight;
  Vec mean;
  double variance;
};

/// Isotropic Gaussian mixture in R^d, or wrapped Gaussian mixture on the flat torus.
struct MixtureTarget {
  std::vector<Component> components;
  Space space = Space::Euclidean;
  int wrap_order = 3;

  int dim() const;
  void validate() const;
  Mat means() const;
};

MixtureTarget ring_mixture(int N, double radius, double variance);
/// Six components on the unit circle plus one at the origin carrying weight 0.4.
MixtureTarget hex_center_mixture(double variance);
MixtureTarget gaussian_target(const Vec& mean, double variance);
/// Equal-weight two-component 1D mixture at ±offset.
MixtureTarget bimodal_1d(double offset, double variance);
MixtureTarget wrapped_mixture(const std::vector<Component>& comps, int wrap_order = 3);

/// Density / log-density / score of the mixture convolved with N(0, extra_var I).
double mixture_log_density(const MixtureTarget& target, const Vec& x, double extra_var);
Vec mixture_score(const MixtureTarget& target, const Vec& x, double extra_var);
/// Laplacian of the log-density (Euclidean targets).
double mixture_laplacian_log(const MixtureTarget& target, const Vec& x, double extra_var);

double gmm_density_t(const MixtureTarget& target, const Vec& x, double t, const NoiseSchedule& schedule);
double gmm_log_density_t(const MixtureTarget& target, const Vec& x, double t, const NoiseSchedule& schedule);
Vec gmm_score_t(const MixtureTarget& target, const Vec& x, double t, const NoiseSchedule& schedule);
Vec wrapped_mixture_score_t(const MixtureTarget& target, const Vec& tau, double t, const NoiseSchedule& schedule);
double wrapped_log_density_t(const MixtureTarget& target, const Vec& tau, double t, const NoiseSchedule& schedule);

/// Allocation-light score at a raw point; optionally writes the Laplacian of the log-density.
void mixture_score_into(const MixtureTarget& target, const double* x, int d, double extra_var, double* out,
                        double* laplacian = nullptr);

/// Row-wise time-t score for either space.
Mat score_rows(const MixtureTarget& target, const Mat& x, double t, const NoiseSchedule& schedule);
/// Row-wise score with a fixed extra variance.
Mat score_rows_var(const MixtureTarget& target, const Mat& x, double extra_var);

/// Exact draw from the mixture convolved with N(0, extra_var I) (wrapped on the torus).
Vec sample_mixture(const MixtureTarget& target, double extra_var, RngStream& rng);

}  // namespace pglab
