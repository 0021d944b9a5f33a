#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pglab/samplers.hpp"

namespace pglab {

/// log Phi_0 of a whole particle set.
using LogPhiFn = std::function<double(const Mat&)>;

enum class PhiKind { ProductForm, Mlp };

/// Learned time-dependent potential, stored as log Phi.
///  ProductForm: log Phi_t = b(t) - a(t) sum_{i != j} exp(-|x_i - x_j|^2 / h(t)), with a, log h, b
///               piecewise linear on `knots` uniform nodes over [0, T]. theta = [a | log h | b].
///  Mlp:         one tanh hidden layer on (rows sorted lexicographically, t). theta = [W1 | b1 | w2 | b2].
struct PhiModel {
  PhiKind kind = PhiKind::ProductForm;
  int n_train = 0;  // 0: any n (product form only)
  int dim = 1;
  int knots = 11;
  int width = 16;
  double T = 1.0;
  std::vector<double> theta;

  static PhiModel product_form(int knots, double T, double a = 0.0, double h = 1.0, double b = 0.0);
  static PhiModel mlp(int n_train, int dim, int width, double T, RngStream& rng, double init_scale = 0.1);
  std::size_t num_params() const;
};

struct PhiEval {
  double log_value = 0.0;
  Mat grad;  // per-particle gradient of log Phi_t
};

PhiEval phi_eval(const PhiModel& model, const Mat& x, double t);
/// Gradient of log Phi_t with respect to theta.
Vec phi_param_grad(const PhiModel& model, const Mat& x, double t);

struct TrainConfig {
  int batches = 2000;
  int sets_per_batch = 64;
  double lr = 0.05;
  double t_min = 1e-3;
  bool log_space = false;  // non-canonical: regress log Phi instead of Phi
  double plateau_tol = 1e-4;
  int plateau_window = 50;
};

struct TrainResult {
  PhiModel model;
  std::vector<double> loss_trace;
  int batches_run = 0;
  bool plateau_stop = false;
};

/// Stochastic regression of Phi_t^theta(x_t) onto Phi_0(x_0), lr decaying as 1/sqrt(step).
TrainResult train_phi(const MixtureTarget& target, const LogPhiFn& log_phi0, const PhiModel& init, int n,
                      const TrainConfig& tc, const NoiseSchedule& schedule, RngStream& rng);

/// Mean squared Phi-space regression error over fresh (x_0, x_t) pairs at a fixed t.
double phi_regression_error(const MixtureTarget& target, const LogPhiFn& log_phi0, const PhiModel& model, int n,
                            double t, int sets, const NoiseSchedule& schedule, RngStream& rng);

ParticleSet sample_learned_pg(const MixtureTarget& target, const PhiModel& model, int n, const GuidanceConfig& cfg,
                              const NoiseSchedule& schedule, RngStream& rng);

std::string save_checkpoint(const PhiModel& model);
PhiModel load_checkpoint(const std::string& text);

/// Discrete surrogate: n particles on a 1D lattice with a lattice-normalized Gaussian perturbation kernel.
struct LatticeSurrogate {
  std::vector<double> points{-1.0, 0.0, 1.0};
  std::vector<double> p0{0.25, 0.5, 0.25};
  int n = 2;
  std::vector<double> phi0;  // one value per joint state, state index = sum_i s_i L^i
  NoiseSchedule schedule;

  int num_states() const;
  std::vector<int> decode(int state) const;
};

/// Row-stochastic matrix P(x_t = j | x_0 = i).
Mat lattice_kernel(const LatticeSurrogate& lat, double t);
/// E[Phi_0(X_0) | X_t = s] for every joint state s, by enumeration.
std::vector<double> lattice_conditional_phi(const LatticeSurrogate& lat, double t);
/// Tabular Phi_t trained by SGD on (Phi_t(x_t) - Phi_0(x_0))^2 with step 1/(2 k_s) per state.
std::vector<double> train_lattice_phi(const LatticeSurrogate& lat, double t, long samples, RngStream& rng);

/// gamma(x) = exp(u(x)) with u bilinear on a g x g grid over [lo, hi]^2, clamped to the box edge.
struct GammaGrid {
  double lo = -1.6;
  double hi = 1.6;
  int g = 33;
  Mat u;
  double C = 1.0;

  static GammaGrid zeros(double lo, double hi, int g, double C = 1.0);
  double log_gamma(double x, double y) const;
  /// Grid node indices (row-major ix*g+iy) and bilinear weights of the four surrounding nodes.
  void stencil(double x, double y, int idx[4], double w[4]) const;
};

struct GammaTrainConfig {
  int batches = 20000;
  int sets_per_batch = 64;
  double lr = 0.3;
  double decay_scale = 100.0;  // lr_k = lr / sqrt(1 + k / decay_scale)
  int offset_sets = 20000;     // I.I.D. sets used to normalize log Phi'_0
};

struct GammaTrainResult {
  GammaGrid grid;
  double offset = 0.0;
  bool clamped = false;
  std::vector<double> trace;  // log of the batch mean of Phi^theta
};

/// Greedy stochastic update u -= lr (1/n) sum_i (2C / gamma(x_i)^2) (Phi^theta - C) d gamma/du.
GammaTrainResult train_gamma(const MixtureTarget& target, const LogPhiFn& log_phi0_prime, const GammaGrid& init,
                             const GammaTrainConfig& cfg, int n, RngStream& rng);

double sum_log_gamma(const GammaGrid& grid, const Mat& x);

}  // namespace pglab
