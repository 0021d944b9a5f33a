#pragma once

#include <cstdint>
#include <vector>

#include "pglab/schedule.hpp"

namespace pglab {

enum class KernelKind { RbfEuclidean, RbfRadial, RbfTorus, PermInvariantTorus };
enum class BandwidthRule { SigmaSq, MedianHeuristic, Fixed, LogInterp };
enum class Normalization { None, OverN };

struct KernelEval {
  double value = 0.0;
  Vec grad_x;  // gradient with respect to the first argument
  Vec grad_y;  // gradient with respect to the second argument
};

using Permutation = std::vector<int>;

/// exp(-|x-y|^2 / h).
KernelEval rbf_kernel(const Vec& x, const Vec& y, double h);
/// exp(-dtheta^2 / h) with dtheta the wrapped angle difference about the origin (2D).
KernelEval radial_kernel(const Vec& x, const Vec& y, double h);
/// exp(-|wrap(ti - tj)|^2 / h).
KernelEval torus_kernel(const Vec& ti, const Vec& tj, double h);
/// min over P in perm_set of torus_kernel(ti, P tj); ties resolved towards the lowest index.
KernelEval perm_invariant_kernel(const Vec& ti, const Vec& tj, const std::vector<Permutation>& perm_set, double h);

struct PotentialSpec {
  KernelKind kernel = KernelKind::RbfEuclidean;
  double alpha0 = 1.0;  // value at t = 0
  double alpha1 = 1.0;  // value at t = T
  BandwidthRule rule = BandwidthRule::SigmaSq;
  double h0 = 1.0;  // Fixed: h0; LogInterp: value at t = 0
  double h1 = 1.0;  // LogInterp: value at t = T
  Normalization normalization = Normalization::None;
  std::vector<Permutation> perm_set;
  int perm_cap = 32;
  std::uint64_t perm_seed = 0;
};

double alpha_at(const PotentialSpec& spec, double t, const NoiseSchedule& schedule);

struct Bandwidth {
  double h;
  bool floored = false;
};

/// Distance in the kernel's own metric.
double kernel_distance(const PotentialSpec& spec, const Vec& x, const Vec& y);
Bandwidth bandwidth(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule);

/// Keeps the identity and a seeded uniform subsample (without replacement) up to cap elements.
std::vector<Permutation> subsample_perms(const std::vector<Permutation>& perms, int cap, std::uint64_t seed);

KernelEval kernel_eval(const PotentialSpec& spec, const Vec& x, const Vec& y, double h);

struct PotentialGrad {
  Mat grad;
  double h = 0.0;
  bool floored = false;
};

/// Row i = grad_{x_i} log Phi_t with log Phi_t = -(alpha_t/2) sum_{i,j} k_t(x_i, x_j) (optionally / n).
PotentialGrad potential_gradient(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule);
double log_phi(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule);
/// Per-particle Laplacians Delta_{x_i} log Phi_t (Euclidean RBF with a state-independent bandwidth).
Vec potential_laplacian(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule);

}  // namespace pglab
