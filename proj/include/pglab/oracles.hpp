#pragma once

#include <functional>
#include <vector>

#include "pglab/learned.hpp"

namespace pglab {

struct Summary {
  double mean = 0.0;
  double stderr_mean = 0.0;
  double median = 0.0;
  std::size_t count = 0;
  bool stderr_defined = false;
};

Summary summarize(const std::vector<double>& values);

/// Number of centers with at least one particle within `threshold` (closed ball; wrapped distance on the torus).
int mode_coverage(const Mat& x, const Mat& centers, double threshold, Space space = Space::Euclidean);
/// Index of the nearest center within threshold, or -1.
int nearest_mode(const Vec& x, const Mat& centers, double threshold, Space space = Space::Euclidean);

/// N (1 - ((N-1)/N)^N).
double expected_modes_iid(int N);
/// N H_N.
double coupon_collector_mean(int N);

using FeatureFn = std::function<Vec(const Vec&)>;

struct SimilarityResult {
  double value = 0.0;
  bool excluded_pairs = false;
};

/// Mean pairwise cosine similarity of features over ordered pairs i != j; identity features by default.
SimilarityResult in_batch_similarity(const Mat& x, const FeatureFn& feature = nullptr);

Summary expected_log_phi(const std::vector<Mat>& sets, const LogPhiFn& log_phi0);

struct ReweightResult {
  std::vector<Mat> sets;
  std::vector<std::size_t> indices;
  double ess = 0.0;
  bool low_ess = false;
};

/// Multinomial resampling of a pool with log-weights (max-shifted before exponentiation).
ReweightResult resample_pool(const std::vector<Mat>& pool, const std::vector<double>& log_w, int num_sets,
                             RngStream& rng);
/// Importance resampling of I.I.D. n-tuples with weights proportional to Phi_0.
ReweightResult reweighted_sampler(const MixtureTarget& target, const LogPhiFn& log_phi0, int pool_size, int n,
                                  int num_sets, RngStream& rng);
std::vector<Mat> iid_exact_sets(const MixtureTarget& target, int count, int n, RngStream& rng);

/// 0.5 * sum |p/sum(p) - q/sum(q)|.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct FkOptions {
  int num_paths = 100000;
  int steps = 200;
  bool heun = true;  // stochastic Heun path + trapezoid weight; false: Euler–Maruyama + left Riemann
  PriorKind terminal = PriorKind::Exact;
  int block = 500;
  int threads = 1;
};

struct FkEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
  double log_value = 0.0;
};

/// Streaming mean of exp(log w) with a running max shift.
struct LogMeanAccumulator {
  double shift = -1e300;
  double s = 0.0;
  double s2 = 0.0;
  long count = 0;
  void add(double lw);
  void merge(const LogMeanAccumulator& other);
  FkEstimate estimate() const;
};

/// Feynman–Kac estimate of the guided joint density at each n x d tuple; spec == nullptr means Phi = 1.
std::vector<FkEstimate> feynman_kac_density(const MixtureTarget& target, const PotentialSpec* spec,
                                            const std::vector<Mat>& points, const FkOptions& opt,
                                            const NoiseSchedule& schedule, const RngStream& rng);

/// Same estimator for n = 2, d = 1 on a product grid; entry [a * G + b] is the estimate at (grid[a], grid[b]).
std::vector<FkEstimate> feynman_kac_product_grid(const MixtureTarget& target, const PotentialSpec* spec,
                                                 const std::vector<double>& grid, const FkOptions& opt,
                                                 const NoiseSchedule& schedule, const RngStream& rng);

}  // namespace pglab
