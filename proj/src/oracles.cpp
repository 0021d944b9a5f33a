#include "pglab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pglab/parallel.hpp"

namespace pglab {

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stderr_mean = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    s.stderr_defined = true;
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  return s;
}

namespace {
double point_distance(const Vec& a, const Eigen::RowVectorXd& c, Space space) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    double d = a[j] - c[j];
    if (space == Space::Torus) d = wrap_angle(d);
    s += d * d;
  }
  return std::sqrt(s);
}
}  // namespace

int nearest_mode(const Vec& x, const Mat& centers, double threshold, Space space) {
  int best = -1;
  double best_d = 0.0;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = point_distance(x, centers.row(c), space);
    if (d <= threshold && (best < 0 || d < best_d)) {
      best = static_cast<int>(c);
      best_d = d;
    }
  }
  return best;
}

int mode_coverage(const Mat& x, const Mat& centers, double threshold, Space space) {
  if (!(threshold > 0)) throw DomainError("mode threshold must be positive");
  int covered = 0;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (point_distance(x.row(i).transpose(), centers.row(c), space) <= threshold) {
        ++covered;
        break;
      }
    }
  }
  return covered;
}

double expected_modes_iid(int N) {
  if (N < 1) throw DomainError("N must be >= 1");
  const double n = static_cast<double>(N);
  return n * (1.0 - std::pow((n - 1.0) / n, n));
}

double coupon_collector_mean(int N) {
  if (N < 1) throw DomainError("N must be >= 1");
  double h = 0.0;
  for (int k = N; k >= 1; --k) h += 1.0 / k;
  return N * h;
}

SimilarityResult in_batch_similarity(const Mat& x, const FeatureFn& feature) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw DomainError("similarity needs n >= 2");
  std::vector<Vec> f;
  f.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) f.push_back(feature ? feature(x.row(i).transpose()) : Vec(x.row(i).transpose()));
  SimilarityResult r;
  double sum = 0.0;
  long pairs = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ni = f[static_cast<std::size_t>(i)].norm();
      const double nj = f[static_cast<std::size_t>(j)].norm();
      if (ni == 0.0 || nj == 0.0) {
        r.excluded_pairs = true;
        continue;
      }
      sum += f[static_cast<std::size_t>(i)].dot(f[static_cast<std::size_t>(j)]) / (ni * nj);
      ++pairs;
    }
  r.value = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
  return r;
}

Summary expected_log_phi(const std::vector<Mat>& sets, const LogPhiFn& log_phi0) {
  if (sets.empty()) throw DomainError("no sets");
  std::vector<double> v;
  v.reserve(sets.size());
  for (const Mat& s : sets) v.push_back(log_phi0(s));
  return summarize(v);
}

std::vector<Mat> iid_exact_sets(const MixtureTarget& target, int count, int n, RngStream& rng) {
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Mat x(n, target.dim());
    for (int i = 0; i < n; ++i) x.row(i) = sample_mixture(target, 0.0, rng).transpose();
    out.push_back(std::move(x));
  }
  return out;
}

ReweightResult resample_pool(const std::vector<Mat>& pool, const std::vector<double>& log_w, int num_sets,
                             RngStream& rng) {
  if (pool.empty() || pool.size() != log_w.size()) throw DomainError("pool and weights must be non-empty and aligned");
  const double mx = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(mx)) throw DomainError("weights are not normalizable");
  std::vector<double> cdf(pool.size());
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double w = std::exp(log_w[i] - mx);
    acc += w;
    acc2 += w * w;
    cdf[i] = acc;
  }
  ReweightResult r;
  r.ess = acc * acc / acc2;
  r.low_ess = r.ess < 50.0;
  for (int s = 0; s < num_sets; ++s) {
    const double u = rng.uniform() * acc;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (k >= pool.size()) k = pool.size() - 1;
    r.indices.push_back(k);
    r.sets.push_back(pool[k]);
  }
  return r;
}

ReweightResult reweighted_sampler(const MixtureTarget& target, const LogPhiFn& log_phi0, int pool_size, int n,
                                  int num_sets, RngStream& rng) {
  const std::vector<Mat> pool = iid_exact_sets(target, pool_size, n, rng);
  std::vector<double> lw;
  lw.reserve(pool.size());
  for (const Mat& s : pool) lw.push_back(log_phi0(s));
  return resample_pool(pool, lw, num_sets, rng);
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DomainError("histograms differ in size");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * tv;
}

void LogMeanAccumulator::add(double lw) {
  if (lw > shift) {
    const double f = std::exp(shift - lw);
    s *= f;
    s2 *= f * f;
    shift = lw;
  }
  const double w = std::exp(lw - shift);
  s += w;
  s2 += w * w;
  ++count;
}

void LogMeanAccumulator::merge(const LogMeanAccumulator& o) {
  if (o.count == 0) return;
  if (o.shift > shift) {
    const double f = std::exp(shift - o.shift);
    s *= f;
    s2 *= f * f;
    shift = o.shift;
  }
  const double f = std::exp(o.shift - shift);
  s += o.s * f;
  s2 += o.s2 * f * f;
  count += o.count;
}

FkEstimate LogMeanAccumulator::estimate() const {
  FkEstimate e;
  if (count == 0) return e;
  const double N = static_cast<double>(count);
  const double m = s / N;
  e.log_value = shift + std::log(m);
  e.value = std::exp(e.log_value);
  if (count > 1) {
    const double var = std::max(0.0, (s2 - N * m * m) / (N - 1.0));
    e.stderr_value = std::exp(shift) * std::sqrt(var / N);
  }
  return e;
}

namespace {

double terminal_log_density(const MixtureTarget& target, const double* x, int d, PriorKind kind,
                            const NoiseSchedule& schedule) {
  if (kind == PriorKind::Exact) {
    const Vec v = Eigen::Map<const Vec>(x, d);
    return mixture_log_density(target, v, schedule.sigma2(schedule.T));
  }
  const double s2 = schedule.sigma_max * schedule.sigma_max;
  double r = 0.0;
  for (int j = 0; j < d; ++j) r += -0.5 * std::log(2.0 * std::numbers::pi * s2) - 0.5 * x[j] * x[j] / s2;
  return r;
}

// V-hat at (t, X); fills the score rows of X.
double vhat(const MixtureTarget& target, const PotentialSpec* spec, const Mat& x, double t,
            const NoiseSchedule& schedule, Mat& score) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  score.resize(n, d);
  const double s2 = schedule.sigma2(t);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double xi[16], si[16], lap = 0.0;
    for (int j = 0; j < d; ++j) xi[j] = x(i, j);
    mixture_score_into(target, xi, d, s2, si, &lap);
    for (int j = 0; j < d; ++j) score(i, j) = si[j];
    total += lap;
  }
  if (spec && n > 1) {
    const Mat G = potential_gradient(*spec, x, t, schedule).grad;
    const Vec L = potential_laplacian(*spec, x, t, schedule);
    total += (G.array() * (G + score).array()).sum() + L.sum();
  }
  return schedule.g2(t) * total;
}

double node_weight(int k, int steps, bool heun) {
  if (heun) return (k == 0 || k == steps) ? 0.5 : 1.0;
  return k < steps ? 1.0 : 0.0;
}

}  // namespace

std::vector<FkEstimate> feynman_kac_density(const MixtureTarget& target, const PotentialSpec* spec,
                                            const std::vector<Mat>& points, const FkOptions& opt,
                                            const NoiseSchedule& schedule, const RngStream& rng) {
  if (target.space != Space::Euclidean) throw DomainError("Feynman-Kac estimator needs a Euclidean target");
  if (opt.num_paths < 1 || opt.steps < 1 || opt.block < 1) throw DomainError("Feynman-Kac options invalid");
  const std::size_t blocks_per_point = static_cast<std::size_t>((opt.num_paths + opt.block - 1) / opt.block);
  std::vector<LogMeanAccumulator> partial(points.size() * blocks_per_point);
  parallel_for(partial.size(), opt.threads, [&](std::size_t job) {
    const std::size_t pi = job / blocks_per_point;
    const std::size_t bi = job % blocks_per_point;
    const Mat& x0 = points[pi];
    const int n = static_cast<int>(x0.rows());
    const int d = static_cast<int>(x0.cols());
    const RngStream point_rng = rng.child(pi);
    const int p_begin = static_cast<int>(bi) * opt.block;
    const int p_end = std::min(opt.num_paths, p_begin + opt.block);
    const double dt = schedule.T / opt.steps;
    LogMeanAccumulator acc;
    Mat score, score_pred, xi(n, d);
    for (int p = p_begin; p < p_end; ++p) {
      RngStream r = point_rng.child(static_cast<std::uint64_t>(p));
      Mat x = x0;
      double lw = 0.0;
      double v = vhat(target, spec, x, 0.0, schedule, score);
      for (int k = 0; k < opt.steps; ++k) {
        const double t0 = k * dt;
        const double t1 = k + 1 == opt.steps ? schedule.T : (k + 1) * dt;
        lw -= node_weight(k, opt.steps, opt.heun) * dt * v;
        const double noise = std::sqrt(schedule.sigma2(t1) - schedule.sigma2(t0));
        for (Eigen::Index q = 0; q < xi.size(); ++q) xi.data()[q] = r.normal();
        const Mat b0 = -schedule.g2(t0) * score;
        if (opt.heun) {
          const Mat xp = x + dt * b0 + noise * xi;
          score_pred = score_rows(target, xp, t1, schedule);
          x = x + 0.5 * dt * (b0 - schedule.g2(t1) * score_pred) + noise * xi;
        } else {
          x = x + dt * b0 + noise * xi;
        }
        v = vhat(target, spec, x, t1, schedule, score);
      }
      lw -= node_weight(opt.steps, opt.steps, opt.heun) * dt * v;
      for (int i = 0; i < n; ++i) {
        double row[16];
        for (int j = 0; j < d; ++j) row[j] = x(i, j);
        lw += terminal_log_density(target, row, d, opt.terminal, schedule);
      }
      acc.add(lw);
    }
    partial[job] = acc;
  });
  std::vector<FkEstimate> out;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    LogMeanAccumulator acc;
    for (std::size_t bi = 0; bi < blocks_per_point; ++bi) acc.merge(partial[pi * blocks_per_point + bi]);
    out.push_back(acc.estimate());
  }
  return out;
}

std::vector<FkEstimate> feynman_kac_product_grid(const MixtureTarget& target, const PotentialSpec* spec,
                                                 const std::vector<double>& grid, const FkOptions& opt,
                                                 const NoiseSchedule& schedule, const RngStream& rng) {
  if (target.space != Space::Euclidean || target.dim() != 1) throw DomainError("product grid needs a 1D target");
  if (spec && (spec->kernel != KernelKind::RbfEuclidean || spec->rule == BandwidthRule::MedianHeuristic))
    throw DomainError("product grid needs a Euclidean RBF with a state-independent bandwidth");
  if (opt.num_paths < 1 || opt.steps < 1 || opt.block < 1) throw DomainError("Feynman-Kac options invalid");
  const int G = static_cast<int>(grid.size());
  const std::size_t cells = static_cast<std::size_t>(G) * static_cast<std::size_t>(G);
  const std::size_t blocks = static_cast<std::size_t>((opt.num_paths + opt.block - 1) / opt.block);
  std::vector<std::vector<LogMeanAccumulator>> partial(blocks);
  const double dt = schedule.T / opt.steps;
  const double norm = spec && spec->normalization == Normalization::OverN ? 0.5 : 1.0;
  Mat dummy = Mat::Zero(2, 1);

  parallel_for(blocks, opt.threads, [&](std::size_t bi) {
    std::vector<LogMeanAccumulator> acc(cells);
    std::vector<double> lw(cells);
    std::vector<double> x(2 * static_cast<std::size_t>(G)), s(x.size()), lap(x.size()), xp(x.size()), sp(x.size()),
        xi(x.size());
    const int p_begin = static_cast<int>(bi) * opt.block;
    const int p_end = std::min(opt.num_paths, p_begin + opt.block);
    auto eval_scores = [&](const std::vector<double>& pos, double t, std::vector<double>& out, std::vector<double>* lp) {
      const double s2 = schedule.sigma2(t);
      for (std::size_t q = 0; q < pos.size(); ++q) mixture_score_into(target, &pos[q], 1, s2, &out[q], lp ? &(*lp)[q] : nullptr);
    };
    auto accumulate_node = [&](double t, double c) {
      if (c == 0.0) return;
      const double g2 = schedule.g2(t);
      double alpha = 0.0, h = 1.0;
      if (spec) {
        alpha = alpha_at(*spec, t, schedule) * norm;
        h = bandwidth(*spec, dummy, t, schedule).h;
      }
      for (int a = 0; a < G; ++a) {
        const double x1 = x[static_cast<std::size_t>(a)];
        const double s1 = s[static_cast<std::size_t>(a)];
        const double u1 = lap[static_cast<std::size_t>(a)];
        double* row = &lw[static_cast<std::size_t>(a) * static_cast<std::size_t>(G)];
        for (int b = 0; b < G; ++b) {
          const std::size_t jb = static_cast<std::size_t>(G + b);
          double v = u1 + lap[jb];
          if (spec) {
            const double r = x1 - x[jb];
            const double r2 = r * r;
            const double k = std::exp(-r2 / h);
            const double g1 = (2.0 * alpha / h) * r * k;
            v += 2.0 * g1 * g1 + g1 * (s1 - s[jb]) - 2.0 * alpha * k * (4.0 * r2 / (h * h) - 2.0 / h);
          }
          row[b] -= c * dt * g2 * v;
        }
      }
    };
    for (int p = p_begin; p < p_end; ++p) {
      std::vector<RngStream> streams;
      streams.reserve(x.size());
      for (int slot = 0; slot < 2; ++slot)
        for (int a = 0; a < G; ++a)
          streams.push_back(rng.child(static_cast<std::uint64_t>(slot * G + a)).child(static_cast<std::uint64_t>(p)));
      for (int slot = 0; slot < 2; ++slot)
        for (int a = 0; a < G; ++a) x[static_cast<std::size_t>(slot * G + a)] = grid[static_cast<std::size_t>(a)];
      std::fill(lw.begin(), lw.end(), 0.0);
      eval_scores(x, 0.0, s, &lap);
      for (int k = 0; k < opt.steps; ++k) {
        const double t0 = k * dt;
        const double t1 = k + 1 == opt.steps ? schedule.T : (k + 1) * dt;
        accumulate_node(t0, node_weight(k, opt.steps, opt.heun));
        const double noise = std::sqrt(schedule.sigma2(t1) - schedule.sigma2(t0));
        const double g0 = schedule.g2(t0);
        for (std::size_t q = 0; q < x.size(); ++q) xi[q] = streams[q].normal();
        if (opt.heun) {
          for (std::size_t q = 0; q < x.size(); ++q) xp[q] = x[q] - dt * g0 * s[q] + noise * xi[q];
          eval_scores(xp, t1, sp, nullptr);
          const double g1 = schedule.g2(t1);
          for (std::size_t q = 0; q < x.size(); ++q) x[q] += -0.5 * dt * (g0 * s[q] + g1 * sp[q]) + noise * xi[q];
        } else {
          for (std::size_t q = 0; q < x.size(); ++q) x[q] += -dt * g0 * s[q] + noise * xi[q];
        }
        eval_scores(x, t1, s, &lap);
      }
      accumulate_node(schedule.T, node_weight(opt.steps, opt.steps, opt.heun));
      std::vector<double> term(x.size());
      for (std::size_t q = 0; q < x.size(); ++q) term[q] = terminal_log_density(target, &x[q], 1, opt.terminal, schedule);
      for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b) {
          const std::size_t c = static_cast<std::size_t>(a) * static_cast<std::size_t>(G) + static_cast<std::size_t>(b);
          acc[c].add(lw[c] + term[static_cast<std::size_t>(a)] + term[static_cast<std::size_t>(G + b)]);
        }
    }
    partial[bi] = std::move(acc);
  });
  std::vector<FkEstimate> out(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    LogMeanAccumulator acc;
    for (std::size_t bi = 0; bi < blocks; ++bi) acc.merge(partial[bi][c]);
    out[c] = acc.estimate();
  }
  return out;
}

}  // namespace pglab
