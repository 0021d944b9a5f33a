#include "pglab/targets.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace pglab {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;

void require_space(const MixtureTarget& t, Space s) {
  if (t.space != s)
    throw DomainError(s == Space::Euclidean ? "operation needs a Euclidean target" : "operation needs a torus target");
}

// Log of each component's weighted density at x (Euclidean); fills diffs.
void component_logs(const MixtureTarget& target, const Vec& x, double extra_var, std::vector<double>& logs) {
  const int d = static_cast<int>(x.size());
  logs.resize(target.components.size());
  for (std::size_t k = 0; k < target.components.size(); ++k) {
    const Component& c = target.components[k];
    const double v = c.variance + extra_var;
    const double r2 = (x - c.mean).squaredNorm();
    logs[k] = std::log(c.weight) - 0.5 * d * (kLog2Pi + std::log(v)) - 0.5 * r2 / v;
  }
}

double log_sum_exp(const std::vector<double>& a) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : a) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : a) s += std::exp(v - m);
  return m + std::log(s);
}

// Wrapped-component terms: log weight of each (component, lattice offset) image.
template <class F>
void for_each_image(const MixtureTarget& target, const Vec& tau, double extra_var, F&& f) {
  const int d = static_cast<int>(tau.size());
  const int K = target.wrap_order;
  const int width = 2 * K + 1;
  long total = 1;
  for (int j = 0; j < d; ++j) total *= width;
  Vec diff(d);
  for (std::size_t k = 0; k < target.components.size(); ++k) {
    const Component& c = target.components[k];
    const double v = c.variance + extra_var;
    for (long code = 0; code < total; ++code) {
      long rem = code;
      for (int j = 0; j < d; ++j) {
        const int off = static_cast<int>(rem % width) - K;
        rem /= width;
        diff[j] = wrap_angle(tau[j] - c.mean[j]) + 2.0 * std::numbers::pi * off;
      }
      const double lw = std::log(c.weight) - 0.5 * d * (kLog2Pi + std::log(v)) - 0.5 * diff.squaredNorm() / v;
      f(lw, diff, v);
    }
  }
}
}  // namespace

int MixtureTarget::dim() const {
  if (components.empty()) throw DomainError("mixture has no components");
  return static_cast<int>(components.front().mean.size());
}

void MixtureTarget::validate() const {
  const int d = dim();
  double s = 0.0;
  for (const Component& c : components) {
    if (!(c.weight > 0) || !(c.variance > 0) || c.mean.size() != d)
      throw DomainError("component needs positive weight, positive variance and consistent dimension");
    s += c.weight;
  }
  if (std::abs(s - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
  if (space == Space::Torus && wrap_order < 1) throw DomainError("wrap order must be >= 1");
}

Mat MixtureTarget::means() const {
  Mat m(static_cast<Eigen::Index>(components.size()), dim());
  for (std::size_t k = 0; k < components.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = components[k].mean.transpose();
  return m;
}

MixtureTarget ring_mixture(int N, double radius, double variance) {
  if (N < 1) throw DomainError("ring needs N >= 1");
  MixtureTarget t;
  for (int k = 0; k < N; ++k) {
    const double a = 2.0 * std::numbers::pi * k / N;
    Vec m(2);
    m << radius * std::cos(a), radius * std::sin(a);
    t.components.push_back({1.0 / N, m, variance});
  }
  return t;
}

MixtureTarget hex_center_mixture(double variance) {
  MixtureTarget t;
  t.components.push_back({0.4, Vec::Zero(2), variance});
  for (int k = 0; k < 6; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 6;
    Vec m(2);
    m << std::cos(a), std::sin(a);
    t.components.push_back({0.1, m, variance});
  }
  return t;
}

MixtureTarget gaussian_target(const Vec& mean, double variance) {
  MixtureTarget t;
  t.components.push_back({1.0, mean, variance});
  return t;
}

MixtureTarget bimodal_1d(double offset, double variance) {
  MixtureTarget t;
  t.components.push_back({0.5, Vec::Constant(1, -offset), variance});
  t.components.push_back({0.5, Vec::Constant(1, offset), variance});
  return t;
}

MixtureTarget wrapped_mixture(const std::vector<Component>& comps, int wrap_order) {
  MixtureTarget t;
  t.components = comps;
  t.space = Space::Torus;
  t.wrap_order = wrap_order;
  return t;
}

double mixture_log_density(const MixtureTarget& target, const Vec& x, double extra_var) {
  if (target.space == Space::Torus) {
    std::vector<double> logs;
    for_each_image(target, x, extra_var, [&](double lw, const Vec&, double) { logs.push_back(lw); });
    return log_sum_exp(logs);
  }
  std::vector<double> logs;
  component_logs(target, x, extra_var, logs);
  return log_sum_exp(logs);
}

Vec mixture_score(const MixtureTarget& target, const Vec& x, double extra_var) {
  Vec out = Vec::Zero(x.size());
  if (target.space == Space::Torus) {
    std::vector<double> logs;
    std::vector<Vec> grads;
    for_each_image(target, x, extra_var, [&](double lw, const Vec& diff, double v) {
      logs.push_back(lw);
      grads.push_back(-diff / v);
    });
    const double lse = log_sum_exp(logs);
    for (std::size_t k = 0; k < logs.size(); ++k) out += std::exp(logs[k] - lse) * grads[k];
    return out;
  }
  std::vector<double> logs;
  component_logs(target, x, extra_var, logs);
  const double lse = log_sum_exp(logs);
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const Component& c = target.components[k];
    out -= std::exp(logs[k] - lse) * (x - c.mean) / (c.variance + extra_var);
  }
  return out;
}

double mixture_laplacian_log(const MixtureTarget& target, const Vec& x, double extra_var) {
  require_space(target, Space::Euclidean);
  const double d = static_cast<double>(x.size());
  std::vector<double> logs;
  component_logs(target, x, extra_var, logs);
  const double lse = log_sum_exp(logs);
  Vec score = Vec::Zero(x.size());
  double lap_over_p = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    const Component& c = target.components[k];
    const double v = c.variance + extra_var;
    const double r = std::exp(logs[k] - lse);
    const Vec diff = x - c.mean;
    score -= r * diff / v;
    lap_over_p += r * (diff.squaredNorm() / (v * v) - d / v);
  }
  return lap_over_p - score.squaredNorm();
}

double gmm_log_density_t(const MixtureTarget& target, const Vec& x, double t, const NoiseSchedule& schedule) {
  require_space(target, Space::Euclidean);
  return mixture_log_density(target, x, schedule.sigma2(t));
}

double gmm_density_t(const MixtureTarget& target, const Vec& x, double t, const NoiseSchedule& schedule) {
  return std::exp(gmm_log_density_t(target, x, t, schedule));
}

Vec gmm_score_t(const MixtureTarget& target, const Vec& x, double t, const NoiseSchedule& schedule) {
  require_space(target, Space::Euclidean);
  return mixture_score(target, x, schedule.sigma2(t));
}

Vec wrapped_mixture_score_t(const MixtureTarget& target, const Vec& tau, double t, const NoiseSchedule& schedule) {
  require_space(target, Space::Torus);
  return mixture_score(target, tau, schedule.sigma2(t));
}

double wrapped_log_density_t(const MixtureTarget& target, const Vec& tau, double t, const NoiseSchedule& schedule) {
  require_space(target, Space::Torus);
  return mixture_log_density(target, tau, schedule.sigma2(t));
}

void mixture_score_into(const MixtureTarget& target, const double* x, int d, double extra_var, double* out,
                        double* laplacian) {
  if (target.space == Space::Torus) {
    const Vec xv = Eigen::Map<const Vec>(x, d);
    const Vec s = mixture_score(target, xv, extra_var);
    for (int j = 0; j < d; ++j) out[j] = s[j];
    if (laplacian) throw DomainError("laplacian needs a Euclidean target");
    return;
  }
  thread_local std::vector<double> logs;
  const std::size_t K = target.components.size();
  logs.resize(K);
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const Component& c = target.components[k];
    const double v = c.variance + extra_var;
    double r2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double df = x[j] - c.mean[j];
      r2 += df * df;
    }
    logs[k] = std::log(c.weight) - 0.5 * d * std::log(v) - 0.5 * r2 / v;
    m = std::max(m, logs[k]);
  }
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    logs[k] = std::exp(logs[k] - m);
    z += logs[k];
  }
  for (int j = 0; j < d; ++j) out[j] = 0.0;
  double lap = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const Component& c = target.components[k];
    const double v = c.variance + extra_var;
    const double r = logs[k] / z;
    double r2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double df = x[j] - c.mean[j];
      out[j] -= r * df / v;
      r2 += df * df;
    }
    lap += r * (r2 / (v * v) - d / v);
  }
  if (laplacian) {
    double s2 = 0.0;
    for (int j = 0; j < d; ++j) s2 += out[j] * out[j];
    *laplacian = lap - s2;
  }
}

Mat score_rows_var(const MixtureTarget& target, const Mat& x, double extra_var) {
  Mat out(x.rows(), x.cols());
  const int d = static_cast<int>(x.cols());
  double xi[16];
  double oi[16];
  if (d > 16) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out.row(i) = mixture_score(target, x.row(i).transpose(), extra_var).transpose();
    return out;
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < d; ++j) xi[j] = x(i, j);
    mixture_score_into(target, xi, d, extra_var, oi, nullptr);
    for (int j = 0; j < d; ++j) out(i, j) = oi[j];
  }
  return out;
}

Mat score_rows(const MixtureTarget& target, const Mat& x, double t, const NoiseSchedule& schedule) {
  return score_rows_var(target, x, schedule.sigma2(t));
}

Vec sample_mixture(const MixtureTarget& target, double extra_var, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t k = 0;
  for (; k + 1 < target.components.size(); ++k) {
    acc += target.components[k].weight;
    if (u < acc) break;
  }
  const Component& c = target.components[k];
  const double s = std::sqrt(c.variance + extra_var);
  Vec x(c.mean.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = c.mean[j] + s * rng.normal();
  if (target.space == Space::Torus)
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = wrap_angle(x[j]);
  return x;
}

}  // namespace pglab
