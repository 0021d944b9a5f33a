#include "pglab/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pglab {

namespace {
void require_positive_h(double h) {
  if (!(h > 0)) throw DomainError("kernel bandwidth must be positive");
}

double angle_of(const Vec& x) {
  const double r2 = x.squaredNorm();
  if (r2 == 0.0) throw DomainError("radial kernel undefined at the origin");
  return std::atan2(x[1], x[0]);
}

// d theta / d x for a 2D point.
Vec angle_grad(const Vec& x) {
  const double r2 = x.squaredNorm();
  Vec g(2);
  g << -x[1] / r2, x[0] / r2;
  return g;
}

Vec wrapped_diff(const Vec& a, const Vec& b) {
  Vec d(a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) d[j] = wrap_angle(a[j] - b[j]);
  return d;
}

Vec apply_perm(const Permutation& p, const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index m = 0; m < v.size(); ++m) out[m] = v[p[static_cast<std::size_t>(m)]];
  return out;
}

bool is_identity(const Permutation& p) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i)) return false;
  return true;
}
}  // namespace

KernelEval rbf_kernel(const Vec& x, const Vec& y, double h) {
  require_positive_h(h);
  KernelEval e;
  const Vec diff = x - y;
  e.value = std::exp(-diff.squaredNorm() / h);
  e.grad_x = -(2.0 / h) * e.value * diff;
  e.grad_y = -e.grad_x;
  return e;
}

KernelEval radial_kernel(const Vec& x, const Vec& y, double h) {
  require_positive_h(h);
  if (x.size() != 2 || y.size() != 2) throw DomainError("radial kernel needs 2D points");
  const double dth = wrap_angle(angle_of(x) - angle_of(y));
  KernelEval e;
  e.value = std::exp(-dth * dth / h);
  const double dk = -(2.0 / h) * dth * e.value;
  e.grad_x = dk * angle_grad(x);
  e.grad_y = -dk * angle_grad(y);
  return e;
}

KernelEval torus_kernel(const Vec& ti, const Vec& tj, double h) {
  require_positive_h(h);
  const Vec diff = wrapped_diff(ti, tj);
  KernelEval e;
  e.value = std::exp(-diff.squaredNorm() / h);
  e.grad_x = -(2.0 / h) * e.value * diff;
  e.grad_y = -e.grad_x;
  return e;
}

KernelEval perm_invariant_kernel(const Vec& ti, const Vec& tj, const std::vector<Permutation>& perm_set, double h) {
  if (perm_set.empty()) throw DomainError("permutation set is empty");
  require_positive_h(h);
  std::size_t best = 0;
  double best_val = 0.0;
  for (std::size_t p = 0; p < perm_set.size(); ++p) {
    const double v = std::exp(-wrapped_diff(ti, apply_perm(perm_set[p], tj)).squaredNorm() / h);
    if (p == 0 || v < best_val) {
      best = p;
      best_val = v;
    }
  }
  const Permutation& P = perm_set[best];
  const Vec diff = wrapped_diff(ti, apply_perm(P, tj));
  KernelEval e;
  e.value = best_val;
  e.grad_x = -(2.0 / h) * e.value * diff;
  e.grad_y = Vec::Zero(tj.size());
  for (Eigen::Index m = 0; m < diff.size(); ++m) e.grad_y[P[static_cast<std::size_t>(m)]] += (2.0 / h) * e.value * diff[m];
  return e;
}

double alpha_at(const PotentialSpec& spec, double t, const NoiseSchedule& schedule) {
  return log_interp(spec.alpha0, spec.alpha1, t, schedule.T);
}

double kernel_distance(const PotentialSpec& spec, const Vec& x, const Vec& y) {
  switch (spec.kernel) {
    case KernelKind::RbfEuclidean:
      return (x - y).norm();
    case KernelKind::RbfRadial:
      return std::abs(wrap_angle(angle_of(x) - angle_of(y)));
    case KernelKind::RbfTorus:
      return wrapped_diff(x, y).norm();
    case KernelKind::PermInvariantTorus: {
      double best = -1.0;
      for (const Permutation& p : spec.perm_set) {
        const double v = wrapped_diff(x, apply_perm(p, y)).norm();
        if (best < 0 || v < best) best = v;
      }
      return best;
    }
  }
  return 0.0;
}

Bandwidth bandwidth(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule) {
  switch (spec.rule) {
    case BandwidthRule::Fixed:
      require_positive_h(spec.h0);
      return {spec.h0};
    case BandwidthRule::SigmaSq:
      return {schedule.sigma2(t)};
    case BandwidthRule::LogInterp:
      return {log_interp(spec.h0, spec.h1, t, schedule.T)};
    case BandwidthRule::MedianHeuristic: {
      const int n = static_cast<int>(x.rows());
      if (n < 2) throw DomainError("median heuristic needs n >= 2");
      std::vector<double> d;
      d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d.push_back(kernel_distance(spec, x.row(i).transpose(), x.row(j).transpose()));
      const std::size_t mid = (d.size() - 1) / 2;
      std::nth_element(d.begin(), d.begin() + static_cast<long>(mid), d.end());
      const double m = d[mid];
      const double h = m * m / std::log(static_cast<double>(n));
      if (!(h > 1e-6)) return {1e-6, true};
      return {h};
    }
  }
  return {1.0};
}

std::vector<Permutation> subsample_perms(const std::vector<Permutation>& perms, int cap, std::uint64_t seed) {
  if (perms.empty()) throw DomainError("permutation set is empty");
  if (static_cast<int>(perms.size()) <= cap) return perms;
  std::vector<Permutation> out;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < perms.size(); ++i) {
    if (out.empty() && is_identity(perms[i]))
      out.push_back(perms[i]);
    else
      rest.push_back(i);
  }
  RngStream rng(seed, 0x7065726dULL);
  const std::size_t want = static_cast<std::size_t>(cap) - out.size();
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.next_u64() % (rest.size() - k));
    std::swap(rest[k], rest[j]);
  }
  rest.resize(want);
  std::sort(rest.begin(), rest.end());
  for (std::size_t i : rest) out.push_back(perms[i]);
  return out;
}

KernelEval kernel_eval(const PotentialSpec& spec, const Vec& x, const Vec& y, double h) {
  switch (spec.kernel) {
    case KernelKind::RbfEuclidean:
      return rbf_kernel(x, y, h);
    case KernelKind::RbfRadial:
      return radial_kernel(x, y, h);
    case KernelKind::RbfTorus:
      return torus_kernel(x, y, h);
    case KernelKind::PermInvariantTorus:
      return perm_invariant_kernel(x, y, spec.perm_set, h);
  }
  return {};
}

namespace {
double norm_factor(const PotentialSpec& spec, int n) {
  return spec.normalization == Normalization::OverN ? 1.0 / n : 1.0;
}
}  // namespace

PotentialGrad potential_gradient(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  PotentialGrad out;
  out.grad = Mat::Zero(n, d);
  if (n < 2 && !(spec.kernel == KernelKind::PermInvariantTorus && spec.rule != BandwidthRule::MedianHeuristic)) {
    out.h = spec.rule == BandwidthRule::MedianHeuristic ? 0.0 : bandwidth(spec, x, t, schedule).h;
    return out;
  }
  const Bandwidth bw = bandwidth(spec, x, t, schedule);
  out.h = bw.h;
  out.floored = bw.floored;
  const double h = bw.h;
  const double a = alpha_at(spec, t, schedule) * norm_factor(spec, n);

  switch (spec.kernel) {
    case KernelKind::RbfEuclidean:
    case KernelKind::RbfTorus: {
      const bool torus = spec.kernel == KernelKind::RbfTorus;
      // grad_i = -(a/2) sum_j [d1 k(x_i,x_j) + d2 k(x_j,x_i)] = -a sum_j d1 k(x_i, x_j)
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          double r2 = 0.0;
          double diff[16];
          for (int c = 0; c < d && c < 16; ++c) {
            double df = x(i, c) - x(j, c);
            if (torus) df = wrap_angle(df);
            diff[c] = df;
            r2 += df * df;
          }
          if (d > 16) {
            const KernelEval e = kernel_eval(spec, x.row(i).transpose(), x.row(j).transpose(), h);
            out.grad.row(i) -= a * e.grad_x.transpose();
            out.grad.row(j) -= a * e.grad_y.transpose();
            continue;
          }
          const double k = std::exp(-r2 / h);
          const double c0 = a * (2.0 / h) * k;
          for (int c = 0; c < d; ++c) {
            out.grad(i, c) += c0 * diff[c];
            out.grad(j, c) -= c0 * diff[c];
          }
        }
      }
      break;
    }
    case KernelKind::RbfRadial: {
      if (d != 2) throw DomainError("radial kernel needs 2D points");
      std::vector<double> th(static_cast<std::size_t>(n));
      Mat jac(n, 2);
      for (int i = 0; i < n; ++i) {
        const double r2 = x(i, 0) * x(i, 0) + x(i, 1) * x(i, 1);
        if (r2 == 0.0) throw DomainError("radial kernel undefined at the origin");
        th[static_cast<std::size_t>(i)] = std::atan2(x(i, 1), x(i, 0));
        jac(i, 0) = -x(i, 1) / r2;
        jac(i, 1) = x(i, 0) / r2;
      }
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const double dth = wrap_angle(th[static_cast<std::size_t>(i)] - th[static_cast<std::size_t>(j)]);
          s += (2.0 / h) * dth * std::exp(-dth * dth / h);
        }
        out.grad(i, 0) = a * s * jac(i, 0);
        out.grad(i, 1) = a * s * jac(i, 1);
      }
      break;
    }
    case KernelKind::PermInvariantTorus: {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const KernelEval e = perm_invariant_kernel(x.row(i).transpose(), x.row(j).transpose(), spec.perm_set, h);
          out.grad.row(i) -= 0.5 * a * e.grad_x.transpose();
          out.grad.row(j) -= 0.5 * a * e.grad_y.transpose();
        }
      break;
    }
  }
  return out;
}

double log_phi(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule) {
  const int n = static_cast<int>(x.rows());
  if (n < 1) return 0.0;
  const double h = n < 2 && spec.rule == BandwidthRule::MedianHeuristic ? 1.0 : bandwidth(spec, x, t, schedule).h;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += kernel_eval(spec, x.row(i).transpose(), x.row(j).transpose(), h).value;
  return -0.5 * alpha_at(spec, t, schedule) * norm_factor(spec, n) * s;
}

Vec potential_laplacian(const PotentialSpec& spec, const Mat& x, double t, const NoiseSchedule& schedule) {
  if (spec.kernel != KernelKind::RbfEuclidean || spec.rule == BandwidthRule::MedianHeuristic)
    throw DomainError("closed-form Laplacian needs the Euclidean RBF with a state-independent bandwidth");
  const int n = static_cast<int>(x.rows());
  const double d = static_cast<double>(x.cols());
  Vec out = Vec::Zero(n);
  if (n < 2) return out;
  const double h = bandwidth(spec, x, t, schedule).h;
  const double a = alpha_at(spec, t, schedule) * norm_factor(spec, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r2 = (x.row(i) - x.row(j)).squaredNorm();
      const double k = std::exp(-r2 / h);
      out[i] -= a * k * (4.0 * r2 / (h * h) - 2.0 * d / h);
    }
  return out;
}

}  // namespace pglab
