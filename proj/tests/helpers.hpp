#pragma once

#include <cmath>
#include <functional>

#include "pglab/schedule.hpp"

namespace testing {

/// Central finite-difference gradient of f at x.
inline pglab::Vec fd_grad(const std::function<double(const pglab::Vec&)>& f, const pglab::Vec& x, double eps = 1e-5) {
  pglab::Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    pglab::Vec a = x, b = x;
    a[k] += eps;
    b[k] -= eps;
    g[k] = (f(a) - f(b)) / (2 * eps);
  }
  return g;
}

inline pglab::Mat fd_grad_rows(const std::function<double(const pglab::Mat&)>& f, const pglab::Mat& x,
                               double eps = 1e-5) {
  pglab::Mat g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      pglab::Mat a = x, b = x;
      a(i, k) += eps;
      b(i, k) -= eps;
      g(i, k) = (f(a) - f(b)) / (2 * eps);
    }
  return g;
}

/// |a - b| / max(|b|, floor), maximised over entries.
inline double rel_err(const pglab::Mat& a, const pglab::Mat& b, double floor = 1e-3) {
  return ((a - b).array().abs() / b.array().abs().max(floor)).maxCoeff();
}

inline pglab::Mat random_mat(int r, int c, double scale, pglab::RngStream& rng) {
  pglab::Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = scale * rng.normal();
  return m;
}

}  // namespace testing
