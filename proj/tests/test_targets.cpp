#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pglab/targets.hpp"

using namespace pglab;

namespace {

const double kPi = std::numbers::pi;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

/// Time at which sigma^2(t) equals s2.
double time_for_var(const NoiseSchedule& s, double s2) {
  return s.T * std::log(std::sqrt(s2) / s.sigma_min) / std::log(s.sigma_max / s.sigma_min);
}

}  // namespace

TEST_CASE("ring_mixture layout") {
  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  CHECK(ring.components.size() == 10);
  double wsum = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    const Component& c = ring.components[k];
    wsum += c.weight;
    CHECK(c.variance == 0.005);
    CHECK(c.mean.norm() == doctest::Approx(1.0));
    CHECK(std::atan2(c.mean[1], c.mean[0]) == doctest::Approx(wrap_angle(2 * kPi * k / 10.0)).epsilon(1e-12));
  }
  CHECK(std::abs(wsum - 1.0) < 1e-12);

  const MixtureTarget one = ring_mixture(1, 2.0, 0.1);
  CHECK(one.components.size() == 1);
  CHECK(one.components[0].mean[0] == doctest::Approx(2.0));
  CHECK(std::abs(one.components[0].mean[1]) < 1e-15);

  const Mat m = ring_mixture(4, 1.0, 0.1).means();
  const double expect[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int k = 0; k < 4; ++k) {
    CHECK(m(k, 0) == doctest::Approx(expect[k][0]).epsilon(1e-12));
    CHECK(std::abs(m(k, 1) - expect[k][1]) < 1e-12);
  }
}

TEST_CASE("hex-center mixture weights") {
  const MixtureTarget t = hex_center_mixture(0.01);
  REQUIRE(t.components.size() == 7);
  double wsum = 0;
  int center = 0;
  for (const Component& c : t.components) {
    wsum += c.weight;
    if (c.mean.norm() < 1e-12) {
      ++center;
      CHECK(c.weight == doctest::Approx(0.4));
    } else {
      CHECK(c.weight == doctest::Approx(0.1));
      CHECK(c.mean.norm() == doctest::Approx(1.0));
    }
  }
  CHECK(center == 1);
  CHECK(std::abs(wsum - 1.0) < 1e-12);
}

TEST_CASE("target validation") {
  MixtureTarget bad;
  bad.components = {{0.5, Vec::Zero(1), 1.0}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad.components = {{1.0, Vec::Zero(1), -1.0}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("gmm_density_t closed forms") {
  NoiseSchedule tiny{1e-9, 3.0, 1.0};
  const MixtureTarget g = gaussian_target(Vec::Zero(1), 1.0);
  CHECK(gmm_density_t(g, Vec::Zero(1), 0.0, tiny) == doctest::Approx(1.0 / std::sqrt(2 * kPi)).epsilon(1e-9));
  CHECK(gmm_density_t(g, Vec::Zero(1), 0.0, tiny) == doctest::Approx(0.398942).epsilon(1e-6));

  NoiseSchedule s;
  const double t1 = time_for_var(s, 1.0);
  CHECK(s.sigma2(t1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gmm_density_t(g, Vec::Zero(1), t1, s) == doctest::Approx(1.0 / std::sqrt(4 * kPi)).epsilon(1e-9));
  CHECK(gmm_density_t(g, Vec::Zero(1), t1, s) == doctest::Approx(0.282095).epsilon(1e-6));

  const MixtureTarget bi = bimodal_1d(1.0, 0.2);
  const MixtureTarget left = gaussian_target(Vec::Constant(1, -1.0), 0.2);
  CHECK(gmm_density_t(bi, Vec::Zero(1), 0.3, s) ==
        doctest::Approx(2 * 0.5 * gmm_density_t(left, Vec::Zero(1), 0.3, s)).epsilon(1e-12));
}

TEST_CASE("gmm_score_t closed forms and symmetry") {
  NoiseSchedule s;
  const double t1 = time_for_var(s, 1.0);
  const MixtureTarget g = gaussian_target(Vec::Zero(1), 1.0);
  CHECK(gmm_score_t(g, Vec::Constant(1, 2.0), t1, s)(0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(std::abs(gmm_score_t(bimodal_1d(1.0, 0.2), Vec::Zero(1), 0.4, s)(0)) < 1e-14);
  CHECK(gmm_score_t(ring_mixture(10, 1.0, 0.005), Vec::Zero(2), 0.4, s).norm() < 1e-12);
}

TEST_CASE("wrong-space calls are rejected") {
  NoiseSchedule s;
  const MixtureTarget torus = wrapped_mixture({{1.0, Vec::Zero(1), 0.5}});
  const MixtureTarget flat = gaussian_target(Vec::Zero(1), 0.5);
  CHECK_THROWS_AS(gmm_density_t(torus, Vec::Zero(1), 0.1, s), DomainError);
  CHECK_THROWS_AS(gmm_score_t(torus, Vec::Zero(1), 0.1, s), DomainError);
  CHECK_THROWS_AS(wrapped_mixture_score_t(flat, Vec::Zero(1), 0.1, s), DomainError);
}

TEST_CASE("ring score matches finite differences") {
  NoiseSchedule s;
  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  const Vec x = v2(0.3, 0.2);
  const auto f = [&](const Vec& y) { return gmm_log_density_t(ring, y, 0.4, s); };
  const Vec fd = testing::fd_grad(f, x);
  const Vec an = gmm_score_t(ring, x, 0.4, s);
  CHECK(testing::rel_err(an, fd) < 1e-6);
}

TEST_CASE("score property suite: 100 random cases per target") {
  NoiseSchedule s;
  RngStream rng(20, 0);
  const std::vector<MixtureTarget> targets{ring_mixture(10, 1.0, 0.005), hex_center_mixture(0.01),
                                           bimodal_1d(1.0, 0.2)};
  for (const MixtureTarget& target : targets) {
    double worst = 0;
    for (int c = 0; c < 100; ++c) {
      const double t = 0.2 + 0.8 * rng.uniform();
      Vec x(target.dim());
      for (int k = 0; k < target.dim(); ++k) x[k] = 1.5 * rng.normal();
      const auto f = [&](const Vec& y) { return gmm_log_density_t(target, y, t, s); };
      worst = std::max(worst, testing::rel_err(gmm_score_t(target, x, t, s), testing::fd_grad(f, x)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("Laplacian of the log-density matches finite differences") {
  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  RngStream rng(21, 0);
  for (int c = 0; c < 100; ++c) {
    const Vec x = v2(rng.normal(), rng.normal());
    const double var = 0.05 + rng.uniform();
    const double h = 1e-4;
    double fd = 0;
    for (int k = 0; k < 2; ++k) {
      Vec a = x, b = x;
      a[k] += h;
      b[k] -= h;
      fd += (mixture_score(ring, a, var)[k] - mixture_score(ring, b, var)[k]) / (2 * h);
    }
    CHECK(mixture_laplacian_log(ring, x, var) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("fast score path agrees with the reference") {
  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  RngStream rng(22, 0);
  for (int c = 0; c < 50; ++c) {
    const Vec x = v2(rng.normal(), rng.normal());
    const double var = 0.01 + rng.uniform();
    double out[2], lap = 0;
    mixture_score_into(ring, x.data(), 2, var, out, &lap);
    const Vec ref = mixture_score(ring, x, var);
    CHECK(out[0] == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(ref[1]).epsilon(1e-12));
    CHECK(lap == doctest::Approx(mixture_laplacian_log(ring, x, var)).epsilon(1e-12));
  }
}

TEST_CASE("density integrates to one on a grid") {
  NoiseSchedule s;
  const MixtureTarget ring = ring_mixture(10, 1.0, 0.005);
  for (double t : {0.3, 0.6}) {
    const double lo = -4.0, hi = 4.0;
    const int m = 801;
    const double h = (hi - lo) / (m - 1);
    double total = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double w = (i == 0 || i == m - 1 ? 0.5 : 1.0) * (j == 0 || j == m - 1 ? 0.5 : 1.0);
        total += w * gmm_density_t(ring, v2(lo + i * h, lo + j * h), t, s);
      }
    CHECK(std::abs(total * h * h - 1.0) < 1e-3);
  }
}

TEST_CASE("wrapped score: symmetry, periodicity, truncation") {
  NoiseSchedule s;
  const MixtureTarget w = wrapped_mixture({{1.0, Vec::Zero(1), 0.2}});
  CHECK(std::abs(wrapped_mixture_score_t(w, Vec::Zero(1), 0.5, s)(0)) < 1e-14);

  const MixtureTarget w2 = wrapped_mixture({{0.6, v2(0.5, -2.0), 0.3}, {0.4, v2(-1.0, 2.5), 0.1}});
  RngStream rng(23, 0);
  for (int c = 0; c < 20; ++c) {
    const Vec tau = v2(wrap_angle(3 * rng.normal()), wrap_angle(3 * rng.normal()));
    const double t = 0.1 + 0.5 * rng.uniform();
    const Vec a = wrapped_mixture_score_t(w2, tau, t, s);
    for (int k = 0; k < 2; ++k) {
      Vec shifted = tau;
      shifted[k] += 2 * kPi;
      CHECK((wrapped_mixture_score_t(w2, shifted, t, s) - a).cwiseAbs().maxCoeff() < 1e-12);
    }
    const auto f = [&](const Vec& y) { return wrapped_log_density_t(w2, y, t, s); };
    CHECK(testing::rel_err(a, testing::fd_grad(f, tau)) < 1e-6);
  }

  const double t1 = time_for_var(s, 1.0 - 0.5);
  const MixtureTarget k3 = wrapped_mixture({{1.0, Vec::Zero(1), 0.5}}, 3);
  const MixtureTarget k6 = wrapped_mixture({{1.0, Vec::Zero(1), 0.5}}, 6);
  const double diff = std::abs(wrapped_mixture_score_t(k3, Vec::Constant(1, 1.0), t1, s)(0) -
                               wrapped_mixture_score_t(k6, Vec::Constant(1, 1.0), t1, s)(0));
  CHECK(diff < 1e-8);
}

TEST_CASE("perturbed samples match the time-t density") {
  NoiseSchedule s;
  const MixtureTarget bi = bimodal_1d(1.0, 0.2);
  RngStream rng(24, 0);
  const double t = 0.5;
  const int N = 50000;
  const double lo = -1.0, hi = 0.5;
  int inside = 0;
  for (int k = 0; k < N; ++k) {
    const Vec x0 = sample_mixture(bi, 0.0, rng);
    const double x = perturb(x0, t, s, Space::Euclidean, rng)(0);
    inside += x >= lo && x <= hi;
  }
  double mass = 0;
  const int m = 2000;
  for (int i = 0; i < m; ++i) mass += gmm_density_t(bi, Vec::Constant(1, lo + (i + 0.5) * (hi - lo) / m), t, s);
  mass *= (hi - lo) / m;
  const double p = static_cast<double>(inside) / N;
  CHECK(std::abs(p - mass) < 4 * std::sqrt(mass * (1 - mass) / N));
}
