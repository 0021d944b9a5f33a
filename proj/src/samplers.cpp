#include "pglab/samplers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace pglab {

void GuidanceConfig::validate() const {
  if (steps < 1) throw DomainError("steps must be >= 1");
  if (beta0 < 0 || beta1 < 0 || gamma0 < 0 || gamma1 < 0) throw DomainError("schedule weights must be >= 0");
}

std::vector<RngStream> particle_streams(const RngStream& trial, int n) {
  std::vector<RngStream> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(trial.child(static_cast<std::uint64_t>(i)));
  return out;
}

Mat sample_prior(const MixtureTarget& target, int n, const NoiseSchedule& schedule, PriorKind prior,
                 std::vector<RngStream>& streams) {
  if (n < 1) throw DomainError("n must be >= 1");
  if (streams.size() != static_cast<std::size_t>(n)) throw DomainError("one rng stream per particle required");
  const int d = target.dim();
  Mat x(n, d);
  for (int i = 0; i < n; ++i) {
    RngStream& r = streams[static_cast<std::size_t>(i)];
    if (prior == PriorKind::Exact) {
      x.row(i) = sample_mixture(target, schedule.sigma2(schedule.T), r).transpose();
    } else if (target.space == Space::Torus) {
      for (int j = 0; j < d; ++j) x(i, j) = wrap_angle(std::numbers::pi * (2.0 * r.uniform() - 1.0));
    } else {
      for (int j = 0; j < d; ++j) x(i, j) = schedule.sigma_max * r.normal();
    }
  }
  return x;
}

ParticleSet integrate(const MixtureTarget& target, const Mat& x_T, const GuidanceConfig& cfg,
                      const NoiseSchedule& schedule, const FieldFn& guidance, std::vector<RngStream>& streams) {
  cfg.validate();
  const FieldFn score = [&](const Mat& x, double t) { return score_rows(target, x, t, schedule); };
  ParticleSet set{x_T, target.space, schedule.T};
  set.normalize();
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = schedule.T * (1.0 - static_cast<double>(k) / cfg.steps);
    const double t_next = schedule.T * (1.0 - static_cast<double>(k + 1) / cfg.steps);
    set.t = t;
    const double gamma = log_interp(cfg.gamma0, cfg.gamma1, t, schedule.T);
    if (cfg.mode == Mode::ODE) {
      set = ode_step(set, score, guidance, t - t_next, schedule, cfg.integrator, gamma, k);
    } else {
      const double beta = log_interp(cfg.beta0, cfg.beta1, t, schedule.T);
      set = reverse_sde_step(set, score, guidance, t - t_next, schedule, {beta, gamma}, streams, k);
    }
    set.t = t_next;
  }
  return set;
}

ParticleSet sample_iid(const MixtureTarget& target, const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                       std::vector<RngStream>& streams) {
  const Mat x = sample_prior(target, static_cast<int>(streams.size()), schedule, cfg.prior, streams);
  return integrate(target, x, cfg, schedule, nullptr, streams);
}

ParticleSet sample_iid(const MixtureTarget& target, int n, const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                       RngStream& rng) {
  std::vector<RngStream> streams = particle_streams(rng, n);
  return sample_iid(target, cfg, schedule, streams);
}

FieldFn potential_field(const PotentialSpec& spec, const NoiseSchedule& schedule) {
  return [spec, schedule](const Mat& x, double t) { return potential_gradient(spec, x, t, schedule).grad; };
}

ParticleSet sample_pg(const MixtureTarget& target, const PotentialSpec& spec, const GuidanceConfig& cfg,
                      const NoiseSchedule& schedule, std::vector<RngStream>& streams) {
  const Mat x = sample_prior(target, static_cast<int>(streams.size()), schedule, cfg.prior, streams);
  return integrate(target, x, cfg, schedule, potential_field(spec, schedule), streams);
}

ParticleSet sample_pg(const MixtureTarget& target, const PotentialSpec& spec, int n, const GuidanceConfig& cfg,
                      const NoiseSchedule& schedule, RngStream& rng) {
  std::vector<RngStream> streams = particle_streams(rng, n);
  return sample_pg(target, spec, cfg, schedule, streams);
}

double lambda_t(const LowTempConfig& ltc, double sigma_t) {
  return (ltc.sigma_d + sigma_t) / (ltc.sigma_d + sigma_t / ltc.lambda);
}

ParticleSet sample_low_temp(const MixtureTarget& target, const LowTempConfig& ltc, const GuidanceConfig& cfg,
                            const NoiseSchedule& schedule, std::vector<RngStream>& streams) {
  cfg.validate();
  if (!(ltc.lambda >= 1.0) || ltc.psi < 0 || !(ltc.sigma_d > 0)) throw DomainError("low-temperature config invalid");
  ParticleSet set{sample_prior(target, static_cast<int>(streams.size()), schedule, cfg.prior, streams), target.space,
                  schedule.T};
  set.normalize();
  for (int k = 0; k < cfg.steps; ++k) {
    const double t = schedule.T * (1.0 - static_cast<double>(k) / cfg.steps);
    const double t_next = schedule.T * (1.0 - static_cast<double>(k + 1) / cfg.steps);
    const Mat s = score_rows(target, set.x, t, schedule);
    check_finite(s, "score", k);
    const double coef = lambda_t(ltc, schedule.sigma(t)) + ltc.lambda * ltc.psi / 2.0;
    em_update(set.x, s, nullptr, 0.0, coef, 1.0 + ltc.psi, schedule.g2(t), t - t_next, &streams);
    set.normalize();
    set.t = t_next;
  }
  return set;
}

ParticleSet sample_low_temp(const MixtureTarget& target, int n, const LowTempConfig& ltc, const GuidanceConfig& cfg,
                            const NoiseSchedule& schedule, RngStream& rng) {
  std::vector<RngStream> streams = particle_streams(rng, n);
  return sample_low_temp(target, ltc, cfg, schedule, streams);
}

Mat metadynamics_gradient(const MetaConfig& meta, const Mat& x, const Mat& previous) {
  Mat out = Mat::Zero(x.rows(), x.cols());
  const double s2 = meta.sigma_meta * meta.sigma_meta;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < previous.rows(); ++j) {
      if (meta.cv == CollectiveVariable::Identity) {
        const Eigen::RowVectorXd diff = x.row(i) - previous.row(j);
        const double w = std::exp(-diff.squaredNorm() / (2.0 * s2));
        out.row(i) += meta.omega * w / s2 * diff;
      } else {
        const double r2 = x(i, 0) * x(i, 0) + x(i, 1) * x(i, 1);
        if (r2 == 0.0) throw DomainError("angle collective variable undefined at the origin");
        const double dth =
            wrap_angle(std::atan2(x(i, 1), x(i, 0)) - std::atan2(previous(j, 1), previous(j, 0)));
        const double w = std::exp(-dth * dth / (2.0 * s2));
        const double c = meta.omega * w / s2 * dth;
        out(i, 0) += c * (-x(i, 1) / r2);
        out(i, 1) += c * (x(i, 0) / r2);
      }
    }
  }
  return out;
}

ParticleSet sample_metadynamics_seq(const MixtureTarget& target, const MetaConfig& meta, int n,
                                    const GuidanceConfig& cfg, const NoiseSchedule& schedule, RngStream& rng) {
  std::vector<RngStream> all = particle_streams(rng, n);
  const int d = target.dim();
  Mat done(0, d);
  for (int k = 0; k < n; ++k) {
    std::vector<RngStream> one{all[static_cast<std::size_t>(k)]};
    const Mat x = sample_prior(target, 1, schedule, cfg.prior, one);
    const Mat prev = done;
    const FieldFn guidance = [&meta, prev](const Mat& y, double) { return metadynamics_gradient(meta, y, prev); };
    const ParticleSet s = integrate(target, x, cfg, schedule, guidance, one);
    done.conservativeResize(k + 1, d);
    done.row(k) = s.x.row(0);
  }
  return {done, target.space, 0.0};
}

Mat svgd_direction(const Mat& x, const Mat& score, double h) {
  const Eigen::Index n = x.rows();
  Mat psi = Mat::Zero(n, x.cols());
  const double norm = 1.0 / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::RowVectorXd diff = x.row(j) - x.row(i);
      const double k = std::exp(-diff.squaredNorm() / h);
      psi.row(i) += k * score.row(j) - (2.0 / h) * k * diff;
    }
  return norm * psi;
}

ParticleSet svgd_run(const MixtureTarget& target, const SvgdConfig& cfg, const Mat& init) {
  if (cfg.iters < 0 || !(cfg.step_size > 0)) throw DomainError("svgd needs iters >= 0 and a positive step size");
  Mat x = init;
  PotentialSpec bw;
  bw.rule = cfg.rule;
  bw.h0 = cfg.h;
  const NoiseSchedule unit{};
  for (int l = 0; l < cfg.iters; ++l) {
    double sig = cfg.sigma_floor;
    if (cfg.anneal && cfg.iters > 1) sig = log_interp(cfg.sigma_floor, 3.0, 1.0 - static_cast<double>(l) / (cfg.iters - 1));
    const Mat s = score_rows_var(target, x, sig * sig);
    const double h = x.rows() < 2 ? (cfg.rule == BandwidthRule::Fixed ? cfg.h : 1.0) : bandwidth(bw, x, 0.0, unit).h;
    x += cfg.step_size * svgd_direction(x, s, h);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > cfg.divergence_bound)
      throw NumericError("svgd diverged at iteration " + std::to_string(l), l);
  }
  return {x, Space::Euclidean, 0.0};
}

ParticleSet svgd_run(const MixtureTarget& target, const SvgdConfig& cfg, int n, double init_scale, RngStream& rng) {
  Mat x(n, target.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = init_scale * rng.normal();
  return svgd_run(target, cfg, x);
}

SymmetricSumCheck symmetric_sum_identity(const Mat& x, double h) {
  const Eigen::Index n = x.rows();
  SymmetricSumCheck out{Mat::Zero(n, x.cols()), Mat::Zero(n, x.cols())};
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const KernelEval e = rbf_kernel(x.row(a).transpose(), x.row(b).transpose(), h);
      out.full.row(a) += e.grad_x.transpose();
      out.full.row(b) += e.grad_y.transpose();
      out.doubled.row(a) += 2.0 * e.grad_x.transpose();
    }
  return out;
}

SvgdEquivResult svgd_equiv_pg_step(const Mat& x, const MixtureTarget& target, double h, double t, double dt,
                                   const NoiseSchedule& schedule) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw DomainError("equivalence step needs n >= 2");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((x.row(i) - x.row(j)).squaredNorm() == 0.0) throw DomainError("coincident particles");
  const Mat s = score_rows(target, x, t, schedule);
  const double g2 = schedule.g2(t);
  const double nn = static_cast<double>(n);

  Mat K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = std::exp(-(x.row(i) - x.row(j)).squaredNorm() / h);
  const double S_tot = K.sum();
  const SymmetricSumCheck sums = symmetric_sum_identity(x, h);

  SvgdEquivResult r;
  r.pg_step = x + 0.5 * g2 * dt * (s - 0.5 * (nn - 1.0) * sums.full / S_tot);

  Mat form = x;
  Mat literal = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double S_i = K.row(i).sum();
    Eigen::RowVectorXd score_part = S_i * s.row(i);
    Eigen::RowVectorXd kernel_part = Eigen::RowVectorXd::Zero(x.cols());
    for (Eigen::Index j = 0; j < n; ++j)
      kernel_part += -(2.0 / h) * K(j, i) * (x.row(j) - x.row(i));  // grad_{x_j} k(x_j, x_i)
    const double eps_form = (nn - 1.0) * g2 * dt / (2.0 * S_i);
    const double eps_lit = nn * g2 * dt / (2.0 * S_i);
    form.row(i) += eps_form / (nn - 1.0) * (score_part + (nn - 1.0) / nn * kernel_part);
    literal.row(i) += eps_lit / (nn - 1.0) * (score_part + kernel_part);
  }
  r.svgd_form = form;
  r.svgd_literal = literal;
  r.discrepancy = (r.pg_step - form).rowwise().norm().maxCoeff();
  r.literal_discrepancy = (r.pg_step - literal).rowwise().norm().maxCoeff();
  return r;
}

Mat pfgm_velocity(const Mat& dataset, const Mat& x, double r, int D, double repulsion, double distance_floor,
                  bool* floored) {
  const Eigen::Index n = x.rows();
  const Eigen::Index N = x.cols();
  const double p = static_cast<double>(N + D);
  const Eigen::Index m = dataset.rows();
  Mat v = Mat::Zero(n, N);
  std::vector<double> lw(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < m; ++a) {
      const double d2 = (x.row(i) - dataset.row(a)).squaredNorm();
      lw[static_cast<std::size_t>(a)] = -0.5 * p * std::log(d2 + r * r);
      mx = std::max(mx, lw[static_cast<std::size_t>(a)]);
    }
    double z = 0.0;
    for (double w : lw) z += std::exp(w - mx);
    // log E_r up to the shared surface-area constant
    const double log_er = mx + std::log(z) - std::log(static_cast<double>(m)) + std::log(r);
    for (Eigen::Index a = 0; a < m; ++a)
      v.row(i) += std::exp(lw[static_cast<std::size_t>(a)] - mx) / z * (x.row(i) - dataset.row(a)) / r;
    if (n < 2 || repulsion == 0.0) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double dist = (x.row(j) - x.row(i)).norm();
      if (dist < distance_floor) {
        dist = distance_floor;
        if (floored) *floored = true;
      }
      const double c = std::exp(-p * std::log(dist) - log_er) / static_cast<double>(n - 1);
      v.row(i) += repulsion * c * (x.row(j) - x.row(i));
    }
  }
  return v;
}

PfgmResult pfgm_guided_ode(const Mat& dataset, int n, const PfgmConfig& cfg, RngStream& rng) {
  if (dataset.rows() < 1) throw DomainError("pfgm needs a non-empty dataset");
  if (n < 1 || cfg.D < 1 || cfg.steps < 1) throw DomainError("pfgm needs n, D, steps >= 1");
  const Eigen::Index N = dataset.cols();
  const double r_max = cfg.r_max > 0 ? cfg.r_max : cfg.sigma_max * std::sqrt(static_cast<double>(cfg.D));
  std::vector<RngStream> streams = particle_streams(rng, n);
  Mat x(n, N);
  for (int i = 0; i < n; ++i) {
    RngStream& s = streams[static_cast<std::size_t>(i)];
    std::gamma_distribution<double> ga(0.5 * static_cast<double>(N), 1.0);
    std::gamma_distribution<double> gb(0.5 * cfg.D, 1.0);
    const double X = ga(s.engine());
    const double Y = gb(s.engine());
    const double R = r_max * std::sqrt(X / Y);
    Vec u(N);
    for (Eigen::Index j = 0; j < N; ++j) u[j] = s.normal();
    x.row(i) = R * u.normalized().transpose();
  }
  PfgmResult res{{x, Space::Euclidean, 0.0}, false};
  for (int k = 0; k < cfg.steps; ++k) {
    const double r0 = r_max * std::pow(cfg.r_min / r_max, static_cast<double>(k) / cfg.steps);
    const double r1 = r_max * std::pow(cfg.r_min / r_max, static_cast<double>(k + 1) / cfg.steps);
    const Mat v = pfgm_velocity(dataset, res.set.x, r0, cfg.D, cfg.repulsion, cfg.distance_floor, &res.floored);
    check_finite(v, "pfgm field", k);
    res.set.x += (r1 - r0) * v;
  }
  return res;
}

}  // namespace pglab
