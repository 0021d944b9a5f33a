#include "pglab/learned.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace pglab {

namespace {

struct Hat {
  int l;
  double w;  // weight of node l+1
};

Hat hat(const PhiModel& m, double t) {
  const double s = std::clamp(t / m.T, 0.0, 1.0) * (m.knots - 1);
  int l = static_cast<int>(std::floor(s));
  if (l >= m.knots - 1) l = m.knots - 2;
  return {l, s - l};
}

double interp(const std::vector<double>& th, int offset, const Hat& hw) {
  return (1.0 - hw.w) * th[static_cast<std::size_t>(offset + hw.l)] + hw.w * th[static_cast<std::size_t>(offset + hw.l + 1)];
}

std::vector<int> sorted_order(const Mat& x) {
  std::vector<int> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) < x(b, c)) return true;
      if (x(a, c) > x(b, c)) return false;
    }
    return false;
  });
  return idx;
}

struct MlpForward {
  Vec z;
  Vec hidden;
  std::vector<int> order;
  double out;
};

MlpForward mlp_forward(const PhiModel& m, const Mat& x, double t) {
  if (x.rows() != m.n_train || x.cols() != m.dim)
    throw DomainError("mlp potential evaluated on a set of a different shape than it was trained for");
  MlpForward f;
  f.order = sorted_order(x);
  const int in = m.n_train * m.dim + 1;
  f.z.resize(in);
  int p = 0;
  for (int i : f.order)
    for (int c = 0; c < m.dim; ++c) f.z[p++] = x(i, c);
  f.z[p] = t;
  const double* th = m.theta.data();
  const double* W1 = th;
  const double* b1 = W1 + m.width * in;
  const double* w2 = b1 + m.width;
  const double b2 = w2[m.width];
  f.hidden.resize(m.width);
  f.out = b2;
  for (int h = 0; h < m.width; ++h) {
    double a = b1[h];
    for (int k = 0; k < in; ++k) a += W1[h * in + k] * f.z[k];
    f.hidden[h] = std::tanh(a);
    f.out += w2[h] * f.hidden[h];
  }
  return f;
}

}  // namespace

PhiModel PhiModel::product_form(int knots, double T, double a, double h, double b) {
  if (knots < 2 || !(T > 0) || !(h > 0)) throw DomainError("product form needs knots >= 2, T > 0, h > 0");
  PhiModel m;
  m.kind = PhiKind::ProductForm;
  m.knots = knots;
  m.T = T;
  m.theta.assign(static_cast<std::size_t>(3 * knots), 0.0);
  for (int k = 0; k < knots; ++k) {
    m.theta[static_cast<std::size_t>(k)] = a;
    m.theta[static_cast<std::size_t>(knots + k)] = std::log(h);
    m.theta[static_cast<std::size_t>(2 * knots + k)] = b;
  }
  return m;
}

PhiModel PhiModel::mlp(int n_train, int dim, int width, double T, RngStream& rng, double init_scale) {
  if (n_train < 1 || dim < 1 || width < 1) throw DomainError("mlp needs positive shape");
  PhiModel m;
  m.kind = PhiKind::Mlp;
  m.n_train = n_train;
  m.dim = dim;
  m.width = width;
  m.T = T;
  m.theta.assign(m.num_params(), 0.0);
  const int in = n_train * dim + 1;
  for (int k = 0; k < width * in + width; ++k) m.theta[static_cast<std::size_t>(k)] = init_scale * rng.normal();
  return m;
}

std::size_t PhiModel::num_params() const {
  if (kind == PhiKind::ProductForm) return static_cast<std::size_t>(3 * knots);
  const int in = n_train * dim + 1;
  return static_cast<std::size_t>(width * in + width + width + 1);
}

PhiEval phi_eval(const PhiModel& model, const Mat& x, double t) {
  PhiEval e;
  const Eigen::Index n = x.rows();
  e.grad = Mat::Zero(n, x.cols());
  if (model.kind == PhiKind::ProductForm) {
    if (model.n_train > 0 && n != model.n_train) throw DomainError("particle count differs from n_train");
    const Hat hw = hat(model, t);
    const double a = interp(model.theta, 0, hw);
    const double h = std::exp(interp(model.theta, model.knots, hw));
    const double b = interp(model.theta, 2 * model.knots, hw);
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Eigen::RowVectorXd diff = x.row(i) - x.row(j);
        const double k = std::exp(-diff.squaredNorm() / h);
        s += 2.0 * k;
        const Eigen::RowVectorXd g = (4.0 * a / h) * k * diff;
        e.grad.row(i) += g;
        e.grad.row(j) -= g;
      }
    }
    e.log_value = b - a * s;
    return e;
  }
  const MlpForward f = mlp_forward(model, x, t);
  e.log_value = f.out;
  const int in = model.n_train * model.dim + 1;
  const double* W1 = model.theta.data();
  const double* w2 = W1 + model.width * in + model.width;
  Vec gz = Vec::Zero(in);
  for (int h = 0; h < model.width; ++h) {
    const double c = w2[h] * (1.0 - f.hidden[h] * f.hidden[h]);
    for (int k = 0; k < in; ++k) gz[k] += c * W1[h * in + k];
  }
  int p = 0;
  for (int i : f.order)
    for (int c = 0; c < model.dim; ++c) e.grad(i, c) = gz[p++];
  return e;
}

Vec phi_param_grad(const PhiModel& model, const Mat& x, double t) {
  Vec g = Vec::Zero(static_cast<Eigen::Index>(model.num_params()));
  if (model.kind == PhiKind::ProductForm) {
    const Hat hw = hat(model, t);
    const double a = interp(model.theta, 0, hw);
    const double h = std::exp(interp(model.theta, model.knots, hw));
    double s = 0.0;
    double sr = 0.0;  // sum of (r^2/h) k
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
        const double r2 = (x.row(i) - x.row(j)).squaredNorm();
        const double k = std::exp(-r2 / h);
        s += 2.0 * k;
        sr += 2.0 * r2 / h * k;
      }
    }
    const double da = -s;
    const double dlogh = -a * sr;
    const int K = model.knots;
    g[hw.l] += (1.0 - hw.w) * da;
    g[hw.l + 1] += hw.w * da;
    g[K + hw.l] += (1.0 - hw.w) * dlogh;
    g[K + hw.l + 1] += hw.w * dlogh;
    g[2 * K + hw.l] += 1.0 - hw.w;
    g[2 * K + hw.l + 1] += hw.w;
    return g;
  }
  const MlpForward f = mlp_forward(model, x, t);
  const int in = model.n_train * model.dim + 1;
  const int W = model.width;
  const double* w2 = model.theta.data() + W * in + W;
  for (int h = 0; h < W; ++h) {
    const double c = w2[h] * (1.0 - f.hidden[h] * f.hidden[h]);
    for (int k = 0; k < in; ++k) g[h * in + k] = c * f.z[k];
    g[W * in + h] = c;
    g[W * in + W + h] = f.hidden[h];
  }
  g[W * in + 2 * W] = 1.0;
  return g;
}

namespace {
Mat draw_set(const MixtureTarget& target, int n, RngStream& rng) {
  Mat x(n, target.dim());
  for (int i = 0; i < n; ++i) x.row(i) = sample_mixture(target, 0.0, rng).transpose();
  return x;
}

Mat perturb_set(const Mat& x0, double t, const NoiseSchedule& schedule, Space space, RngStream& rng) {
  Mat xt(x0.rows(), x0.cols());
  for (Eigen::Index i = 0; i < x0.rows(); ++i) xt.row(i) = perturb(x0.row(i).transpose(), t, schedule, space, rng).transpose();
  return xt;
}

constexpr double kPhiFloor = 1e-30;
}  // namespace

TrainResult train_phi(const MixtureTarget& target, const LogPhiFn& log_phi0, const PhiModel& init, int n,
                      const TrainConfig& tc, const NoiseSchedule& schedule, RngStream& rng) {
  if (!(tc.lr > 0)) throw DomainError("learning rate must be positive");
  if (tc.batches < 1 || tc.sets_per_batch < 1) throw DomainError("training needs batches and sets >= 1");
  TrainResult res{init, {}, 0, false};
  PhiModel& m = res.model;
  const std::size_t P = m.num_params();
  std::vector<double> gnorms;
  for (int k = 0; k < tc.batches; ++k) {
    Vec grad = Vec::Zero(static_cast<Eigen::Index>(P));
    double loss = 0.0;
    for (int s = 0; s < tc.sets_per_batch; ++s) {
      const double t = tc.t_min + (schedule.T - tc.t_min) * rng.uniform();
      const Mat x0 = draw_set(target, n, rng);
      const Mat xt = perturb_set(x0, t, schedule, target.space, rng);
      const double l0 = log_phi0(x0);
      const double lt = phi_eval(m, xt, t).log_value;
      const Vec dl = phi_param_grad(m, xt, t);
      if (tc.log_space) {
        const double r = lt - std::log(std::max(std::exp(l0), kPhiFloor));
        loss += r * r;
        grad += 2.0 * r * dl;
      } else {
        const double phi = std::exp(lt);
        const double r = phi - std::exp(l0);
        loss += r * r;
        grad += 2.0 * r * phi * dl;
      }
    }
    loss /= tc.sets_per_batch;
    grad /= tc.sets_per_batch;
    if (!std::isfinite(loss) || !grad.allFinite())
      throw NumericError("non-finite training loss at batch " + std::to_string(k), k);
    const double lr = tc.lr / std::sqrt(static_cast<double>(k + 1));
    for (std::size_t p = 0; p < P; ++p) m.theta[p] -= lr * grad[static_cast<Eigen::Index>(p)];
    res.loss_trace.push_back(loss);
    gnorms.push_back(grad.norm());
    res.batches_run = k + 1;
    if (tc.plateau_window > 0 && static_cast<int>(gnorms.size()) >= tc.plateau_window) {
      double mean = 0.0;
      for (std::size_t q = gnorms.size() - static_cast<std::size_t>(tc.plateau_window); q < gnorms.size(); ++q) mean += gnorms[q];
      if (mean / tc.plateau_window < tc.plateau_tol) {
        res.plateau_stop = true;
        break;
      }
    }
  }
  return res;
}

double phi_regression_error(const MixtureTarget& target, const LogPhiFn& log_phi0, const PhiModel& model, int n,
                            double t, int sets, const NoiseSchedule& schedule, RngStream& rng) {
  double acc = 0.0;
  for (int s = 0; s < sets; ++s) {
    const Mat x0 = draw_set(target, n, rng);
    const Mat xt = perturb_set(x0, t, schedule, target.space, rng);
    const double r = std::exp(phi_eval(model, xt, t).log_value) - std::exp(log_phi0(x0));
    acc += r * r;
  }
  return acc / sets;
}

ParticleSet sample_learned_pg(const MixtureTarget& target, const PhiModel& model, int n, const GuidanceConfig& cfg,
                              const NoiseSchedule& schedule, RngStream& rng) {
  if (model.kind == PhiKind::Mlp && n != model.n_train) throw DomainError("particle count differs from n_train");
  std::vector<RngStream> streams = particle_streams(rng, n);
  const Mat x = sample_prior(target, n, schedule, cfg.prior, streams);
  const FieldFn g = [&model](const Mat& y, double t) { return phi_eval(model, y, t).grad; };
  return integrate(target, x, cfg, schedule, g, streams);
}

std::string save_checkpoint(const PhiModel& m) {
  std::ostringstream os;
  os << "pglab-phi 1 " << (m.kind == PhiKind::ProductForm ? "product" : "mlp") << ' ' << m.n_train << ' ' << m.dim
     << ' ' << m.knots << ' ' << m.width << ' ' << std::setprecision(17) << m.T << ' ' << m.theta.size() << '\n';
  for (double v : m.theta) os << std::setprecision(17) << v << '\n';
  return os.str();
}

PhiModel load_checkpoint(const std::string& text) {
  std::istringstream is(text);
  std::string magic, kind;
  int version = 0;
  std::size_t count = 0;
  PhiModel m;
  if (!(is >> magic >> version >> kind >> m.n_train >> m.dim >> m.knots >> m.width >> m.T >> count) ||
      magic != "pglab-phi" || version != 1 || (kind != "product" && kind != "mlp"))
    throw DomainError("malformed checkpoint header");
  m.kind = kind == "product" ? PhiKind::ProductForm : PhiKind::Mlp;
  m.theta.resize(count);
  for (double& v : m.theta)
    if (!(is >> v)) throw DomainError("checkpoint truncated");
  if (m.num_params() != count) throw DomainError("checkpoint parameter count does not match its shape");
  return m;
}

int LatticeSurrogate::num_states() const {
  int s = 1;
  for (int i = 0; i < n; ++i) s *= static_cast<int>(points.size());
  return s;
}

std::vector<int> LatticeSurrogate::decode(int state) const {
  std::vector<int> out(static_cast<std::size_t>(n));
  const int L = static_cast<int>(points.size());
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = state % L;
    state /= L;
  }
  return out;
}

Mat lattice_kernel(const LatticeSurrogate& lat, double t) {
  const Eigen::Index L = static_cast<Eigen::Index>(lat.points.size());
  const double s2 = lat.schedule.sigma2(t);
  Mat P(L, L);
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = 0; j < L; ++j) {
      const double d = lat.points[static_cast<std::size_t>(j)] - lat.points[static_cast<std::size_t>(i)];
      P(i, j) = std::exp(-0.5 * d * d / s2);
    }
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

std::vector<double> lattice_conditional_phi(const LatticeSurrogate& lat, double t) {
  const Mat P = lattice_kernel(lat, t);
  const int S = lat.num_states();
  if (static_cast<int>(lat.phi0.size()) != S) throw DomainError("phi0 table has the wrong size");
  std::vector<double> num(static_cast<std::size_t>(S), 0.0), den(static_cast<std::size_t>(S), 0.0);
  for (int a = 0; a < S; ++a) {
    const std::vector<int> sa = lat.decode(a);
    double pa = 1.0;
    for (int i : sa) pa *= lat.p0[static_cast<std::size_t>(i)];
    for (int b = 0; b < S; ++b) {
      const std::vector<int> sb = lat.decode(b);
      double w = pa;
      for (int i = 0; i < lat.n; ++i) w *= P(sa[static_cast<std::size_t>(i)], sb[static_cast<std::size_t>(i)]);
      num[static_cast<std::size_t>(b)] += w * lat.phi0[static_cast<std::size_t>(a)];
      den[static_cast<std::size_t>(b)] += w;
    }
  }
  for (int b = 0; b < S; ++b) num[static_cast<std::size_t>(b)] /= den[static_cast<std::size_t>(b)];
  return num;
}

std::vector<double> train_lattice_phi(const LatticeSurrogate& lat, double t, long samples, RngStream& rng) {
  const Mat P = lattice_kernel(lat, t);
  const int L = static_cast<int>(lat.points.size());
  const int S = lat.num_states();
  std::vector<double> table(static_cast<std::size_t>(S), 1.0);
  std::vector<long> count(static_cast<std::size_t>(S), 0);
  auto draw = [&](const double* probs, int stride) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (int k = 0; k < L - 1; ++k) {
      acc += probs[k * stride];
      if (u < acc) return k;
    }
    return L - 1;
  };
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> Pr = P;
  for (long s = 0; s < samples; ++s) {
    int a = 0, b = 0, mult = 1;
    for (int i = 0; i < lat.n; ++i) {
      const int x0 = draw(lat.p0.data(), 1);
      const int xt = draw(Pr.data() + x0 * L, 1);
      a += x0 * mult;
      b += xt * mult;
      mult *= L;
    }
    const std::size_t bi = static_cast<std::size_t>(b);
    const double lr = 1.0 / (2.0 * static_cast<double>(++count[bi]));
    table[bi] -= lr * 2.0 * (table[bi] - lat.phi0[static_cast<std::size_t>(a)]);
  }
  return table;
}

GammaGrid GammaGrid::zeros(double lo, double hi, int g, double C) {
  if (!(hi > lo) || g < 2 || !(C > 0)) throw DomainError("gamma grid needs hi > lo, g >= 2, C > 0");
  GammaGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.g = g;
  grid.C = C;
  grid.u = Mat::Zero(g, g);
  return grid;
}

void GammaGrid::stencil(double x, double y, int idx[4], double w[4]) const {
  auto locate = [&](double v, int& i, double& a) {
    const double f = (std::clamp(v, lo, hi) - lo) / (hi - lo) * (g - 1);
    i = std::min(static_cast<int>(std::floor(f)), g - 2);
    a = f - i;
  };
  int ix, iy;
  double ax, ay;
  locate(x, ix, ax);
  locate(y, iy, ay);
  idx[0] = ix * g + iy;
  idx[1] = (ix + 1) * g + iy;
  idx[2] = ix * g + iy + 1;
  idx[3] = (ix + 1) * g + iy + 1;
  w[0] = (1 - ax) * (1 - ay);
  w[1] = ax * (1 - ay);
  w[2] = (1 - ax) * ay;
  w[3] = ax * ay;
}

double GammaGrid::log_gamma(double x, double y) const {
  int idx[4];
  double w[4];
  stencil(x, y, idx, w);
  double v = 0.0;
  for (int k = 0; k < 4; ++k) v += w[k] * u(idx[k] / g, idx[k] % g);
  return v;
}

double sum_log_gamma(const GammaGrid& grid, const Mat& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) s += grid.log_gamma(x(i, 0), x(i, 1));
  return s;
}

GammaTrainResult train_gamma(const MixtureTarget& target, const LogPhiFn& log_phi0_prime, const GammaGrid& init,
                             const GammaTrainConfig& cfg, int n, RngStream& rng) {
  if (target.dim() != 2) throw DomainError("gamma grid is two-dimensional");
  if (!(cfg.lr > 0) || cfg.batches < 0 || cfg.sets_per_batch < 1) throw DomainError("gamma training config invalid");
  GammaTrainResult res{init, 0.0, false, {}};
  GammaGrid& grid = res.grid;
  if (cfg.offset_sets > 0) {
    double acc = 0.0;
    for (int s = 0; s < cfg.offset_sets; ++s) acc += log_phi0_prime(draw_set(target, n, rng));
    res.offset = acc / cfg.offset_sets;
  }
  const double ulo = std::log(1e-6), uhi = std::log(1e6);
  Mat g = Mat::Zero(grid.g, grid.g);
  for (int k = 0; k < cfg.batches; ++k) {
    g.setZero();
    double phisum = 0.0;
    for (int s = 0; s < cfg.sets_per_batch; ++s) {
      const Mat x = draw_set(target, n, rng);
      double lg = log_phi0_prime(x) - res.offset;
      std::vector<double> lgam(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        lgam[static_cast<std::size_t>(i)] = grid.log_gamma(x(i, 0), x(i, 1));
        lg += lgam[static_cast<std::size_t>(i)];
      }
      const double phi = std::exp(std::min(lg, 30.0));
      phisum += phi;
      for (int i = 0; i < n; ++i) {
        const double gam = std::exp(lgam[static_cast<std::size_t>(i)]);
        // d gamma / du_node = gamma * w_node
        const double coef = 2.0 * grid.C / (gam * gam * gam) * (phi - grid.C) * gam / n;
        int idx[4];
        double w[4];
        grid.stencil(x(i, 0), x(i, 1), idx, w);
        for (int q = 0; q < 4; ++q) g(idx[q] / grid.g, idx[q] % grid.g) += coef * w[q];
      }
    }
    const double lr = cfg.lr / std::sqrt(1.0 + k / cfg.decay_scale);
    grid.u -= lr * g / cfg.sets_per_batch;
    for (Eigen::Index q = 0; q < grid.u.size(); ++q) {
      double& v = grid.u.data()[q];
      if (v < ulo || v > uhi) {
        v = std::clamp(v, ulo, uhi);
        res.clamped = true;
      }
    }
    res.trace.push_back(std::log(phisum / cfg.sets_per_batch));
  }
  return res;
}

}  // namespace pglab
