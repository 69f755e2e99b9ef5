#include "pmean/fluctuation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace pmean {

namespace {

void check_square_symmetric(const Mat& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw InputError(std::string(what) + " must be a nonempty square matrix");
  }
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) {
    throw InputError(std::string(what) + " is not symmetric (max asymmetry " +
                     std::to_string(asym) + ")");
  }
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw InputError("time grid is empty");
  double prev = 0.0;
  for (double t : grid) {
    if (!(t > prev)) {
      throw InputError("time grid must be positive and strictly increasing");
    }
    prev = t;
  }
}

double entry_exponent(const LimitSpec& spec, int i, int j) {
  const double c =
      spec.delta * (spec.eigenvalues[i] + spec.eigenvalues[j]) - 1.0;
  if (!(c > 0.0)) {
    throw DomainError(
        "limit covariance is infinite: delta * (lambda_" + std::to_string(i) +
        " + lambda_" + std::to_string(j) + ") = " +
        std::to_string(spec.delta *
                       (spec.eigenvalues[i] + spec.eigenvalues[j])) +
        " must exceed 1");
  }
  return c;
}

}  // namespace

Mat psd_factor(const Mat& m) {
  const Eigen::Index d = m.rows();
  if (m.cwiseAbs().maxCoeff() == 0.0) return Mat::Zero(d, d);
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::LLT<Mat> jittered(m + 1e-12 * Mat::Identity(d, d));
  if (jittered.info() == Eigen::Success) return jittered.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  Vec lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

LimitSpec make_limit_spec(double delta, const Mat& gamma, const Mat& hessian) {
  if (!(delta > 0.0)) throw InputError("limit spec needs delta > 0");
  check_square_symmetric(gamma, "gamma");
  check_square_symmetric(hessian, "hessian");
  if (gamma.rows() != hessian.rows()) {
    throw InputError("gamma and hessian dimensions differ");
  }
  LimitSpec spec;
  spec.delta = delta;
  spec.gamma = 0.5 * (gamma + gamma.transpose());
  spec.hessian = 0.5 * (hessian + hessian.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> es(spec.hessian);
  if (es.info() != Eigen::Success) {
    throw InternalInvariantError("hessian eigen-decomposition failed");
  }
  spec.eigenvalues = es.eigenvalues();
  spec.eigenvectors = es.eigenvectors();
  // Deterministic sign convention: first non-negligible component positive.
  for (Eigen::Index j = 0; j < spec.eigenvectors.cols(); ++j) {
    for (Eigen::Index i = 0; i < spec.eigenvectors.rows(); ++i) {
      const double v = spec.eigenvectors(i, j);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) spec.eigenvectors.col(j) = -spec.eigenvectors.col(j);
        break;
      }
    }
  }
  const Mat recon = spec.eigenvectors * spec.eigenvalues.asDiagonal() *
                    spec.eigenvectors.transpose();
  if ((recon - spec.hessian).cwiseAbs().maxCoeff() > 1e-8) {
    throw InternalInvariantError(
        "hessian eigen-decomposition does not reproduce the matrix");
  }

  Eigen::SelfAdjointEigenSolver<Mat> gs(spec.gamma);
  if (gs.info() != Eigen::Success || gs.eigenvalues().minCoeff() < -1e-10) {
    throw InputError("gamma must be positive semidefinite");
  }

  spec.gamma_eigen = spec.eigenvectors.transpose() * spec.gamma *
                     spec.eigenvectors;
  spec.gamma_eigen = 0.5 * (spec.gamma_eigen + spec.gamma_eigen.transpose());
  spec.sigma = psd_factor(spec.gamma);
  spec.sigma_eigen = psd_factor(spec.gamma_eigen);
  spec.admissible = true;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    if (!(delta * spec.eigenvalues[i] > 1.0)) spec.admissible = false;
  }
  return spec;
}

Mat rescale_states(const ModelSpace& s, const std::vector<Point>& states,
                   const std::vector<std::int64_t>& ks, std::int64_t n,
                   const Point& e_p, const std::vector<Tangent>& basis) {
  if (states.size() != ks.size()) {
    throw InputError("rescale: one state per index required");
  }
  if (n < 1) throw InputError("rescale: n must be >= 1");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  Mat out(static_cast<Eigen::Index>(ks.size()),
          static_cast<Eigen::Index>(basis.size()));
  for (std::size_t r = 0; r < ks.size(); ++r) {
    Tangent lg = log_map(s, e_p, states[r]);
    Vec coords = tangent_coordinates(s, basis, lg.vec);
    out.row(static_cast<Eigen::Index>(r)) =
        (static_cast<double>(ks[r]) / sqrt_n) * coords.transpose();
  }
  return out;
}

Mat rescale_chain(const ModelSpace& s, const ChainTrace& trace,
                  const Point& e_p, std::int64_t n,
                  const std::vector<double>& times,
                  const std::vector<Tangent>& basis) {
  check_grid(times);
  std::vector<std::int64_t> ks;
  std::vector<Point> states;
  ks.reserve(times.size());
  states.reserve(times.size());
  for (double t : times) {
    const auto k = static_cast<std::int64_t>(std::floor(
        static_cast<double>(n) * t));
    if (k >= static_cast<std::int64_t>(trace.states.size())) {
      throw InputError("requested time " + std::to_string(t) +
                       " needs chain state " + std::to_string(k) +
                       " beyond the trace");
    }
    ks.push_back(k);
    states.push_back(trace.states[static_cast<std::size_t>(k)]);
  }
  return rescale_states(s, states, ks, n, e_p, basis);
}

Mat gradient_covariance(const ModelSpace& s, const DiscreteMeasure& mu,
                        const Point& e_p, double p,
                        const std::vector<Tangent>& basis) {
  const auto d = static_cast<Eigen::Index>(basis.size());
  if (p < 2.0) {
    for (int i = 0; i < mu.size(); ++i) {
      if (distance(s, e_p, mu.point(i)) <= 1e-9) {
        throw DomainError(
            "minimizer coincides with support point " + std::to_string(i) +
            " and p = " + std::to_string(p) +
            " < 2: the one-sample gradient is singular there");
      }
    }
  }
  Mat g = Mat::Zero(d, d);
  for (int i = 0; i < mu.size(); ++i) {
    Tangent grad = sample_gradient(s, e_p, mu.point(i), p);
    Vec coords = tangent_coordinates(s, basis, grad.vec);
    g.noalias() += mu.weight(i) * coords * coords.transpose();
  }
  return g;
}

Mat objective_hessian(const ModelSpace& s, const DiscreteMeasure& mu,
                      const Point& e_p, double p,
                      const std::vector<Tangent>& basis) {
  const auto d = static_cast<Eigen::Index>(basis.size());
  const Mat eye = Mat::Identity(d, d);
  Mat h = Mat::Zero(d, d);
  for (int i = 0; i < mu.size(); ++i) {
    const double rho = distance(s, e_p, mu.point(i));
    if (rho <= 1e-12) {
      if (p == 2.0) {
        h += mu.weight(i) * 2.0 * eye;
        continue;
      }
      if (p < 2.0) {
        throw DomainError(
            "objective Hessian is singular: minimizer coincides with "
            "support point " + std::to_string(i) + " and p < 2");
      }
      continue;  // p > 2: the contribution vanishes
    }
    Tangent u = unit_direction(s, e_p, mu.point(i));
    Vec nc = tangent_coordinates(s, basis, u.vec);
    double ct = 1.0;  // rho * (radial second-derivative comparison factor)
    if (s.kind == SpaceKind::Sphere) ct = xcot(rho);
    if (s.kind == SpaceKind::Hyperbolic) ct = xcoth(rho);
    const Mat nn = nc * nc.transpose();
    h += mu.weight(i) * p * std::pow(rho, p - 2.0) *
         ((p - 1.0) * nn + ct * (eye - nn));
  }
  return 0.5 * (h + h.transpose());
}

Mat limit_covariance(const LimitSpec& spec, double t1, double t2) {
  if (!(t1 > 0.0) || !(t2 > 0.0)) {
    throw InputError("limit covariance needs positive times");
  }
  const int d = spec.dim();
  const double tmin = std::min(t1, t2);
  Mat out(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double c = entry_exponent(spec, i, j);
      const double di = spec.delta * spec.eigenvalues[i];
      const double dj = spec.delta * spec.eigenvalues[j];
      out(i, j) = spec.delta * spec.delta * spec.gamma_eigen(i, j) / c *
                  std::pow(t1, 1.0 - di) * std::pow(t2, 1.0 - dj) *
                  std::pow(tmin, c);
    }
  }
  return out;
}

ExactLimitSampler::ExactLimitSampler(const LimitSpec& spec,
                                     std::vector<double> grid)
    : grid_(std::move(grid)), dim_(spec.dim()) {
  if (!spec.admissible) {
    throw DomainError("exact limit sampler needs delta * lambda_i > 1 for "
                      "every eigenvalue");
  }
  check_grid(grid_);
  const auto m = static_cast<Eigen::Index>(grid_.size());
  scale_.resize(m, dim_);
  for (Eigen::Index jt = 0; jt < m; ++jt) {
    for (int i = 0; i < dim_; ++i) {
      scale_(jt, i) = std::pow(grid_[static_cast<std::size_t>(jt)],
                               1.0 - spec.delta * spec.eigenvalues[i]);
    }
  }
  increment_factor_.reserve(grid_.size());
  double lower = 0.0;
  for (double upper : grid_) {
    Mat cov(dim_, dim_);
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        const double c = entry_exponent(spec, i, j);
        const double mass = std::pow(upper, c) - std::pow(lower, c);
        cov(i, j) =
            spec.delta * spec.delta * spec.gamma_eigen(i, j) * mass / c;
      }
    }
    increment_factor_.push_back(psd_factor(0.5 * (cov + cov.transpose())));
    lower = upper;
  }
}

Mat ExactLimitSampler::sample(RngStream& rng) const {
  const auto m = static_cast<Eigen::Index>(grid_.size());
  Vec mart = Vec::Zero(dim_);
  Vec xi(dim_);
  Mat out(m, dim_);
  for (Eigen::Index jt = 0; jt < m; ++jt) {
    for (int i = 0; i < dim_; ++i) xi[i] = rng.normal();
    mart.noalias() += increment_factor_[static_cast<std::size_t>(jt)] * xi;
    out.row(jt) = scale_.row(jt).cwiseProduct(mart.transpose());
  }
  return out;
}

Mat sample_limit_exact(const LimitSpec& spec, const std::vector<double>& grid,
                       RngStream& rng) {
  return ExactLimitSampler(spec, grid).sample(rng);
}

Mat integrate_sde(const LimitSpec& spec, double eps,
                  const std::vector<double>& grid, const Vec& y_eps,
                  std::int64_t steps_per_unit, RngStream& rng) {
  if (!spec.admissible) {
    throw DomainError("SDE integration needs delta * lambda_i > 1 for every "
                      "eigenvalue");
  }
  check_grid(grid);
  if (!(eps > 0.0) || eps > grid.front()) {
    throw InputError("SDE start time must satisfy 0 < eps <= first grid time");
  }
  if (steps_per_unit < 1000) {
    throw InputError("SDE integration needs at least 1000 steps per unit "
                     "time");
  }
  const int d = spec.dim();
  if (y_eps.size() != d) {
    throw InputError("SDE start state has wrong dimension");
  }
  Vec y = y_eps;
  Vec xi(d);
  Vec noise(d);
  const double h_target = 1.0 / static_cast<double>(steps_per_unit);
  Mat out(static_cast<Eigen::Index>(grid.size()), d);
  double t = eps;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double span = grid[g] - t;
    if (span > 0.0) {
      const auto steps = static_cast<std::int64_t>(
          std::ceil(span / h_target - 1e-12));
      const double h = span / static_cast<double>(steps);
      const double sqrt_h = std::sqrt(h);
      for (std::int64_t k = 0; k < steps; ++k) {
        for (int i = 0; i < d; ++i) xi[i] = rng.normal();
        noise.noalias() = spec.sigma_eigen * xi;
        for (int i = 0; i < d; ++i) {
          y[i] += h * (1.0 - spec.delta * spec.eigenvalues[i]) * y[i] / t +
                  sqrt_h * spec.delta * noise[i];
        }
        t += h;
      }
      t = grid[g];  // kill accumulated rounding in t
    }
    out.row(static_cast<Eigen::Index>(g)) = y.transpose();
  }
  return out;
}

MomentStats product_moment(const std::vector<Mat>& paths, int a, int i, int b,
                           int j) {
  const std::size_t n = paths.size();
  if (n == 0) throw InputError("no paths given");
  double sum = 0.0;
  for (const Mat& p : paths) sum += p(a, i) * p(b, j);
  MomentStats st;
  st.mean = sum / static_cast<double>(n);
  if (n < 2) {
    st.se = std::numeric_limits<double>::infinity();
    return st;
  }
  double ss = 0.0;
  for (const Mat& p : paths) {
    const double dlt = p(a, i) * p(b, j) - st.mean;
    ss += dlt * dlt;
  }
  st.se = std::sqrt(ss / static_cast<double>(n - 1) /
                    static_cast<double>(n));
  return st;
}

MomentStats coordinate_moment(const std::vector<Mat>& paths, int a, int i) {
  const std::size_t n = paths.size();
  if (n == 0) throw InputError("no paths given");
  double sum = 0.0;
  for (const Mat& p : paths) sum += p(a, i);
  MomentStats st;
  st.mean = sum / static_cast<double>(n);
  if (n < 2) {
    st.se = std::numeric_limits<double>::infinity();
    return st;
  }
  double ss = 0.0;
  for (const Mat& p : paths) {
    const double dlt = p(a, i) - st.mean;
    ss += dlt * dlt;
  }
  st.se = std::sqrt(ss / static_cast<double>(n - 1) /
                    static_cast<double>(n));
  return st;
}

namespace {

double z_score(double diff, double se) {
  if (se > 0.0 && std::isfinite(se)) return diff / se;
  if (std::isinf(se)) return 0.0;  // no information, vacuous
  return diff == 0.0 ? 0.0
                     : std::copysign(
                           std::numeric_limits<double>::infinity(), diff);
}

}  // namespace

FluctReport fluctuation_experiment(const ModelSpace& s,
                                   const DiscreteMeasure& mu,
                                   const BallContext& ctx,
                                   const FluctOptions& opt) {
  if (!(opt.delta > 0.0)) throw InputError("fluct: delta must be > 0");
  if (opt.n < 1) throw InputError("fluct: n must be >= 1");
  if (opt.chains < 1) throw InputError("fluct: chains must be >= 1");
  check_grid(opt.times);
  if (!(opt.z_threshold > 0.0)) throw InputError("fluct: z threshold must be > 0");

  FluctReport rep;
  rep.oracle = oracle_mean(s, mu, ctx, opt.oracle_tol, 400000);
  std::vector<Tangent> basis = orthonormal_basis(s, rep.oracle.e_p);
  const Mat gamma = gradient_covariance(s, mu, rep.oracle.e_p, ctx.p, basis);
  const Mat hessian = objective_hessian(s, mu, rep.oracle.e_p, ctx.p, basis);

  if (ctx.p > 1.0 && ctx.p <= 2.0) {
    rep.c_growth = growth_constant(ctx, s);
    rep.condition = "delta * growth_constant > 1 (closed form)";
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(hessian);
    const double lam_min = es.eigenvalues().minCoeff();
    rep.c_growth = growth_constant(ctx, s, lam_min);
    rep.condition =
        "delta * lambda_min > 1 (numerical Hessian proxy for the growth "
        "constant)";
  }
  if (!(opt.delta * rep.c_growth > 1.0)) {
    throw ValidationError(
        "fluctuation scaling needs delta > 1/growth: delta = " +
        std::to_string(opt.delta) + ", growth constant = " +
        std::to_string(rep.c_growth) + " (" + rep.condition + ")");
  }

  rep.spec = make_limit_spec(opt.delta, gamma, hessian);
  if (!rep.spec.admissible) {
    throw ValidationError(
        "limit process inadmissible: delta * lambda_min = " +
        std::to_string(opt.delta * rep.spec.eigenvalues.minCoeff()) +
        " must exceed 1");
  }
  rep.delta1 = step_cap(ctx, rep.c_growth);

  std::vector<std::int64_t> ks;
  ks.reserve(opt.times.size());
  for (double t : opt.times) {
    const auto k = static_cast<std::int64_t>(
        std::floor(static_cast<double>(opt.n) * t));
    if (k < 1) {
      throw InputError("time " + std::to_string(t) +
                       " is below 1/n; no chain state to observe");
    }
    if (!ks.empty() && k <= ks.back()) {
      throw InputError("times collapse onto the same chain index at n = " +
                       std::to_string(opt.n));
    }
    ks.push_back(k);
  }

  const StepSchedule schedule = StepSchedule::harmonic(opt.delta, rep.delta1);
  const Point x0 = default_start(s, mu, ctx.p);
  const auto m = static_cast<Eigen::Index>(opt.times.size());
  const int d = rep.spec.dim();

  // Fan chains out across workers; chain c always uses stream c, and the
  // results vector is indexed by chain, so scheduling cannot change the
  // report.
  std::vector<Mat> observed(static_cast<std::size_t>(opt.chains));
  const int workers =
      std::max(1, std::min(opt.threads, opt.chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      for (int c = w; c < opt.chains; c += workers) {
        RngStream rng(opt.seed, kChainStreamBase + static_cast<std::uint64_t>(c));
        std::vector<Point> states =
            run_chain_at(s, mu, ctx, schedule, x0, ks, rng);
        Mat y = rescale_states(s, states, ks, opt.n, rep.oracle.e_p, basis);
        observed[static_cast<std::size_t>(c)] = y * rep.spec.eigenvectors;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  rep.insufficient_sample = opt.chains < 2;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      const Mat theory = limit_covariance(
          rep.spec, opt.times[static_cast<std::size_t>(a)],
          opt.times[static_cast<std::size_t>(b)]);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          MomentStats st = product_moment(observed, static_cast<int>(a), i,
                                          static_cast<int>(b), j);
          CovarianceEntry e;
          e.t1 = opt.times[static_cast<std::size_t>(a)];
          e.t2 = opt.times[static_cast<std::size_t>(b)];
          e.i = i;
          e.j = j;
          e.empirical = st.mean;
          e.theoretical = theory(i, j);
          e.stderr_est = st.se;
          e.zscore = z_score(st.mean - theory(i, j), st.se);
          rep.max_abs_z = std::max(rep.max_abs_z, std::abs(e.zscore));
          rep.covariances.push_back(e);
        }
      }
    }
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    for (int i = 0; i < d; ++i) {
      MomentStats st = coordinate_moment(observed, static_cast<int>(a), i);
      MeanEntry e;
      e.t = opt.times[static_cast<std::size_t>(a)];
      e.i = i;
      e.empirical = st.mean;
      e.stderr_est = st.se;
      e.zscore = z_score(st.mean, st.se);
      rep.max_abs_mean_z = std::max(rep.max_abs_mean_z, std::abs(e.zscore));
      rep.means.push_back(e);
    }
  }
  rep.pass = rep.max_abs_z <= opt.z_threshold &&
             rep.max_abs_mean_z <= opt.z_threshold;
  return rep;
}

}  // namespace pmean
