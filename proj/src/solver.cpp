#include "pmean/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pmean {

namespace {

// rho^e for the handful of exponents the hot loop actually sees, without
// paying for a general pow.
double pow_fast(double rho, double e) {
  if (e == 0.0) return 1.0;
  if (e == 1.0) return rho;
  if (e == -1.0) return 1.0 / rho;
  if (e == -0.5) return 1.0 / std::sqrt(rho);
  if (e == 0.5) return std::sqrt(rho);
  if (e == 2.0) return rho * rho;
  return std::pow(rho, e);
}

double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

// Fused, allocation-free step of the stochastic algorithm plus the
// containment assertion; scratch buffers persist across the whole chain.
class StepKernel {
 public:
  StepKernel(const ModelSpace& s, const BallContext& ctx)
      : s_(s),
        center_(ctx.center),
        p_(ctx.p),
        pm2_(ctx.p - 2.0),
        limit_(ctx.inner_radius + 1e-9),
        w_(Vec::Zero(s.ambient_dim())) {}

  double dist_to_center(const Point& x) const {
    switch (s_.kind) {
      case SpaceKind::Euclidean:
        return std::sqrt((x - center_).squaredNorm());
      case SpaceKind::Sphere: {
        const double c = x.dot(center_);
        return std::atan2(std::sqrt((x - c * center_).squaredNorm()), c);
      }
      case SpaceKind::Hyperbolic: {
        const Eigen::Index D = x.size();
        double c = -(x[0] * center_[0]);
        for (Eigen::Index i = 1; i < D; ++i) c += x[i] * center_[i];
        double s2 = 0.0;
        {
          const double w0 = x[0] + c * center_[0];
          s2 -= w0 * w0;
        }
        for (Eigen::Index i = 1; i < D; ++i) {
          const double wi = x[i] + c * center_[i];
          s2 += wi * wi;
        }
        return std::asinh(std::sqrt(std::max(s2, 0.0)));
      }
    }
    return 0.0;
  }

  // One step of size t toward q; mutates x, returns rho(x_before, q).
  double advance(Point& x, const Point& q, double t, std::int64_t k) {
    double rho = 0.0;
    switch (s_.kind) {
      case SpaceKind::Euclidean: {
        rho = std::sqrt((q - x).squaredNorm());
        if (rho > 1e-12) {
          const double coef = t * p_ * pow_fast(rho, pm2_);
          x += coef * (q - x);
        }
        break;
      }
      case SpaceKind::Sphere: {
        const double c = x.dot(q);
        w_ = q - c * x;
        const double wn = std::sqrt(w_.squaredNorm());
        rho = std::atan2(wn, c);
        if (rho > 1e-12 && wn > 0.0) {
          const double ell = t * p_ * pow_fast(rho, pm2_) * rho;
          const double sc = std::sin(ell) / wn;
          x = std::cos(ell) * x + sc * w_;
          x /= std::sqrt(x.squaredNorm());
        }
        break;
      }
      case SpaceKind::Hyperbolic: {
        const Eigen::Index D = x.size();
        double c = -(x[0] * q[0]);
        for (Eigen::Index i = 1; i < D; ++i) c += x[i] * q[i];
        w_[0] = q[0] + c * x[0];
        double s2 = -(w_[0] * w_[0]);
        for (Eigen::Index i = 1; i < D; ++i) {
          w_[i] = q[i] + c * x[i];
          s2 += w_[i] * w_[i];
        }
        const double wn = std::sqrt(std::max(s2, 0.0));
        rho = std::asinh(wn);
        if (rho > 1e-12 && wn > 0.0) {
          const double ell = t * p_ * pow_fast(rho, pm2_) * rho;
          const double sc = std::sinh(ell) / wn;
          const double ch = std::cosh(ell);
          for (Eigen::Index i = 0; i < D; ++i) x[i] = ch * x[i] + sc * w_[i];
          double sp = 0.0;
          for (Eigen::Index i = 1; i < D; ++i) sp += x[i] * x[i];
          x[0] = std::sqrt(1.0 + sp);
        }
        break;
      }
    }
    const double d = dist_to_center(x);
    if (d > limit_) {
      throw InternalInvariantError(
          "chain left the retention set at step " + std::to_string(k) +
          ": distance to center " + std::to_string(d) + " exceeds " +
          std::to_string(limit_) + " (t = " + std::to_string(t) + ")");
    }
    return rho;
  }

 private:
  ModelSpace s_;
  Point center_;
  double p_, pm2_, limit_;
  Vec w_;
};

void check_start(const ModelSpace& s, const BallContext& ctx,
                 const Point& x0) {
  s.check_point(x0);
  const double d = distance(s, ctx.center, x0);
  if (d > ctx.inner_radius + 1e-9) {
    throw InputError("start point at distance " + std::to_string(d) +
                     " from the center is outside the retention set (radius " +
                     std::to_string(ctx.inner_radius) + ")");
  }
}

}  // namespace

StepSchedule StepSchedule::harmonic(double delta, double cap) {
  if (!(delta > 0.0) || !(cap > 0.0)) {
    throw InputError("harmonic schedule needs delta > 0 and cap > 0");
  }
  StepSchedule s;
  s.delta_ = delta;
  s.cap_ = cap;
  return s;
}

StepSchedule StepSchedule::custom(std::function<double(std::int64_t)> step,
                                  double cap) {
  if (!step) throw InputError("custom schedule needs a generator");
  if (!(cap > 0.0)) throw InputError("custom schedule needs cap > 0");
  StepSchedule s;
  s.cap_ = cap;
  s.custom_ = std::move(step);
  return s;
}

double StepSchedule::operator()(std::int64_t k) const {
  if (k < 1) throw InputError("step indices start at 1");
  if (custom_) {
    const double t = custom_(k);
    if (!(t > 0.0)) {
      throw InputError("custom schedule emitted a non-positive step at k = " +
                       std::to_string(k));
    }
    if (t > cap_ * (1.0 + 1e-12)) {
      throw InputError("custom schedule emitted t_k = " + std::to_string(t) +
                       " above the cap " + std::to_string(cap_) + " at k = " +
                       std::to_string(k));
    }
    return t;
  }
  return std::min(delta_ / static_cast<double>(k), cap_);
}

Tangent sample_gradient(const ModelSpace& s, const Point& x, const Point& y,
                        double p) {
  const double rho = distance(s, x, y);
  Tangent out{x, Vec::Zero(x.size())};
  if (rho <= 1e-12) return out;  // convention: zero gradient at coincidence
  Tangent lg = log_map(s, x, y);
  out.vec = (-p * pow_fast(rho, p - 2.0)) * lg.vec;
  return out;
}

double objective(const ModelSpace& s, const DiscreteMeasure& mu,
                 const Point& x, double p) {
  const int m = mu.size();
  std::vector<double> terms(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double rho = distance(s, x, mu.point(i));
    terms[static_cast<std::size_t>(i)] = mu.weight(i) * pow_fast(rho, p);
  }
  return pairwise_sum(terms.data(), terms.size());
}

Tangent objective_gradient(const ModelSpace& s, const DiscreteMeasure& mu,
                           const Point& x, double p) {
  Tangent out{x, Vec::Zero(x.size())};
  for (int i = 0; i < mu.size(); ++i) {
    Tangent g = sample_gradient(s, x, mu.point(i), p);
    out.vec += mu.weight(i) * g.vec;
  }
  s.project_tangent(x, out.vec);
  return out;
}

Point sgd_step(const ModelSpace& s, const Point& x, const Point& q, double t,
               double p, const BallContext* ctx) {
  if (!(t > 0.0)) throw InputError("step size must be > 0");
  Tangent g = sample_gradient(s, x, q, p);
  Point out = x;
  if (g.vec.squaredNorm() > 0.0) {
    out = exp_map(s, Tangent{x, -t * g.vec});
  }
  if (ctx != nullptr) {
    const double d = distance(s, ctx->center, out);
    if (d > ctx->inner_radius + 1e-9) {
      throw InternalInvariantError(
          "single step left the retention set: distance " + std::to_string(d) +
          " vs " + std::to_string(ctx->inner_radius) + " (t = " +
          std::to_string(t) + ")");
    }
  }
  return out;
}

Point default_start(const ModelSpace& s, const DiscreteMeasure& mu, double p) {
  int best = 0;
  double best_f = objective(s, mu, mu.point(0), p);
  for (int i = 1; i < mu.size(); ++i) {
    const double f = objective(s, mu, mu.point(i), p);
    if (f < best_f) {
      best_f = f;
      best = i;
    }
  }
  return mu.point(best);
}

ChainTrace run_chain(const ModelSpace& s, const DiscreteMeasure& mu,
                     const BallContext& ctx, const StepSchedule& schedule,
                     const Point& x0, std::int64_t n, RngStream& rng,
                     const OracleResult* oracle, double c_second) {
  if (n < 1) throw InputError("chain length must be >= 1");
  check_start(s, ctx, x0);
  StepKernel kern(s, ctx);
  ChainTrace tr;
  tr.states.reserve(static_cast<std::size_t>(n) + 1);
  tr.steps_used.reserve(static_cast<std::size_t>(n));
  tr.sampled.reserve(static_cast<std::size_t>(n));
  Point x = x0;
  tr.states.push_back(x);

  const bool diag = oracle != nullptr;
  std::vector<double> f_e_support;  // rho^p(e, point_i), fixed per support
  double prev_rho2 = 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (diag) {
    tr.diagnostics.reserve(static_cast<std::size_t>(n));
    f_e_support.resize(static_cast<std::size_t>(mu.size()));
    for (int i = 0; i < mu.size(); ++i) {
      f_e_support[static_cast<std::size_t>(i)] =
          pow_fast(distance(s, oracle->e_p, mu.point(i)), ctx.p);
    }
    const double d0 = distance(s, x, oracle->e_p);
    prev_rho2 = d0 * d0;
  }

  for (std::int64_t k = 1; k <= n; ++k) {
    const double t = schedule(k);
    const int idx = mu.sample_index(rng);
    const double rho_xq = kern.advance(x, mu.point(idx), t, k);
    tr.states.push_back(x);
    tr.steps_used.push_back(t);
    tr.sampled.push_back(idx);
    if (diag) {
      const double d = distance(s, x, oracle->e_p);
      const double cur_rho2 = d * d;
      StepDiagnostics sd;
      sd.rho_sq_to_oracle = cur_rho2;
      if (ctx.p < 2.0 && c_second > 0.0) {
        const double f_x = pow_fast(rho_xq, ctx.p);
        const double f_e = f_e_support[static_cast<std::size_t>(idx)];
        sd.descent_slack =
            cur_rho2 - prev_rho2 + 2.0 * t * (f_x - f_e) - c_second * t * t;
      } else {
        sd.descent_slack = nan;
      }
      tr.diagnostics.push_back(sd);
      prev_rho2 = cur_rho2;
    }
  }
  return tr;
}

std::vector<Point> run_chain_at(const ModelSpace& s, const DiscreteMeasure& mu,
                                const BallContext& ctx,
                                const StepSchedule& schedule, const Point& x0,
                                const std::vector<std::int64_t>& ks,
                                RngStream& rng) {
  if (ks.empty()) throw InputError("no observation indices given");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || (i > 0 && ks[i] <= ks[i - 1])) {
      throw InputError("observation indices must be positive and strictly "
                       "increasing");
    }
  }
  check_start(s, ctx, x0);
  StepKernel kern(s, ctx);
  Point x = x0;
  std::vector<Point> out;
  out.reserve(ks.size());
  std::size_t next = 0;
  const std::int64_t n = ks.back();
  for (std::int64_t k = 1; k <= n; ++k) {
    const double t = schedule(k);
    const int idx = mu.sample_index(rng);
    kern.advance(x, mu.point(idx), t, k);
    if (k == ks[next]) {
      out.push_back(x);
      ++next;
    }
  }
  return out;
}

namespace {

// Effective descent direction for the deterministic solver. At p = 1 an
// iterate sitting on a support point needs the subgradient treatment: the
// point is optimal iff the averaged gradient of the other points has norm
// at most the local weight; otherwise the minimal-norm subgradient is a
// strict descent direction.
struct OracleGradient {
  Vec vec;
  double norm = 0.0;
  bool at_support_minimum = false;
  int support_index = -1;
};

OracleGradient oracle_gradient(const ModelSpace& s, const DiscreteMeasure& mu,
                               const Point& x, double p) {
  OracleGradient out;
  if (p == 1.0) {
    for (int i = 0; i < mu.size(); ++i) {
      if (distance(s, x, mu.point(i)) <= 1e-9) {
        Vec sub = Vec::Zero(x.size());
        for (int j = 0; j < mu.size(); ++j) {
          if (j == i) continue;
          sub += mu.weight(j) *
                 sample_gradient(s, mu.point(i), mu.point(j), 1.0).vec;
        }
        const double ns = std::sqrt(sub.squaredNorm());
        if (ns <= mu.weight(i) + 1e-12) {
          out.at_support_minimum = true;
          out.support_index = i;
          return out;
        }
        out.vec = (1.0 - mu.weight(i) / ns) * sub;
        s.project_tangent(x, out.vec);
        out.norm = std::sqrt(out.vec.squaredNorm());
        return out;
      }
    }
  }
  Tangent g = objective_gradient(s, mu, x, p);
  out.vec = std::move(g.vec);
  out.norm = std::sqrt(out.vec.squaredNorm());
  return out;
}

}  // namespace

OracleResult oracle_mean(const ModelSpace& s, const DiscreteMeasure& mu,
                         const BallContext& ctx, double tol,
                         std::int64_t max_iter) {
  if (!(tol > 0.0)) throw InputError("oracle tolerance must be > 0");
  if (max_iter < 1) throw InputError("oracle needs max_iter >= 1");
  const double p = ctx.p;
  Point x = default_start(s, mu, p);
  double f = objective(s, mu, x, p);
  const double eta0 =
      ctx.rho_gap() / (2.0 * p * std::pow(2.0 * ctx.radius, p - 1.0));
  const double eta_max = 1e6 * eta0;
  const double limit = ctx.inner_radius + 1e-12;
  double eta = eta0;
  double best_gn = std::numeric_limits<double>::infinity();

  for (std::int64_t it = 1; it <= max_iter; ++it) {
    OracleGradient g = oracle_gradient(s, mu, x, p);
    if (g.at_support_minimum) {
      const Point& e = mu.point(g.support_index);
      return OracleResult{e, 0.0, it, objective(s, mu, e, p)};
    }
    best_gn = std::min(best_gn, g.norm);
    if (g.norm <= tol) return OracleResult{x, g.norm, it, f};

    // Backtrack on the objective.
    bool accepted = false;
    double eta_try = eta;
    for (int h = 0; h <= 60; ++h) {
      Point cand = exp_map(s, Tangent{x, -eta_try * g.vec});
      if (distance(s, ctx.center, cand) <= limit) {
        const double fc = objective(s, mu, cand, p);
        if (fc < f - 1e-4 * eta_try * g.norm * g.norm) {
          x = std::move(cand);
          f = fc;
          eta = (h == 0) ? std::min(eta_try * 2.0, eta_max) : eta_try;
          accepted = true;
          break;
        }
      }
      eta_try *= 0.5;
    }
    if (accepted) continue;

    // Objective is at float resolution; shrink the gradient norm directly.
    eta_try = eta0;
    for (int h = 0; h <= 60; ++h) {
      Point cand = exp_map(s, Tangent{x, -eta_try * g.vec});
      if (distance(s, ctx.center, cand) <= limit) {
        OracleGradient gc = oracle_gradient(s, mu, cand, p);
        if (gc.at_support_minimum) {
          const Point& e = mu.point(gc.support_index);
          return OracleResult{e, 0.0, it, objective(s, mu, e, p)};
        }
        if (gc.norm < g.norm * (1.0 - 1e-6)) {
          x = std::move(cand);
          f = objective(s, mu, x, p);
          accepted = true;
          break;
        }
      }
      eta_try *= 0.5;
    }
    if (!accepted) {
      throw NoConvergenceError(
          "deterministic solver stalled at gradient norm " +
              std::to_string(g.norm) + " (tolerance " + std::to_string(tol) +
              ")",
          g.norm);
    }
  }
  throw NoConvergenceError("deterministic solver hit the iteration limit with "
                           "best gradient norm " + std::to_string(best_gn),
                           best_gn);
}

}  // namespace pmean
