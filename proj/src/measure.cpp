#include "pmean/measure.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pmean {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(const ModelSpace& space,
                                 std::vector<Point> points,
                                 std::vector<double> weights)
    : space_(space), points_(std::move(points)), weights_(std::move(weights)) {
  const size_t m = points_.size();
  if (m < 2) {
    throw InputError("measure needs at least 2 support points, got " +
                     std::to_string(m));
  }
  if (weights_.size() != m) {
    throw InputError("measure has " + std::to_string(m) + " points but " +
                     std::to_string(weights_.size()) + " weights");
  }
  for (const Point& x : points_) space_.check_point(x);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      if (distance(space_, points_[i], points_[j]) <= 1e-10) {
        throw InputError("support points " + std::to_string(i) + " and " +
                         std::to_string(j) + " coincide (distance <= 1e-10)");
      }
    }
  }
  double sum = 0.0;
  for (size_t i = 0; i < m; ++i) {
    if (!(weights_[i] >= 1e-15)) {
      throw InputError("weight " + std::to_string(i) +
                       " is below 1e-15 (or not positive)");
    }
    sum += weights_[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InputError("weights sum to " + fmt(sum) + ", expected 1");
  }
  cumulative_.resize(m);
  double acc = 0.0;
  for (size_t i = 0; i < m; ++i) {
    acc += weights_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;  // exact upper end for the inverse CDF
  for (size_t i = 1; i < m; ++i) {
    if (!(cumulative_[i] > cumulative_[i - 1])) {
      throw InputError("cumulative weights are not strictly increasing");
    }
  }
}

DiscreteMeasure DiscreteMeasure::uniform(const ModelSpace& space,
                                         std::vector<Point> points) {
  const size_t m = points.size();
  if (m == 0) throw InputError("measure needs at least 2 support points, got 0");
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  return DiscreteMeasure(space, std::move(points), std::move(w));
}

int DiscreteMeasure::sample_index(RngStream& rng) const {
  const double u = rng.uniform();  // in [0, 1)
  const size_t m = cumulative_.size();
  for (size_t i = 0; i + 1 < m; ++i) {
    if (u < cumulative_[i]) return static_cast<int>(i);
  }
  return static_cast<int>(m - 1);
}

double admissible_radius(const ModelSpace& s, double p) {
  if (!(p >= 1.0)) throw InputError("exponent p must be >= 1, got " + fmt(p));
  double period = std::numeric_limits<double>::infinity();
  if (s.alpha > 0.0) {
    period = (p < 2.0) ? kPi / (2.0 * s.alpha) : kPi / s.alpha;
  }
  return 0.5 * std::min(s.injectivity_radius, period);
}

BallContext validate_admissibility(const ModelSpace& s,
                                   const DiscreteMeasure& mu,
                                   const Point& center, double radius,
                                   double p) {
  if (s.kind != mu.space().kind || s.dim != mu.space().dim) {
    throw InputError("measure was built on " +
                     std::string(mu.space().name()) + " d=" +
                     std::to_string(mu.space().dim) + ", validation asked on " +
                     s.name() + " d=" + std::to_string(s.dim));
  }
  if (!(radius > 0.0)) throw InputError("radius must be > 0, got " + fmt(radius));
  if (!(p >= 1.0)) throw InputError("exponent p must be >= 1, got " + fmt(p));
  s.check_point(center);

  const double r_adm = admissible_radius(s, p);
  if (!(radius < r_adm)) {
    throw AdmissibilityError(
        "radius " + fmt(radius) + " is not below the admissible radius " +
        fmt(r_adm) + " for p = " + fmt(p) + " on " + s.name() +
        " (need r < half the min of the injectivity radius and the "
        "curvature period for this p)");
  }

  double max_dist = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    const double d = distance(s, center, mu.point(i));
    if (!(d < radius)) {
      throw SupportContainmentError(
          "support point " + std::to_string(i) + " at distance " + fmt(d) +
          " from the center is not strictly inside the ball of radius " +
          fmt(radius));
    }
    max_dist = std::max(max_dist, d);
  }

  BallContext ctx;
  ctx.center = center;
  ctx.radius = radius;
  ctx.p = p;
  ctx.max_support_dist = max_dist;
  ctx.eps = 0.5 * (radius - max_dist);
  ctx.inner_radius = radius - ctx.eps;
  if (!(ctx.eps > 0.0)) {
    throw SupportContainmentError(
        "support touches the ball boundary (gap " + fmt(radius - max_dist) +
        "); the retention set would be empty");
  }

  if (p == 1.0) {
    // The median is only unique when the support spans more than one
    // geodesic: the log vectors at the first point must have rank >= 2.
    const int m = mu.size();
    if (m < 3) {
      throw DegenerateSupportError(
          "p = 1 needs at least 3 support points off a common geodesic");
    }
    const Point& base = mu.point(0);
    std::vector<Tangent> basis = orthonormal_basis(s, base);
    Mat rows(m - 1, s.dim);
    for (int i = 1; i < m; ++i) {
      Tangent t = log_map(s, base, mu.point(i));
      rows.row(i - 1) = tangent_coordinates(s, basis, t.vec).transpose();
    }
    Eigen::JacobiSVD<Mat> svd(rows);
    if (svd.singularValues().size() < 2 ||
        svd.singularValues()[1] <= 1e-8) {
      throw DegenerateSupportError(
          "p = 1 support lies on a single geodesic (second singular value " +
          fmt(svd.singularValues().size() < 2
                  ? 0.0
                  : svd.singularValues()[1]) +
          " <= 1e-8); the median is not unique");
    }
  }
  return ctx;
}

double growth_constant(const BallContext& ctx, const ModelSpace& s) {
  const double p = ctx.p;
  if (!(p > 1.0) || !(p <= 2.0)) {
    throw DeferredConstantError(
        "no closed-form growth constant for p = " + fmt(p) +
        "; supply the minimal Hessian eigenvalue at the minimizer "
        "(run the deterministic solver first)");
  }
  const ComparisonCoefficients cc = comparison_coefficients(s, ctx.radius);
  return p * std::pow(2.0 * ctx.radius, p - 2.0) *
         std::min(p - 1.0, cc.cot_term);
}

double growth_constant(const BallContext& ctx, const ModelSpace& s,
                       double lambda_min) {
  (void)s;
  if (!(lambda_min > 0.0)) {
    throw InputError("growth-constant proxy needs lambda_min > 0, got " +
                     fmt(lambda_min));
  }
  (void)ctx;
  return lambda_min;
}

double second_derivative_constant(const BallContext& ctx,
                                  const ModelSpace& s) {
  const double p = ctx.p;
  const double two_r = 2.0 * ctx.radius;
  const ComparisonCoefficients cc = comparison_coefficients(s, ctx.radius);
  if (p < 2.0) {
    return p * p * std::pow(two_r, 2.0 * p - 1.0) * cc.coth_term;
  }
  return (p * p * p / 4.0) * std::pow(two_r, 3.0 * p - 4.0) *
         (two_r * cc.coth_term + 2.0 * p - 4.0);
}

double step_cap(const BallContext& ctx, double c_growth) {
  if (!(c_growth > 0.0)) {
    throw InputError("step cap needs a positive growth constant");
  }
  const double geo =
      ctx.rho_gap() / (2.0 * ctx.p * std::pow(2.0 * ctx.radius, ctx.p - 1.0));
  return std::min(1.0 / c_growth, geo);
}

AlgoConstants algo_constants(const ModelSpace& s, const BallContext& ctx) {
  AlgoConstants c;
  c.c_growth = growth_constant(ctx, s);
  c.c_second = second_derivative_constant(ctx, s);
  c.delta1 = step_cap(ctx, c.c_growth);
  return c;
}

AlgoConstants algo_constants(const ModelSpace& s, const BallContext& ctx,
                             double lambda_min) {
  AlgoConstants c;
  c.c_growth = growth_constant(ctx, s, lambda_min);
  c.lambda_min_estimate = lambda_min;
  c.c_second = second_derivative_constant(ctx, s);
  c.delta1 = step_cap(ctx, c.c_growth);
  return c;
}

}  // namespace pmean
