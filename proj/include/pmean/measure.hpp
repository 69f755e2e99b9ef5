#pragma once

#include <optional>
#include <vector>

#include "pmean/geometry.hpp"
#include "pmean/rng.hpp"

namespace pmean {

// Weighted support points on one model space. Weights are strictly positive
// and sum to one; the support has at least two pairwise-distinct points.
class DiscreteMeasure {
 public:
  DiscreteMeasure(const ModelSpace& space, std::vector<Point> points,
                  std::vector<double> weights);
  static DiscreteMeasure uniform(const ModelSpace& space,
                                 std::vector<Point> points);

  const ModelSpace& space() const { return space_; }
  int size() const { return static_cast<int>(points_.size()); }
  const Point& point(int i) const { return points_[static_cast<size_t>(i)]; }
  double weight(int i) const { return weights_[static_cast<size_t>(i)]; }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  // Inverse-CDF draw over the precomputed cumulative weights; consumes one
  // uniform from the stream.
  int sample_index(RngStream& rng) const;
  const Point& sample(RngStream& rng) const {
    return points_[static_cast<size_t>(sample_index(rng))];
  }

 private:
  ModelSpace space_;
  std::vector<Point> points_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// Validated geodesic-ball setting for one (measure, center, radius, p)
// problem. eps is half the gap between the support and the ball boundary;
// the algorithm provably stays inside the closed ball of radius
// inner_radius = radius - eps around the center.
struct BallContext {
  Point center;
  double radius = 0.0;
  double p = 1.0;
  double eps = 0.0;
  double inner_radius = 0.0;
  double max_support_dist = 0.0;

  // Distance from the support to the complement of the ball.
  double rho_gap() const { return radius - max_support_dist; }
  // Diameter of the retention set (ball of radius inner_radius).
  double diameter_k() const { return 2.0 * inner_radius; }
};

// Step-size constants for the stochastic algorithm.
struct AlgoConstants {
  double c_growth = 0.0;   // quadratic-growth constant of the objective
  double c_second = 0.0;   // bound on second derivatives along step geodesics
  double delta1 = 0.0;     // hard cap on the step sizes
  std::optional<double> lambda_min_estimate;  // set when c_growth is a proxy
};

// Largest admissible ball radius for the given space and exponent.
double admissible_radius(const ModelSpace& s, double p);

// Checks the standing assumptions: radius below the admissible bound,
// support strictly inside the ball, and (for p = 1) support not contained
// in a single geodesic. Returns the populated context.
BallContext validate_admissibility(const ModelSpace& s,
                                   const DiscreteMeasure& mu,
                                   const Point& center, double radius,
                                   double p);

// Closed-form quadratic-growth constant, available for p in (1, 2] only:
//   p * (2r)^(p-2) * min(p - 1, cot_term).
// Other p need the minimal Hessian eigenvalue at the minimizer; call the
// overload below once that is known.
double growth_constant(const BallContext& ctx, const ModelSpace& s);

// Proxy growth constant for p = 1 and p > 2: the caller supplies the
// minimal eigenvalue of the objective Hessian at the minimizer.
double growth_constant(const BallContext& ctx, const ModelSpace& s,
                       double lambda_min);

// Uniform bound on the second derivative of the squared-distance /
// objective composition along algorithm geodesics:
//   p in [1,2): p^2 (2r)^(2p-1) * coth_term
//   p >= 2:     (p^3/4) (2r)^(3p-4) * (2r * coth_term + 2p - 4)
// with coth_term from comparison_coefficients (flat limit 1/(2r)).
double second_derivative_constant(const BallContext& ctx, const ModelSpace& s);

// Step cap: min(1 / c_growth, rho_gap / (2p (2r)^(p-1))).
double step_cap(const BallContext& ctx, double c_growth);

// Bundles the three constants; first form is the closed-form p in (1,2]
// path, second form uses the supplied eigenvalue proxy.
AlgoConstants algo_constants(const ModelSpace& s, const BallContext& ctx);
AlgoConstants algo_constants(const ModelSpace& s, const BallContext& ctx,
                             double lambda_min);

}  // namespace pmean
