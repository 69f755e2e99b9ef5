#pragma once

#include <Eigen/Dense>

#include <vector>

#include "pmean/errors.hpp"

namespace pmean {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Manifold points in ambient coordinates: R^d for flat space, the unit
// sphere in R^{d+1}, or the upper hyperboloid sheet in Minkowski R^{1,d}.
using Point = Vec;

enum class SpaceKind { Euclidean, Sphere, Hyperbolic };

struct Tangent {
  Point base;
  Vec vec;
};

// One of the three constant-curvature model spaces. alpha is the square
// root of the upper curvature bound, beta the square root of minus the
// lower bound; the flat limits alpha = 0 / beta = 0 are taken literally.
struct ModelSpace {
  SpaceKind kind = SpaceKind::Euclidean;
  int dim = 0;                // intrinsic dimension d
  double alpha = 0.0;
  double beta = 0.0;
  double injectivity_radius = 0.0;

  static ModelSpace euclidean(int d);
  static ModelSpace sphere(int d);
  static ModelSpace hyperbolic(int d);

  int ambient_dim() const;
  const char* name() const;

  // Ambient metric: plain dot product except on the hyperboloid, where it
  // is the Minkowski form with signature (-,+,...,+).
  double metric_dot(const Vec& u, const Vec& v) const;

  // Distance of x from the embedding constraint set.
  double embedding_defect(const Point& x) const;
  bool on_manifold(const Point& x, double tol = 1e-12) const;
  void check_point(const Point& x) const;  // dims + embedding, throws InputError

  // Snap x back onto the constraint set (unit norm / hyperboloid sheet).
  void project_point(Point& x) const;

  // Remove the normal component of v at base point x.
  void project_tangent(const Point& x, Vec& v) const;
};

double distance(const ModelSpace& s, const Point& x, const Point& y);

Point exp_map(const ModelSpace& s, const Tangent& v);

Tangent log_map(const ModelSpace& s, const Point& x, const Point& y);

// log_map(x,y) / distance(x,y); callers must handle x == y themselves.
Tangent unit_direction(const ModelSpace& s, const Point& x, const Point& y);

// Deterministic orthonormal basis of T_xM: Gram-Schmidt over the projected
// ambient axes, skipping axes that project to (near) zero.
std::vector<Tangent> orthonormal_basis(const ModelSpace& s, const Point& x);

// Basis vectors as columns of an ambient_dim x d matrix.
Mat basis_matrix(const std::vector<Tangent>& basis);

// Coordinates of an ambient tangent vector in the given orthonormal basis.
Vec tangent_coordinates(const ModelSpace& s, const std::vector<Tangent>& basis,
                        const Vec& v);

// Curvature comparison factors entering the step-size constants:
//   cot_term  = 2*alpha*r * cot(2*alpha*r)   (limit 1 as alpha -> 0)
//   coth_term = beta * coth(2*beta*r)        (limit 1/(2r) as beta -> 0)
// Small arguments are evaluated by series to keep the flat limits exact.
struct ComparisonCoefficients {
  double cot_term;
  double coth_term;
};
ComparisonCoefficients comparison_coefficients(const ModelSpace& s, double r);

// x * cot(x) and x * coth(x) with series fallback below 1e-6.
double xcot(double x);
double xcoth(double x);

}  // namespace pmean
