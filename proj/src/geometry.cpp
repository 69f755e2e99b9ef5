#include "pmean/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace pmean {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_size(const ModelSpace& s, const Vec& x, const char* what) {
  if (x.size() != s.ambient_dim()) {
    throw InputError(std::string(what) + ": expected ambient dimension " +
                     std::to_string(s.ambient_dim()) + ", got " +
                     std::to_string(x.size()));
  }
}

}  // namespace

ModelSpace ModelSpace::euclidean(int d) {
  if (d < 1) throw InputError("euclidean: dimension must be >= 1");
  ModelSpace s;
  s.kind = SpaceKind::Euclidean;
  s.dim = d;
  s.alpha = 0.0;
  s.beta = 0.0;
  s.injectivity_radius = std::numeric_limits<double>::infinity();
  return s;
}

ModelSpace ModelSpace::sphere(int d) {
  if (d < 1) throw InputError("sphere: dimension must be >= 1");
  ModelSpace s;
  s.kind = SpaceKind::Sphere;
  s.dim = d;
  s.alpha = 1.0;
  s.beta = 0.0;
  s.injectivity_radius = kPi;
  return s;
}

ModelSpace ModelSpace::hyperbolic(int d) {
  if (d < 1) throw InputError("hyperbolic: dimension must be >= 1");
  ModelSpace s;
  s.kind = SpaceKind::Hyperbolic;
  s.dim = d;
  s.alpha = 0.0;
  s.beta = 1.0;
  s.injectivity_radius = std::numeric_limits<double>::infinity();
  return s;
}

int ModelSpace::ambient_dim() const {
  return kind == SpaceKind::Euclidean ? dim : dim + 1;
}

const char* ModelSpace::name() const {
  switch (kind) {
    case SpaceKind::Euclidean: return "euclidean";
    case SpaceKind::Sphere: return "sphere";
    case SpaceKind::Hyperbolic: return "hyperbolic";
  }
  return "?";
}

double ModelSpace::metric_dot(const Vec& u, const Vec& v) const {
  if (kind != SpaceKind::Hyperbolic) return u.dot(v);
  double acc = -u[0] * v[0];
  for (Eigen::Index i = 1; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double ModelSpace::embedding_defect(const Point& x) const {
  switch (kind) {
    case SpaceKind::Euclidean:
      return 0.0;
    case SpaceKind::Sphere:
      return std::abs(x.norm() - 1.0);
    case SpaceKind::Hyperbolic: {
      if (x[0] <= 0.0) return std::numeric_limits<double>::infinity();
      return std::abs(metric_dot(x, x) + 1.0);
    }
  }
  return std::numeric_limits<double>::infinity();
}

bool ModelSpace::on_manifold(const Point& x, double tol) const {
  if (x.size() != ambient_dim()) return false;
  return embedding_defect(x) <= tol;
}

void ModelSpace::check_point(const Point& x) const {
  require_size(*this, x, "point");
  double defect = embedding_defect(x);
  if (!(defect <= 1e-9)) {
    throw InputError(std::string("point is off the ") + name() +
                     " constraint set (defect " + std::to_string(defect) + ")");
  }
}

void ModelSpace::project_point(Point& x) const {
  switch (kind) {
    case SpaceKind::Euclidean:
      return;
    case SpaceKind::Sphere: {
      double n = x.norm();
      if (n <= 0.0) throw DomainError("cannot project the origin to the sphere");
      x /= n;
      return;
    }
    case SpaceKind::Hyperbolic: {
      double spatial2 = x.tail(x.size() - 1).squaredNorm();
      x[0] = std::sqrt(1.0 + spatial2);
      return;
    }
  }
}

void ModelSpace::project_tangent(const Point& x, Vec& v) const {
  switch (kind) {
    case SpaceKind::Euclidean:
      return;
    case SpaceKind::Sphere:
      v -= x.dot(v) * x;
      return;
    case SpaceKind::Hyperbolic:
      // <x,x>_M = -1, so adding <x,v>_M * x cancels the normal component.
      v += metric_dot(x, v) * x;
      return;
  }
}

double distance(const ModelSpace& s, const Point& x, const Point& y) {
  require_size(s, x, "distance: x");
  require_size(s, y, "distance: y");
  switch (s.kind) {
    case SpaceKind::Euclidean:
      return (x - y).norm();
    case SpaceKind::Sphere: {
      // atan2 of the rejection norm against the cosine is accurate for both
      // nearby and nearly antipodal pairs, unlike acos of the raw dot.
      double c = x.dot(y);
      double w2 = (y - c * x).squaredNorm();
      return std::atan2(std::sqrt(w2), c);
    }
    case SpaceKind::Hyperbolic: {
      // y = cosh(t) x + sinh(t) u with u unit spacelike, so the Minkowski
      // rejection y + <x,y>_M x has Minkowski norm sinh(t).
      double c = s.metric_dot(x, y);
      Vec w = y + c * x;
      double s2 = s.metric_dot(w, w);
      return std::asinh(std::sqrt(std::max(s2, 0.0)));
    }
  }
  throw InternalInvariantError("distance: unknown space kind");
}

Point exp_map(const ModelSpace& s, const Tangent& v) {
  require_size(s, v.base, "exp_map: base");
  require_size(s, v.vec, "exp_map: vec");
  double n2 = s.metric_dot(v.vec, v.vec);
  double n = std::sqrt(std::max(n2, 0.0));
  if (n == 0.0) return v.base;
  if (n >= s.injectivity_radius) {
    throw DomainError("exp_map: step length " + std::to_string(n) +
                      " reaches the injectivity radius");
  }
  switch (s.kind) {
    case SpaceKind::Euclidean:
      return v.base + v.vec;
    case SpaceKind::Sphere: {
      Point out = std::cos(n) * v.base + (std::sin(n) / n) * v.vec;
      s.project_point(out);
      return out;
    }
    case SpaceKind::Hyperbolic: {
      Point out = std::cosh(n) * v.base + (std::sinh(n) / n) * v.vec;
      s.project_point(out);
      return out;
    }
  }
  throw InternalInvariantError("exp_map: unknown space kind");
}

Tangent log_map(const ModelSpace& s, const Point& x, const Point& y) {
  require_size(s, x, "log_map: x");
  require_size(s, y, "log_map: y");
  Tangent out{x, Vec::Zero(x.size())};
  switch (s.kind) {
    case SpaceKind::Euclidean:
      out.vec = y - x;
      return out;
    case SpaceKind::Sphere: {
      double c = x.dot(y);
      Vec w = y - c * x;
      double wn = w.norm();
      double theta = std::atan2(wn, c);
      if (wn == 0.0) {
        if (c < 0.0) throw DomainError("log_map: antipodal points");
        return out;  // y == x
      }
      if (theta > kPi - 1e-9) {
        throw DomainError("log_map: points are antipodal to within 1e-9");
      }
      out.vec = (theta / wn) * w;
      s.project_tangent(x, out.vec);
      return out;
    }
    case SpaceKind::Hyperbolic: {
      double c = s.metric_dot(x, y);
      Vec w = y + c * x;
      double wn = std::sqrt(std::max(s.metric_dot(w, w), 0.0));
      if (wn == 0.0) return out;  // y == x
      out.vec = (std::asinh(wn) / wn) * w;
      s.project_tangent(x, out.vec);
      return out;
    }
  }
  throw InternalInvariantError("log_map: unknown space kind");
}

Tangent unit_direction(const ModelSpace& s, const Point& x, const Point& y) {
  double rho = distance(s, x, y);
  if (rho <= 1e-12) {
    throw DomainError("unit_direction: points coincide to within 1e-12");
  }
  Tangent t = log_map(s, x, y);
  t.vec /= rho;
  return t;
}

std::vector<Tangent> orthonormal_basis(const ModelSpace& s, const Point& x) {
  s.check_point(x);
  const int d = s.dim;
  const int D = s.ambient_dim();
  std::vector<Tangent> basis;
  basis.reserve(d);
  for (int axis = 0; axis < D && static_cast<int>(basis.size()) < d; ++axis) {
    Vec v = Vec::Zero(D);
    v[axis] = 1.0;
    s.project_tangent(x, v);
    for (const Tangent& b : basis) v -= s.metric_dot(v, b.vec) * b.vec;
    double n = std::sqrt(std::max(s.metric_dot(v, v), 0.0));
    if (n > 1e-8) basis.push_back(Tangent{x, v / n});
  }
  if (static_cast<int>(basis.size()) != d) {
    throw InternalInvariantError("orthonormal_basis: span collapsed");
  }
  return basis;
}

Mat basis_matrix(const std::vector<Tangent>& basis) {
  if (basis.empty()) return Mat(0, 0);
  Mat B(basis[0].vec.size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    B.col(static_cast<Eigen::Index>(j)) = basis[j].vec;
  }
  return B;
}

Vec tangent_coordinates(const ModelSpace& s, const std::vector<Tangent>& basis,
                        const Vec& v) {
  Vec coords(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    coords[static_cast<Eigen::Index>(j)] = s.metric_dot(basis[j].vec, v);
  }
  return coords;
}

ComparisonCoefficients comparison_coefficients(const ModelSpace& s, double r) {
  if (!(r > 0.0)) throw InputError("comparison_coefficients: r must be > 0");
  if (s.alpha > 0.0 && 2.0 * s.alpha * r >= kPi) {
    throw DomainError("comparison_coefficients: 2*alpha*r = " +
                      std::to_string(2.0 * s.alpha * r) +
                      " must stay below pi");
  }
  ComparisonCoefficients c{};
  c.cot_term = xcot(2.0 * s.alpha * r);
  c.coth_term = xcoth(2.0 * s.beta * r) / (2.0 * r);
  return c;
}

double xcot(double x) {
  if (std::abs(x) < 1e-6) {
    double x2 = x * x;
    return 1.0 - x2 / 3.0 - x2 * x2 / 45.0;
  }
  return x * std::cos(x) / std::sin(x);
}

double xcoth(double x) {
  if (std::abs(x) < 1e-6) {
    double x2 = x * x;
    return 1.0 + x2 / 3.0 - x2 * x2 / 45.0;
  }
  return x / std::tanh(x);
}

}  // namespace pmean
