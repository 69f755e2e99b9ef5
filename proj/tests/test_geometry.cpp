#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pmean/geometry.hpp"
#include "pmean/rng.hpp"

using namespace pmean;

namespace {

const double kPi = 3.14159265358979323846;

Point random_point(const ModelSpace& s, RngStream& rng) {
  if (s.kind == SpaceKind::Euclidean) {
    Point x(s.dim);
    for (int i = 0; i < s.dim; ++i) x[i] = rng.normal();
    return x;
  }
  Point base(s.ambient_dim());
  base.setZero();
  base[s.kind == SpaceKind::Sphere ? s.ambient_dim() - 1 : 0] = 1.0;
  Vec v(s.ambient_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  s.project_tangent(base, v);
  const double norm = std::sqrt(s.metric_dot(v, v));
  if (norm < 1e-12) return base;
  const double len = 1.2 * rng.uniform();
  return exp_map(s, {base, (len / norm) * v});
}

Vec random_tangent(const ModelSpace& s, const Point& x, double max_len,
                   RngStream& rng) {
  Vec v(s.ambient_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  s.project_tangent(x, v);
  const double norm = std::sqrt(s.metric_dot(v, v));
  if (norm < 1e-12) return Vec::Zero(s.ambient_dim());
  return (max_len * rng.uniform() / norm) * v;
}

std::vector<ModelSpace> test_spaces() {
  return {ModelSpace::euclidean(3), ModelSpace::sphere(2),
          ModelSpace::hyperbolic(2)};
}

}  // namespace

TEST_CASE("model space factories") {
  ModelSpace e = ModelSpace::euclidean(3);
  CHECK(e.dim == 3);
  CHECK(e.ambient_dim() == 3);
  CHECK(e.alpha == 0.0);
  CHECK(e.beta == 0.0);
  CHECK(std::isinf(e.injectivity_radius));

  ModelSpace s = ModelSpace::sphere(2);
  CHECK(s.ambient_dim() == 3);
  CHECK(s.alpha == 1.0);
  CHECK(s.beta == 0.0);
  CHECK(s.injectivity_radius == doctest::Approx(kPi));

  ModelSpace h = ModelSpace::hyperbolic(2);
  CHECK(h.ambient_dim() == 3);
  CHECK(h.alpha == 0.0);
  CHECK(h.beta == 1.0);
  CHECK(std::isinf(h.injectivity_radius));

  CHECK_THROWS_AS(ModelSpace::euclidean(0), InputError);
  CHECK_THROWS_AS(ModelSpace::sphere(-1), InputError);
}

TEST_CASE("minkowski metric signature") {
  ModelSpace h = ModelSpace::hyperbolic(2);
  Vec u(3), v(3);
  u << 1.0, 0.0, 0.0;
  v << 1.0, 0.0, 0.0;
  CHECK(h.metric_dot(u, v) == doctest::Approx(-1.0));
  u << 0.0, 2.0, 3.0;
  CHECK(h.metric_dot(u, u) == doctest::Approx(13.0));
}

TEST_CASE("distance closed forms") {
  ModelSpace e = ModelSpace::euclidean(2);
  Point a(2), b(2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  CHECK(distance(e, a, b) == doctest::Approx(5.0));

  ModelSpace s = ModelSpace::sphere(2);
  Point p(3), q(3);
  p << 0.0, 0.0, 1.0;
  q << 1.0, 0.0, 0.0;
  CHECK(distance(s, p, q) == doctest::Approx(kPi / 2).epsilon(1e-12));

  ModelSpace h = ModelSpace::hyperbolic(2);
  const double t = 0.8;
  Point u(3), v(3);
  u << 1.0, 0.0, 0.0;
  v << std::cosh(t), std::sinh(t), 0.0;
  CHECK(distance(h, u, v) == doctest::Approx(t).epsilon(1e-12));
}

TEST_CASE("distance axioms on random triples") {
  RngStream rng(2024, 0);
  for (const ModelSpace& s : test_spaces()) {
    for (int it = 0; it < 1000; ++it) {
      Point x = random_point(s, rng);
      Point y = random_point(s, rng);
      Point z = random_point(s, rng);
      const double dxy = distance(s, x, y);
      const double dyx = distance(s, y, x);
      CHECK(dxy >= 0.0);
      CHECK(std::abs(dxy - dyx) <= 1e-10);
      CHECK(distance(s, x, x) <= 1e-12);
      CHECK(dxy <= distance(s, x, z) + distance(s, z, y) + 1e-10);
    }
  }
}

TEST_CASE("exp/log round trip") {
  RngStream rng(7, 0);
  for (const ModelSpace& s : test_spaces()) {
    const double max_len = 0.9 * std::min(s.injectivity_radius, 3.0);
    for (int it = 0; it < 1000; ++it) {
      Point x = random_point(s, rng);
      Vec v = random_tangent(s, x, max_len, rng);
      Point y = exp_map(s, {x, v});
      CHECK(s.embedding_defect(y) <= 1e-12);
      Tangent back = log_map(s, x, y);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        CHECK(std::abs(back.vec[i] - v[i]) <= 1e-9);
      }
      // metric length of the log equals the distance
      const double vnorm = std::sqrt(s.metric_dot(v, v));
      CHECK(std::abs(distance(s, x, y) - vnorm) <= 1e-10);
    }
  }
}

TEST_CASE("distance along a unit-speed geodesic") {
  RngStream rng(11, 0);
  for (const ModelSpace& s : test_spaces()) {
    const double max_len = 0.9 * std::min(s.injectivity_radius, 3.0);
    for (int it = 0; it < 500; ++it) {
      Point x = random_point(s, rng);
      Vec v = random_tangent(s, x, 1.0, rng);
      const double norm = std::sqrt(s.metric_dot(v, v));
      if (norm < 1e-9) continue;
      v /= norm;
      const double t = max_len * rng.uniform();
      Point y = exp_map(s, {x, t * v});
      CHECK(std::abs(distance(s, x, y) - t) <= 1e-10);
    }
  }
}

TEST_CASE("log_map tangency and zero at coincidence") {
  RngStream rng(13, 0);
  for (const ModelSpace& s : test_spaces()) {
    for (int it = 0; it < 200; ++it) {
      Point x = random_point(s, rng);
      Point y = random_point(s, rng);
      Tangent l = log_map(s, x, y);
      if (s.kind != SpaceKind::Euclidean) {
        CHECK(std::abs(s.metric_dot(l.vec, x)) <= 1e-10);
      }
      Tangent self = log_map(s, x, x);
      CHECK(self.vec.norm() <= 1e-12);
    }
  }
}

TEST_CASE("exp_map domain errors") {
  ModelSpace s = ModelSpace::sphere(2);
  Point x(3);
  x << 0.0, 0.0, 1.0;
  Vec v(3);
  v << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(exp_map(s, {x, kPi * v}), DomainError);
  CHECK_NOTHROW(exp_map(s, {x, 3.1 * v}));
}

TEST_CASE("log_map antipodal error") {
  ModelSpace s = ModelSpace::sphere(2);
  Point x(3), y(3);
  x << 0.0, 0.0, 1.0;
  y << 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(log_map(s, x, y), DomainError);
}

TEST_CASE("unit_direction") {
  RngStream rng(17, 0);
  for (const ModelSpace& s : test_spaces()) {
    for (int it = 0; it < 200; ++it) {
      Point x = random_point(s, rng);
      Point y = random_point(s, rng);
      if (distance(s, x, y) <= 1e-6) continue;
      Tangent u = unit_direction(s, x, y);
      CHECK(std::abs(std::sqrt(s.metric_dot(u.vec, u.vec)) - 1.0) <= 1e-10);
    }
    Point x = random_point(s, rng);
    CHECK_THROWS_AS(unit_direction(s, x, x), DomainError);
  }
}

TEST_CASE("orthonormal basis") {
  RngStream rng(19, 0);
  for (const ModelSpace& s : test_spaces()) {
    for (int it = 0; it < 100; ++it) {
      Point x = random_point(s, rng);
      std::vector<Tangent> basis = orthonormal_basis(s, x);
      REQUIRE(static_cast<int>(basis.size()) == s.dim);
      for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = 0; j < basis.size(); ++j) {
          const double dot = s.metric_dot(basis[i].vec, basis[j].vec);
          CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
        }
        if (s.kind != SpaceKind::Euclidean) {
          CHECK(std::abs(s.metric_dot(basis[i].vec, x)) <= 1e-10);
        }
      }
      // deterministic: recomputing gives the same vectors
      std::vector<Tangent> again = orthonormal_basis(s, x);
      for (std::size_t i = 0; i < basis.size(); ++i) {
        CHECK((basis[i].vec - again[i].vec).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("tangent coordinates invert the basis expansion") {
  RngStream rng(23, 0);
  for (const ModelSpace& s : test_spaces()) {
    Point x = random_point(s, rng);
    std::vector<Tangent> basis = orthonormal_basis(s, x);
    Vec coef(s.dim);
    for (int i = 0; i < s.dim; ++i) coef[i] = rng.normal();
    Vec v = Vec::Zero(s.ambient_dim());
    for (int i = 0; i < s.dim; ++i) v += coef[i] * basis[i].vec;
    Vec back = tangent_coordinates(s, basis, v);
    CHECK((back - coef).norm() <= 1e-12);
    CHECK(basis_matrix(basis).rows() == s.ambient_dim());
    CHECK(basis_matrix(basis).cols() == s.dim);
  }
}

TEST_CASE("point checks and projection") {
  ModelSpace s = ModelSpace::sphere(2);
  Point x(3);
  x << 0.6, 0.0, 0.8;
  CHECK_NOTHROW(s.check_point(x));
  Point bad(3);
  bad << 0.6, 0.0, 0.9;
  CHECK_THROWS_AS(s.check_point(bad), InputError);
  Point wrong_dim(2);
  wrong_dim << 1.0, 0.0;
  CHECK_THROWS_AS(s.check_point(wrong_dim), InputError);
  s.project_point(bad);
  CHECK(s.embedding_defect(bad) <= 1e-15);

  ModelSpace h = ModelSpace::hyperbolic(2);
  Point lower(3);
  lower << -1.0, 0.0, 0.0;  // wrong sheet
  CHECK_THROWS_AS(h.check_point(lower), InputError);
}

TEST_CASE("comparison coefficients") {
  ModelSpace sph = ModelSpace::sphere(2);
  ComparisonCoefficients cs = comparison_coefficients(sph, kPi / 8);
  CHECK(cs.cot_term == doctest::Approx(kPi / 4).epsilon(1e-14));
  CHECK(cs.coth_term == doctest::Approx(1.0 / (kPi / 4)).epsilon(1e-14));

  ModelSpace hyp = ModelSpace::hyperbolic(2);
  ComparisonCoefficients ch = comparison_coefficients(hyp, 1.0);
  CHECK(ch.cot_term == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ch.coth_term ==
        doctest::Approx(1.0 / std::tanh(2.0)).epsilon(1e-14));

  ModelSpace euc = ModelSpace::euclidean(2);
  ComparisonCoefficients ce = comparison_coefficients(euc, 0.75);
  CHECK(ce.cot_term == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ce.coth_term == doctest::Approx(1.0 / 1.5).epsilon(1e-15));

  CHECK_THROWS_AS(comparison_coefficients(euc, 0.0), InputError);
  CHECK_THROWS_AS(comparison_coefficients(euc, -1.0), InputError);
  CHECK_THROWS_AS(comparison_coefficients(sph, kPi / 2), DomainError);
}

TEST_CASE("xcot and xcoth series limits") {
  CHECK(xcot(0.0) == 1.0);
  CHECK(xcoth(0.0) == 1.0);
  CHECK(xcot(1e-8) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(xcoth(1e-8) == doctest::Approx(1.0).epsilon(1e-15));
  // continuity across the series/direct switchover at 1e-6
  CHECK(xcot(0.99e-6) == doctest::Approx(xcot(1.01e-6)).epsilon(1e-12));
  CHECK(xcoth(0.99e-6) == doctest::Approx(xcoth(1.01e-6)).epsilon(1e-12));
  CHECK(xcot(0.5) == doctest::Approx(0.5 / std::tan(0.5)).epsilon(1e-15));
  CHECK(xcoth(0.5) == doctest::Approx(0.5 / std::tanh(0.5)).epsilon(1e-15));
}
