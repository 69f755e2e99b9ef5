#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pmean/measure.hpp"
#include "pmean/measure_io.hpp"
#include "pmean/solver.hpp"

using namespace pmean;
using namespace testsupport;

namespace {
const double kPi = 3.14159265358979323846;
}

TEST_CASE("discrete measure construction and accessors") {
  MeasureProblem mp = hyper3(1.5);
  const DiscreteMeasure& mu = mp.measure;
  CHECK(mu.size() == 3);
  CHECK(mu.weight(0) == 0.5);
  CHECK(mu.weight(2) == 0.2);
  CHECK(mu.points().size() == 3);
  CHECK(mu.space().kind == SpaceKind::Hyperbolic);
}

TEST_CASE("discrete measure validation") {
  ModelSpace e = ModelSpace::euclidean(2);
  Point a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 0.0;

  CHECK_THROWS_AS(DiscreteMeasure::uniform(e, {a}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure(e, {a, b}, {0.5}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure(e, {a, a}, {0.5, 0.5}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure(e, {a, b}, {0.7, 0.7}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure(e, {a, b}, {1.0, 0.0}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure(e, {a, b}, {1.2, -0.2}), InputError);

  ModelSpace s = ModelSpace::sphere(2);
  Point off(3);
  off << 0.5, 0.5, 0.5;  // not unit length
  Point ok(3);
  ok << 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(DiscreteMeasure::uniform(s, {ok, off}), InputError);
}

TEST_CASE("sampling matches the weights") {
  MeasureProblem mp = hyper3(1.5);
  RngStream rng(101, 0);
  const int n = 100000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) counts[mp.measure.sample_index(rng)]++;
  for (int i = 0; i < 3; ++i) {
    const double w = mp.measure.weight(i);
    const double freq = static_cast<double>(counts[i]) / n;
    const double se = std::sqrt(w * (1.0 - w) / n);
    CHECK(std::abs(freq - w) <= 5.0 * se);
  }
  // same stream id, same seed: identical draws
  RngStream r1(55, 7), r2(55, 7);
  for (int i = 0; i < 100; ++i) {
    CHECK(mp.measure.sample_index(r1) == mp.measure.sample_index(r2));
  }
}

TEST_CASE("admissible radius") {
  ModelSpace sph = ModelSpace::sphere(2);
  CHECK(admissible_radius(sph, 1.0) == doctest::Approx(kPi / 4).epsilon(1e-15));
  CHECK(admissible_radius(sph, 1.5) == doctest::Approx(kPi / 4).epsilon(1e-15));
  CHECK(admissible_radius(sph, 2.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(admissible_radius(sph, 3.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(std::isinf(admissible_radius(ModelSpace::euclidean(2), 1.5)));
  CHECK(std::isinf(admissible_radius(ModelSpace::hyperbolic(2), 2.0)));
  CHECK_THROWS_AS(admissible_radius(sph, 0.5), InputError);
}

TEST_CASE("ball validation populates the context") {
  MeasureProblem mp = euclid4(2.0);
  BallContext ctx = ctx_of(mp);
  CHECK(ctx.p == 2.0);
  CHECK(ctx.radius == 1.0);
  CHECK(ctx.max_support_dist ==
        doctest::Approx(std::sqrt(0.17)).epsilon(1e-15));
  CHECK(ctx.eps == doctest::Approx(0.5 * (1.0 - std::sqrt(0.17))));
  CHECK(ctx.inner_radius == doctest::Approx(1.0 - ctx.eps));
  CHECK(ctx.rho_gap() == doctest::Approx(1.0 - std::sqrt(0.17)));
  CHECK(ctx.diameter_k() == doctest::Approx(2.0 * ctx.inner_radius));
}

TEST_CASE("ball validation rejects bad inputs") {
  MeasureProblem mp = sphere3(1.5);
  // radius at/above the admissible bound
  CHECK_THROWS_AS(validate_admissibility(mp.space, mp.measure, mp.center,
                                         kPi / 4, 1.5),
                  AdmissibilityError);
  // support not strictly inside the ball
  CHECK_THROWS_AS(validate_admissibility(mp.space, mp.measure, mp.center,
                                         0.3, 1.5),
                  SupportContainmentError);
  // wrong space
  CHECK_THROWS_AS(validate_admissibility(ModelSpace::sphere(3), mp.measure,
                                         mp.center, 0.7, 1.5),
                  InputError);
  CHECK_THROWS_AS(validate_admissibility(mp.space, mp.measure, mp.center,
                                         -0.1, 1.5),
                  InputError);
  CHECK_THROWS_AS(validate_admissibility(mp.space, mp.measure, mp.center,
                                         0.7, 0.9),
                  InputError);
}

TEST_CASE("p = 1 degenerate support detection") {
  ModelSpace e = ModelSpace::euclidean(2);
  Point c(2);
  c << 0.0, 0.0;

  // two points are always on one geodesic
  std::vector<Point> two(2, Point(2));
  two[0] << 0.3, 0.0;
  two[1] << -0.3, 0.0;
  DiscreteMeasure mu2 = DiscreteMeasure::uniform(e, two);
  CHECK_THROWS_AS(validate_admissibility(e, mu2, c, 1.0, 1.0),
                  DegenerateSupportError);
  CHECK_NOTHROW(validate_admissibility(e, mu2, c, 1.0, 2.0));

  // three collinear points
  std::vector<Point> line(3, Point(2));
  line[0] << 0.3, 0.3;
  line[1] << -0.3, -0.3;
  line[2] << 0.1, 0.1;
  DiscreteMeasure mu3 = DiscreteMeasure::uniform(e, line);
  CHECK_THROWS_AS(validate_admissibility(e, mu3, c, 1.0, 1.0),
                  DegenerateSupportError);

  // a genuine 2d spread passes
  CHECK_NOTHROW(ctx_of(euclid4(1.0)));
  CHECK_NOTHROW(ctx_of(sphere3(1.0)));

  // collinear on the sphere: three points on one great circle
  ModelSpace s = ModelSpace::sphere(2);
  std::vector<Point> arc(3, Point(3));
  for (int i = 0; i < 3; ++i) {
    const double t = 0.2 * (i - 1);
    arc[i] << std::sin(t), 0.0, std::cos(t);
  }
  Point pole(3);
  pole << 0.0, 0.0, 1.0;
  DiscreteMeasure mus = DiscreteMeasure::uniform(s, arc);
  CHECK_THROWS_AS(validate_admissibility(s, mus, pole, 0.7, 1.0),
                  DegenerateSupportError);
}

TEST_CASE("growth constant closed form") {
  // r = pi/8 on the unit sphere, p = 1.5:
  // 1.5 * (pi/4)^(-1/2) * min(0.5, (pi/4) cot(pi/4))
  BallContext ctx;
  ctx.radius = kPi / 8;
  ctx.p = 1.5;
  ModelSpace sph = ModelSpace::sphere(2);
  const double expected = 1.5 * std::pow(kPi / 4, -0.5) * 0.5;
  CHECK(growth_constant(ctx, sph) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(growth_constant(ctx, sph) == doctest::Approx(0.8462843753216345));

  // flat p = 2: constant is exactly p - 1 times p = 2
  BallContext ce;
  ce.radius = 1.0;
  ce.p = 2.0;
  CHECK(growth_constant(ce, ModelSpace::euclidean(2)) == 2.0);

  ce.p = 1.0;
  CHECK_THROWS_AS(growth_constant(ce, ModelSpace::euclidean(2)),
                  DeferredConstantError);
  ce.p = 3.0;
  CHECK_THROWS_AS(growth_constant(ce, ModelSpace::euclidean(2)),
                  DeferredConstantError);
  CHECK(growth_constant(ce, ModelSpace::euclidean(2), 1.75) == 1.75);
  CHECK_THROWS_AS(growth_constant(ce, ModelSpace::euclidean(2), -1.0),
                  InputError);
}

TEST_CASE("growth inequality at the closed-form constant") {
  // small ball (r = pi/8) around the pole, support at colatitude 0.15
  ModelSpace s = ModelSpace::sphere(2);
  std::vector<Point> pts(3, Point(3));
  for (int i = 0; i < 3; ++i) {
    const double phi = 2.0 * kPi * i / 3.0;
    pts[i] << std::sin(0.15) * std::cos(phi), std::sin(0.15) * std::sin(phi),
        std::cos(0.15);
  }
  Point pole(3);
  pole << 0.0, 0.0, 1.0;
  DiscreteMeasure mu = DiscreteMeasure::uniform(s, pts);
  BallContext ctx = validate_admissibility(s, mu, pole, kPi / 8, 1.5);
  const double c = growth_constant(ctx, s);
  OracleResult e = oracle_mean(s, mu, ctx, 1e-10, 400000);
  const double he = objective(s, mu, e.e_p, 1.5);
  RngStream rng(4242, 0);
  for (int it = 0; it < 200; ++it) {
    Point x = random_point_in_ball(s, ctx.center, ctx.inner_radius, rng);
    const double gap = objective(s, mu, x, 1.5) - he;
    const double rho = distance(s, x, e.e_p);
    CHECK(gap >= 0.5 * c * rho * rho - 1e-9);
  }
}

TEST_CASE("second derivative constant") {
  ModelSpace e = ModelSpace::euclidean(2);
  ModelSpace h = ModelSpace::hyperbolic(2);
  ModelSpace s = ModelSpace::sphere(2);

  BallContext ctx;
  ctx.radius = 1.0;
  ctx.p = 2.0;
  CHECK(second_derivative_constant(ctx, e) == doctest::Approx(8.0));
  ctx.p = 1.0;
  CHECK(second_derivative_constant(ctx, e) == doctest::Approx(1.0));
  CHECK(second_derivative_constant(ctx, h) ==
        doctest::Approx(2.0 / std::tanh(2.0)).epsilon(1e-15));

  ctx.radius = kPi / 8;
  ctx.p = 1.5;
  // p^2 (2r)^2 * (flat coth limit 1/(2r)) = p^2 (2r)
  CHECK(second_derivative_constant(ctx, s) ==
        doctest::Approx(2.25 * kPi / 4).epsilon(1e-14));

  // curvature can only increase the bound relative to flat
  ctx.radius = 1.0;
  ctx.p = 1.5;
  CHECK(second_derivative_constant(ctx, h) >
        second_derivative_constant(ctx, e));
}

TEST_CASE("step cap") {
  MeasureProblem mp = euclid4(2.0);
  BallContext ctx = ctx_of(mp);
  const double c = growth_constant(ctx, mp.space);
  const double expected =
      std::min(1.0 / c, ctx.rho_gap() / (2.0 * 2.0 * 2.0));
  CHECK(step_cap(ctx, c) == doctest::Approx(expected).epsilon(1e-15));
  CHECK_THROWS_AS(step_cap(ctx, 0.0), InputError);
}

TEST_CASE("algo constants bundle") {
  MeasureProblem mp = sphere3(1.5);
  BallContext ctx = ctx_of(mp);
  AlgoConstants c = algo_constants(mp.space, ctx);
  CHECK(c.c_growth == doctest::Approx(growth_constant(ctx, mp.space)));
  CHECK(c.c_second ==
        doctest::Approx(second_derivative_constant(ctx, mp.space)));
  CHECK(c.delta1 == doctest::Approx(step_cap(ctx, c.c_growth)));
  CHECK(!c.lambda_min_estimate.has_value());

  MeasureProblem mq = euclid4(3.0);
  BallContext cq = ctx_of(mq);
  AlgoConstants c3 = algo_constants(mq.space, cq, 2.5);
  CHECK(c3.c_growth == 2.5);
  CHECK(c3.lambda_min_estimate.has_value());
  CHECK(*c3.lambda_min_estimate == 2.5);
}

TEST_CASE("gradient-square growth near the minimizer for p >= 2") {
  for (MeasureProblem mp : {euclid4(3.0), sphere3(2.0)}) {
    SolvedConfig sc = solve_config(mp);
    std::vector<Tangent> basis = orthonormal_basis(mp.space, sc.oracle.e_p);
    Mat hess =
        objective_hessian(mp.space, mp.measure, sc.oracle.e_p, mp.p, basis);
    Eigen::SelfAdjointEigenSolver<Mat> es(hess);
    const double c_local = 0.5 * es.eigenvalues().minCoeff();
    REQUIRE(c_local > 0.0);
    const double he = objective(mp.space, mp.measure, sc.oracle.e_p, mp.p);
    RngStream rng(77, 0);
    for (int it = 0; it < 500; ++it) {
      Point x = random_point_in_ball(mp.space, sc.oracle.e_p, sc.ctx.eps, rng);
      Tangent g = objective_gradient(mp.space, mp.measure, x, mp.p);
      const double gn2 = mp.space.metric_dot(g.vec, g.vec);
      const double gap = objective(mp.space, mp.measure, x, mp.p) - he;
      CHECK(gn2 >= c_local * gap - 1e-12);
    }
  }
}

TEST_CASE("measure json parsing") {
  const std::string good = R"({
    "manifold": {"kind": "euclidean", "dim": 2},
    "center": [0.0, 0.0],
    "radius": 1.0,
    "p": 2.0,
    "points": [[0.4, 0.1], [-0.4, -0.1], [0.1, -0.3], [-0.1, 0.3]]
  })";
  MeasureProblem mp = parse_measure_json(good);
  CHECK(mp.space.kind == SpaceKind::Euclidean);
  CHECK(mp.measure.size() == 4);
  CHECK(mp.measure.weight(0) == doctest::Approx(0.25));  // defaulted uniform
  CHECK(mp.radius == 1.0);
  CHECK(mp.p == 2.0);

  CHECK_THROWS_AS(parse_measure_json("not json"), InputError);
  CHECK_THROWS_AS(parse_measure_json("[1,2,3]"), InputError);
  // unknown top-level key
  CHECK_THROWS_AS(parse_measure_json(R"({
    "manifold": {"kind": "euclidean", "dim": 2},
    "center": [0,0], "radius": 1.0, "p": 2.0,
    "points": [[0.4, 0.1], [-0.4, -0.1]], "extra": 1
  })"),
                  InputError);
  // unknown manifold kind
  CHECK_THROWS_AS(parse_measure_json(R"({
    "manifold": {"kind": "torus", "dim": 2},
    "center": [0,0], "radius": 1.0, "p": 2.0,
    "points": [[0.4, 0.1], [-0.4, -0.1]]
  })"),
                  InputError);
  // wrong center length
  CHECK_THROWS_AS(parse_measure_json(R"({
    "manifold": {"kind": "sphere", "dim": 2},
    "center": [0,0], "radius": 0.5, "p": 2.0,
    "points": [[1,0,0],[0,1,0]]
  })"),
                  InputError);
  // weights must match points
  CHECK_THROWS_AS(parse_measure_json(R"({
    "manifold": {"kind": "euclidean", "dim": 2},
    "center": [0,0], "radius": 1.0, "p": 2.0,
    "points": [[0.4, 0.1], [-0.4, -0.1]], "weights": [1.0]
  })"),
                  InputError);
  // missing key
  CHECK_THROWS_AS(parse_measure_json(R"({
    "manifold": {"kind": "euclidean", "dim": 2},
    "center": [0,0], "p": 2.0,
    "points": [[0.4, 0.1], [-0.4, -0.1]]
  })"),
                  InputError);
}

TEST_CASE("measure files round-trip through the loader") {
  MeasureProblem mp =
      load_measure_file(PMEAN_SOURCE_DIR "/data/sphere3_p15.json");
  CHECK(mp.space.kind == SpaceKind::Sphere);
  CHECK(mp.measure.size() == 3);
  CHECK(mp.p == 1.5);
  CHECK_NOTHROW(ctx_of(mp));
  CHECK_THROWS_AS(load_measure_file(PMEAN_SOURCE_DIR "/data/nope.json"),
                  InputError);
}
