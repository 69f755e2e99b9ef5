#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pmean/measure.hpp"

namespace pmean {

// Step sizes t_k, k >= 1, capped so iterates cannot leave the retention
// set. The harmonic schedule emits t_k = min(delta/k, cap). Custom
// sequences are arbitrary positive generators; every emitted value is
// checked against the cap, while the divergent-sum / square-summable
// conditions are the caller's attestation (not machine checkable).
class StepSchedule {
 public:
  static StepSchedule harmonic(double delta, double cap);
  static StepSchedule custom(std::function<double(std::int64_t)> step,
                             double cap);

  double operator()(std::int64_t k) const;

  double cap() const { return cap_; }
  double delta() const { return delta_; }  // 0 for custom schedules

 private:
  StepSchedule() = default;
  double delta_ = 0.0;
  double cap_ = 0.0;
  std::function<double(std::int64_t)> custom_;
};

// Per-step diagnostics, only produced when a reference minimizer is
// supplied to run_chain. descent_slack is the amount by which the one-step
// descent inequality
//   rho^2(X_{k+1}, e) <= rho^2(X_k, e) - 2 t (F(X_k,P) - F(e,P)) + C t^2
// is violated (so it should never exceed ~1e-13); it is only defined for
// p < 2 and is NaN otherwise.
struct StepDiagnostics {
  double rho_sq_to_oracle = 0.0;
  double descent_slack = 0.0;
};

struct ChainTrace {
  std::vector<Point> states;        // X_0 .. X_n
  std::vector<double> steps_used;   // t_1 .. t_n
  std::vector<int> sampled;         // support indices of P_1 .. P_n
  std::vector<StepDiagnostics> diagnostics;  // empty unless oracle given
};

struct OracleResult {
  Point e_p;
  double grad_norm = 0.0;
  std::int64_t iterations = 0;
  double objective = 0.0;
};

// Gradient of x -> rho^p(x, y) at x: -p rho^{p-1}(x,y) times the unit
// vector from x toward y, and the zero tangent when the points coincide
// (within 1e-12).
Tangent sample_gradient(const ModelSpace& s, const Point& x, const Point& y,
                        double p);

// H_p(x) = sum_i w_i rho^p(x, point_i), pairwise-summed.
double objective(const ModelSpace& s, const DiscreteMeasure& mu,
                 const Point& x, double p);

// Weighted average of the per-sample gradients; at p = 1 this is the
// subgradient selection that drops coincident support points.
Tangent objective_gradient(const ModelSpace& s, const DiscreteMeasure& mu,
                           const Point& x, double p);

// One stochastic step: exp_x(-t * sample_gradient(x, q, p)). When a ball
// context is supplied the result is asserted to stay in the retention set.
Point sgd_step(const ModelSpace& s, const Point& x, const Point& q, double t,
               double p, const BallContext* ctx = nullptr);

// Support point with minimal objective; the default chain start.
Point default_start(const ModelSpace& s, const DiscreteMeasure& mu, double p);

// Runs n stochastic steps from x0, recording the full trace. With a
// reference minimizer e (and the second-derivative constant c_second) the
// per-step diagnostics are filled in. Containment in the retention set is
// asserted at every step.
ChainTrace run_chain(const ModelSpace& s, const DiscreteMeasure& mu,
                     const BallContext& ctx, const StepSchedule& schedule,
                     const Point& x0, std::int64_t n, RngStream& rng,
                     const OracleResult* oracle = nullptr,
                     double c_second = 0.0);

// Memory-light runner: returns X_k for the requested indices only (ks must
// be positive, strictly increasing); the chain is advanced to ks.back().
std::vector<Point> run_chain_at(const ModelSpace& s, const DiscreteMeasure& mu,
                                const BallContext& ctx,
                                const StepSchedule& schedule, const Point& x0,
                                const std::vector<std::int64_t>& ks,
                                RngStream& rng);

// Deterministic minimizer: backtracking Riemannian gradient descent from
// default_start, staying inside the retention set. Succeeds when the
// gradient norm reaches tol; at p = 1 a support point is accepted as the
// minimizer when the averaged gradient of the remaining points has norm at
// most that point's weight.
OracleResult oracle_mean(const ModelSpace& s, const DiscreteMeasure& mu,
                         const BallContext& ctx, double tol = 1e-8,
                         std::int64_t max_iter = 200000);

}  // namespace pmean
