#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmean/solver.hpp"

namespace pmean {

// Data of the limiting Gaussian diffusion at the minimizer: the objective
// Hessian drives the drift, the second moment of the one-sample gradient
// (gamma) drives the noise, delta is the schedule scale. All limit-process
// computation happens in the Hessian eigenbasis; the rotated gamma and its
// factor are precomputed here.
struct LimitSpec {
  double delta = 0.0;
  Mat gamma;
  Mat hessian;
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // columns; deterministic sign convention
  Mat sigma;         // sigma * sigma^T = gamma
  Mat gamma_eigen;   // E^T gamma E
  Mat sigma_eigen;   // factor of gamma_eigen
  bool admissible = false;  // delta * lambda_i > 1 for every i

  int dim() const { return static_cast<int>(eigenvalues.size()); }
};

LimitSpec make_limit_spec(double delta, const Mat& gamma, const Mat& hessian);

// Factor F with F F^T = M for symmetric PSD M: Cholesky, then Cholesky
// with 1e-12 jitter, then an eigenvalue-clamped square root.
Mat psd_factor(const Mat& m);

// (k / sqrt(n)) * log_{e_p}(X_k) in coordinates of the supplied basis, one
// row per requested index.
Mat rescale_states(const ModelSpace& s, const std::vector<Point>& states,
                   const std::vector<std::int64_t>& ks, std::int64_t n,
                   const Point& e_p, const std::vector<Tangent>& basis);

// Same, reading X_{floor(n t)} out of a full trace for each time t.
Mat rescale_chain(const ModelSpace& s, const ChainTrace& trace,
                  const Point& e_p, std::int64_t n,
                  const std::vector<double>& times,
                  const std::vector<Tangent>& basis);

// Exact second moment of the one-sample gradient at e_p in basis
// coordinates: sum_i w_i g_i g_i^T. Requires p >= 2 or a minimizer off the
// support (otherwise the gradient has no second-order statistics there).
Mat gradient_covariance(const ModelSpace& s, const DiscreteMeasure& mu,
                        const Point& e_p, double p,
                        const std::vector<Tangent>& basis);

// Closed-form objective Hessian at e_p in basis coordinates:
//   sum_i w_i p rho_i^{p-2} [ (p-1) n_i n_i^T + ct(rho_i) (I - n_i n_i^T) ]
// where ct is 1, rho*cot(rho) or rho*coth(rho) depending on curvature.
Mat objective_hessian(const ModelSpace& s, const DiscreteMeasure& mu,
                      const Point& e_p, double p,
                      const std::vector<Tangent>& basis);

// Covariance of the limit process between times t1 and t2 (eigenbasis):
//   entry (i,j) = delta^2 G_ij / c_ij * t1^{1-d_i} t2^{1-d_j} min(t1,t2)^{c_ij}
// with d_i = delta*lambda_i, c_ij = d_i + d_j - 1 and G the rotated gamma.
Mat limit_covariance(const LimitSpec& spec, double t1, double t2);

// Exact-in-law sampler of the limit process on a fixed positive grid. The
// martingale part has independent Gaussian increments across grid
// intervals with closed-form covariance; the factors are precomputed once.
class ExactLimitSampler {
 public:
  ExactLimitSampler(const LimitSpec& spec, std::vector<double> grid);

  // One path: grid.size() x d values in the eigenbasis.
  Mat sample(RngStream& rng) const;

  const std::vector<double>& grid() const { return grid_; }

 private:
  std::vector<double> grid_;
  std::vector<Mat> increment_factor_;  // one per grid interval
  Mat scale_;                          // scale_(j, i) = t_j^{1 - delta*lambda_i}
  int dim_ = 0;
};

Mat sample_limit_exact(const LimitSpec& spec, const std::vector<double>& grid,
                       RngStream& rng);

// Euler-Maruyama integration of the defining SDE
//   dy = t^{-1} (y - delta * hessian y) dt + delta * sigma dB
// in eigen-coordinates, from state y_eps at time eps, recorded on the grid.
Mat integrate_sde(const LimitSpec& spec, double eps,
                  const std::vector<double>& grid, const Vec& y_eps,
                  std::int64_t steps_per_unit, RngStream& rng);

// Mean and standard error of X(a,i)*X(b,j) across a collection of paths
// (each path a grid.size() x d matrix).
struct MomentStats {
  double mean = 0.0;
  double se = 0.0;
};
MomentStats product_moment(const std::vector<Mat>& paths, int a, int i, int b,
                           int j);
MomentStats coordinate_moment(const std::vector<Mat>& paths, int a, int i);

struct CovarianceEntry {
  double t1 = 0.0, t2 = 0.0;
  int i = 0, j = 0;
  double empirical = 0.0, theoretical = 0.0, stderr_est = 0.0, zscore = 0.0;
};

struct MeanEntry {
  double t = 0.0;
  int i = 0;
  double empirical = 0.0, stderr_est = 0.0, zscore = 0.0;
};

struct FluctOptions {
  double delta = 0.0;
  std::int64_t n = 0;
  int chains = 0;
  std::vector<double> times;
  std::uint64_t seed = 0;
  int threads = 1;
  double z_threshold = 4.0;
  double oracle_tol = 1e-10;
};

struct FluctReport {
  OracleResult oracle;
  LimitSpec spec;
  double c_growth = 0.0;
  double delta1 = 0.0;
  std::string condition;  // which delta-admissibility condition was checked
  std::vector<CovarianceEntry> covariances;
  std::vector<MeanEntry> means;
  double max_abs_z = 0.0;
  double max_abs_mean_z = 0.0;
  bool pass = false;
  bool insufficient_sample = false;
};

// Monte Carlo comparison of the rescaled chain against the limit process:
// runs opt.chains independent chains, rescales them at the requested
// times, and z-scores every empirical second moment (and mean) against the
// closed-form limit. Chains fan out across opt.threads workers; the
// reduction order is fixed, so the report does not depend on scheduling.
FluctReport fluctuation_experiment(const ModelSpace& s,
                                   const DiscreteMeasure& mu,
                                   const BallContext& ctx,
                                   const FluctOptions& opt);

}  // namespace pmean
