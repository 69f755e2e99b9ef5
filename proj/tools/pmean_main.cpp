#include <CLI11.hpp>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "pmean/config.hpp"
#include "pmean/fluctuation.hpp"
#include "pmean/measure_io.hpp"
#include "pmean/report_io.hpp"
#include "pmean/rng.hpp"
#include "pmean/solver.hpp"

namespace {

using namespace pmean;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Measure paths in the config resolve relative to the config file.
std::string resolve_measure_path(const std::string& config_path,
                                 const std::string& measure_file) {
  std::filesystem::path mf(measure_file);
  if (mf.is_absolute()) return mf.string();
  return (std::filesystem::path(config_path).parent_path() / mf).string();
}

std::string config_digest(const std::string& measure_bytes,
                          const ExperimentConfig& cfg, RunMode mode) {
  DigestBuilder d;
  d.add_string(measure_bytes);
  d.add_string(mode_name(mode));
  d.add_u64(cfg.delta.has_value() ? 1 : 0);
  d.add_double(cfg.delta.value_or(0.0));
  d.add_u64(static_cast<std::uint64_t>(cfg.n));
  d.add_u64(static_cast<std::uint64_t>(cfg.chains));
  d.add_u64(cfg.times.size());
  for (double t : cfg.times) d.add_double(t);
  d.add_u64(cfg.seed);
  d.add_u64(cfg.tolerances.size());
  for (const auto& [k, v] : cfg.tolerances) {
    d.add_string(k);
    d.add_double(v);
  }
  return d.hex();
}

// Growth constant resolution: closed form for p in (1,2], otherwise the
// minimal-eigenvalue proxy computed at the oracle minimizer.
AlgoConstants resolve_constants(const ModelSpace& s, const DiscreteMeasure& mu,
                                const BallContext& ctx,
                                const OracleResult& oracle) {
  if (ctx.p > 1.0 && ctx.p <= 2.0) return algo_constants(s, ctx);
  std::vector<Tangent> basis = orthonormal_basis(s, oracle.e_p);
  const Mat hess = objective_hessian(s, mu, oracle.e_p, ctx.p, basis);
  Eigen::SelfAdjointEigenSolver<Mat> es(hess);
  return algo_constants(s, ctx, es.eigenvalues().minCoeff());
}

void print_context(const MeasureProblem& prob, const BallContext& ctx) {
  std::cout << "space: " << prob.space.name() << " d=" << prob.space.dim
            << "\n"
            << "support points: " << prob.measure.size() << "\n"
            << "p: " << format_g17(ctx.p) << "\n"
            << "radius: " << format_g17(ctx.radius) << "\n"
            << "admissible radius: "
            << format_g17(admissible_radius(prob.space, ctx.p)) << "\n"
            << "max support distance: " << format_g17(ctx.max_support_dist)
            << "\n"
            << "eps: " << format_g17(ctx.eps) << "\n"
            << "inner radius: " << format_g17(ctx.inner_radius) << "\n";
}

int run_validate(const MeasureProblem& prob, const BallContext& ctx) {
  print_context(prob, ctx);
  std::cout << "second-derivative constant: "
            << format_g17(second_derivative_constant(ctx, prob.space)) << "\n";
  try {
    const double cg = growth_constant(ctx, prob.space);
    std::cout << "growth constant: " << format_g17(cg) << "\n"
              << "step cap: " << format_g17(step_cap(ctx, cg)) << "\n";
  } catch (const DeferredConstantError&) {
    std::cout << "growth constant: deferred (needs the minimizer Hessian; "
                 "run the oracle mode)\n"
              << "step cap: deferred\n";
  }
  std::cout << "validation: ok\n";
  return 0;
}

int run_oracle(const MeasureProblem& prob, const BallContext& ctx,
               const ExperimentConfig& cfg) {
  const double tol = cfg.tolerance("oracle_tol", 1e-8);
  OracleResult res =
      oracle_mean(prob.space, prob.measure, ctx, tol, 400000);
  std::cout << "minimizer:";
  for (Eigen::Index i = 0; i < res.e_p.size(); ++i) {
    std::cout << " " << format_g17(res.e_p[i]);
  }
  std::cout << "\nobjective: " << format_g17(res.objective) << "\n"
            << "gradient norm: " << format_g17(res.grad_norm) << "\n"
            << "iterations: " << res.iterations << "\n";
  AlgoConstants c = resolve_constants(prob.space, prob.measure, ctx, res);
  std::cout << "growth constant: " << format_g17(c.c_growth)
            << (c.lambda_min_estimate ? " (minimal-eigenvalue proxy)" : "")
            << "\n"
            << "second-derivative constant: " << format_g17(c.c_second) << "\n"
            << "step cap: " << format_g17(c.delta1) << "\n";
  return 0;
}

int run_solve(const MeasureProblem& prob, const BallContext& ctx,
              const ExperimentConfig& cfg) {
  const double tol = cfg.tolerance("oracle_tol", 1e-8);
  OracleResult oracle =
      oracle_mean(prob.space, prob.measure, ctx, tol, 400000);
  AlgoConstants c = resolve_constants(prob.space, prob.measure, ctx, oracle);
  const double delta = cfg.delta.value_or(2.0 / c.c_growth);
  StepSchedule schedule = StepSchedule::harmonic(delta, c.delta1);
  RngStream rng(cfg.seed, kChainStreamBase);
  Point x0 = default_start(prob.space, prob.measure, ctx.p);
  ChainTrace trace = run_chain(prob.space, prob.measure, ctx, schedule, x0,
                               cfg.n, rng, &oracle, c.c_second);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path =
      (std::filesystem::path(cfg.out_dir) / "trace.csv").string();
  write_text_file(path,
                  trace_csv(prob.space, prob.measure, trace, oracle.e_p,
                            ctx.p));
  const double final_rho =
      distance(prob.space, trace.states.back(), oracle.e_p);
  std::cout << "steps: " << cfg.n << "\n"
            << "delta: " << format_g17(delta) << "\n"
            << "final distance to minimizer: " << format_g17(final_rho) << "\n"
            << "trace: " << path << "\n";
  return 0;
}

int run_fluct(const MeasureProblem& prob, const BallContext& ctx,
              const ExperimentConfig& cfg, int threads,
              const std::string& measure_bytes) {
  FluctOptions opt;
  opt.delta = *cfg.delta;
  opt.n = cfg.n;
  opt.chains = cfg.chains;
  opt.times = cfg.times;
  opt.seed = cfg.seed;
  opt.threads = threads;
  opt.z_threshold = cfg.tolerance("z_threshold", 4.0);
  opt.oracle_tol = cfg.tolerance("oracle_tol", 1e-10);
  FluctReport rep = fluctuation_experiment(prob.space, prob.measure, ctx, opt);

  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);
  const std::string digest = config_digest(measure_bytes, cfg, RunMode::Fluct);
  write_text_file((out / "report.csv").string(), covariance_csv(rep));
  write_text_file((out / "report_means.csv").string(), means_csv(rep));
  write_text_file((out / "summary.json").string(), summary_json(rep, digest));
  std::cout << "chains: " << cfg.chains << "\n"
            << "max |z| (second moments): " << format_g17(rep.max_abs_z)
            << "\n"
            << "max |z| (means): " << format_g17(rep.max_abs_mean_z) << "\n"
            << "pass: " << (rep.pass ? "true" : "false") << "\n";
  return rep.pass ? 0 : 2;
}

int run_limit_sim(const MeasureProblem& prob, const BallContext& ctx,
                  const ExperimentConfig& cfg) {
  const double tol = cfg.tolerance("oracle_tol", 1e-10);
  OracleResult oracle =
      oracle_mean(prob.space, prob.measure, ctx, tol, 400000);
  std::vector<Tangent> basis = orthonormal_basis(prob.space, oracle.e_p);
  const Mat gamma = gradient_covariance(prob.space, prob.measure, oracle.e_p,
                                        ctx.p, basis);
  const Mat hess = objective_hessian(prob.space, prob.measure, oracle.e_p,
                                     ctx.p, basis);
  LimitSpec spec = make_limit_spec(*cfg.delta, gamma, hess);
  if (!spec.admissible) {
    throw ValidationError(
        "limit process inadmissible: delta * lambda_min = " +
        std::to_string(spec.delta * spec.eigenvalues.minCoeff()) +
        " must exceed 1");
  }

  const int paths = cfg.chains;
  ExactLimitSampler sampler(spec, cfg.times);
  std::vector<Mat> exact;
  exact.reserve(static_cast<std::size_t>(paths));
  for (int i = 0; i < paths; ++i) {
    RngStream rng(cfg.seed, kExactPathStreamBase + static_cast<std::uint64_t>(i));
    exact.push_back(sampler.sample(rng));
  }

  const auto spu = static_cast<std::int64_t>(
      cfg.tolerance("sde_steps_per_unit", 4000.0));
  const double eps_frac = cfg.tolerance("sde_eps_fraction", 0.1);
  const double eps = cfg.times.front() * eps_frac;
  ExactLimitSampler start(spec, {eps});
  std::vector<Mat> sde;
  sde.reserve(static_cast<std::size_t>(paths));
  for (int i = 0; i < paths; ++i) {
    RngStream rng(cfg.seed, kSdePathStreamBase + static_cast<std::uint64_t>(i));
    Mat y0 = start.sample(rng);
    sde.push_back(
        integrate_sde(spec, eps, cfg.times, y0.row(0).transpose(), spu, rng));
  }

  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);
  write_text_file((out / "exact_paths.csv").string(),
                  paths_csv(exact, cfg.times));
  write_text_file((out / "sde_paths.csv").string(), paths_csv(sde, cfg.times));
  std::cout << "paths: " << paths << "\n"
            << "outputs: " << (out / "exact_paths.csv").string() << ", "
            << (out / "sde_paths.csv").string() << "\n";
  return 0;
}

int dispatch(const std::string& config_path, ExperimentConfig cfg,
             RunMode mode, int threads) {
  check_mode_requirements(cfg, mode);
  const std::string measure_path =
      resolve_measure_path(config_path, cfg.measure_file);
  const std::string measure_bytes = read_file(measure_path);
  MeasureProblem prob = parse_measure_json(measure_bytes);
  BallContext ctx = validate_admissibility(prob.space, prob.measure,
                                           prob.center, prob.radius, prob.p);
  switch (mode) {
    case RunMode::Validate:
      return run_validate(prob, ctx);
    case RunMode::Oracle:
      return run_oracle(prob, ctx, cfg);
    case RunMode::Solve:
      return run_solve(prob, ctx, cfg);
    case RunMode::Fluct:
      return run_fluct(prob, ctx, cfg, threads, measure_bytes);
    case RunMode::LimitSim:
      return run_limit_sim(prob, ctx, cfg);
  }
  throw InternalInvariantError("unhandled mode");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-means of discrete measures on constant-curvature spaces"};
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override the RNG root seed");
  std::string out_dir;
  auto* out_opt = app.add_option("--out", out_dir, "override the output dir");
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all cores)");
  std::string mode_flag;
  auto* mode_opt = app.add_option("--mode", mode_flag,
                                  "override the mode from the config");
  app.add_subcommand("validate", "check admissibility and print constants");
  app.add_subcommand("oracle", "compute the deterministic minimizer");
  app.add_subcommand("solve", "run one stochastic chain, write trace.csv");
  app.add_subcommand("fluct",
                     "Monte Carlo comparison against the limit process");
  app.add_subcommand("limit-sim", "sample the limit process to CSV");
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = load_config_file(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (out_opt->count() > 0) cfg.out_dir = out_dir;

    RunMode mode;
    const auto subs = app.get_subcommands();
    if (!subs.empty()) {
      mode = parse_mode(subs[0]->get_name());
    } else if (mode_opt->count() > 0) {
      mode = parse_mode(mode_flag);
    } else if (cfg.mode) {
      mode = *cfg.mode;
    } else {
      throw InputError(
          "no mode given: use a subcommand, --mode, or \"mode\" in the "
          "config");
    }

    if (threads <= 0) {
      const unsigned hc = std::thread::hardware_concurrency();
      threads = hc == 0 ? 1 : static_cast<int>(hc);
    }
    return dispatch(config_path, std::move(cfg), mode, threads);
  } catch (const InternalInvariantError& e) {
    std::cerr << "internal invariant violated: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
}
