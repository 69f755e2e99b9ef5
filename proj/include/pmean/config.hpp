#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmean/errors.hpp"

namespace pmean {

enum class RunMode { Validate, Oracle, Solve, Fluct, LimitSim };

RunMode parse_mode(const std::string& name);
const char* mode_name(RunMode m);

// Experiment description: which measure file, what to do with it, and the
// run parameters. Parsed strictly from JSON; "mode" may be omitted in the
// file when it is supplied on the command line instead.
struct ExperimentConfig {
  std::string measure_file;
  std::optional<RunMode> mode;
  std::optional<double> delta;
  std::int64_t n = 0;
  int chains = 0;
  std::vector<double> times;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::map<std::string, double> tolerances;

  double tolerance(const std::string& key, double fallback) const;
};

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Mode-specific required fields (fluct needs delta/chains/times, ...).
void check_mode_requirements(const ExperimentConfig& c, RunMode mode);

}  // namespace pmean
