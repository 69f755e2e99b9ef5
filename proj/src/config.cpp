#include "pmean/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace pmean {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownTolerances = {
    "oracle_tol", "z_threshold", "sde_steps_per_unit", "sde_eps_fraction"};

}  // namespace

RunMode parse_mode(const std::string& name) {
  if (name == "validate") return RunMode::Validate;
  if (name == "oracle") return RunMode::Oracle;
  if (name == "solve") return RunMode::Solve;
  if (name == "fluct") return RunMode::Fluct;
  if (name == "limit-sim" || name == "limit_sim") return RunMode::LimitSim;
  throw InputError("unknown mode \"" + name +
                   "\" (expected validate, oracle, solve, fluct or "
                   "limit-sim)");
}

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::Validate: return "validate";
    case RunMode::Oracle: return "oracle";
    case RunMode::Solve: return "solve";
    case RunMode::Fluct: return "fluct";
    case RunMode::LimitSim: return "limit-sim";
  }
  return "?";
}

double ExperimentConfig::tolerance(const std::string& key,
                                   double fallback) const {
  auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

ExperimentConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw InputError("config: top level must be an object");
  static const std::set<std::string> allowed = {
      "measure_file", "mode",  "delta",   "n",          "chains",
      "times",        "seed",  "out_dir", "tolerances"};
  for (const auto& item : root.items()) {
    if (!allowed.count(item.key())) {
      throw InputError("config: unknown key \"" + item.key() + "\"");
    }
  }

  ExperimentConfig c;
  {
    auto it = root.find("measure_file");
    if (it == root.end() || !it->is_string()) {
      throw InputError("config: \"measure_file\" (string) is required");
    }
    c.measure_file = it->get<std::string>();
  }
  if (auto it = root.find("mode"); it != root.end()) {
    if (!it->is_string()) throw InputError("config: \"mode\" must be a string");
    c.mode = parse_mode(it->get<std::string>());
  }
  if (auto it = root.find("delta"); it != root.end()) {
    if (!it->is_number()) throw InputError("config: \"delta\" must be a number");
    c.delta = it->get<double>();
    if (!(*c.delta > 0.0)) throw InputError("config: \"delta\" must be > 0");
  }
  if (auto it = root.find("n"); it != root.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      throw InputError("config: \"n\" must be a nonnegative integer");
    }
    c.n = it->get<std::int64_t>();
  }
  if (auto it = root.find("chains"); it != root.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      throw InputError("config: \"chains\" must be a nonnegative integer");
    }
    c.chains = static_cast<int>(it->get<std::int64_t>());
  }
  if (auto it = root.find("times"); it != root.end()) {
    if (!it->is_array()) throw InputError("config: \"times\" must be an array");
    double prev = 0.0;
    for (const auto& v : *it) {
      if (!v.is_number()) throw InputError("config: times must be numbers");
      const double t = v.get<double>();
      if (!(t > prev)) {
        throw InputError(
            "config: times must be positive and strictly increasing");
      }
      c.times.push_back(t);
      prev = t;
    }
  }
  if (auto it = root.find("seed"); it != root.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      if (!it->is_number_unsigned()) {
        throw InputError("config: \"seed\" must be a nonnegative integer");
      }
    }
    c.seed = it->get<std::uint64_t>();
  }
  if (auto it = root.find("out_dir"); it != root.end()) {
    if (!it->is_string()) throw InputError("config: \"out_dir\" must be a string");
    c.out_dir = it->get<std::string>();
  }
  if (auto it = root.find("tolerances"); it != root.end()) {
    if (!it->is_object()) {
      throw InputError("config: \"tolerances\" must be an object");
    }
    for (const auto& item : it->items()) {
      if (!kKnownTolerances.count(item.key())) {
        throw InputError("config: unknown tolerance \"" + item.key() + "\"");
      }
      if (!item.value().is_number()) {
        throw InputError("config: tolerance \"" + item.key() +
                         "\" must be a number");
      }
      c.tolerances[item.key()] = item.value().get<double>();
    }
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

void check_mode_requirements(const ExperimentConfig& c, RunMode mode) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) {
      throw InputError(std::string("mode ") + mode_name(mode) + " requires " +
                       what);
    }
  };
  switch (mode) {
    case RunMode::Validate:
    case RunMode::Oracle:
      break;
    case RunMode::Solve:
      need(c.n >= 1, "n >= 1");
      break;
    case RunMode::Fluct:
      need(c.delta.has_value(), "delta");
      need(c.n >= 1, "n >= 1");
      need(c.chains >= 1, "chains >= 1");
      need(!c.times.empty(), "a non-empty times grid");
      break;
    case RunMode::LimitSim:
      need(c.delta.has_value(), "delta");
      need(c.chains >= 1, "chains >= 1 (number of paths)");
      need(!c.times.empty(), "a non-empty times grid");
      break;
  }
}

}  // namespace pmean
