#include "pmean/measure_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace pmean {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const char* where) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw InputError(std::string(where) + ": unknown key \"" + item.key() +
                       "\"");
    }
  }
}

const json& require(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw InputError(std::string(where) + ": missing key \"" + key + "\"");
  }
  return *it;
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + " must be a number");
  return v.get<double>();
}

Vec as_vector(const json& v, Eigen::Index len, const std::string& what) {
  if (!v.is_array()) throw InputError(what + " must be an array of numbers");
  if (static_cast<Eigen::Index>(v.size()) != len) {
    throw InputError(what + " must have length " + std::to_string(len) +
                     ", got " + std::to_string(v.size()));
  }
  Vec out(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    out[i] = as_number(v[static_cast<size_t>(i)],
                       what + "[" + std::to_string(i) + "]");
  }
  return out;
}

}  // namespace

MeasureProblem parse_measure_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("measure file is not valid JSON: ") +
                     e.what());
  }
  if (!root.is_object()) throw InputError("measure file: top level must be an object");
  reject_unknown_keys(
      root, {"manifold", "center", "radius", "p", "points", "weights"},
      "measure file");

  const json& manifold = require(root, "manifold", "measure file");
  if (!manifold.is_object()) throw InputError("\"manifold\" must be an object");
  reject_unknown_keys(manifold, {"kind", "dim"}, "manifold");
  const json& kind = require(manifold, "kind", "manifold");
  if (!kind.is_string()) throw InputError("manifold kind must be a string");
  const json& dim = require(manifold, "dim", "manifold");
  if (!dim.is_number_integer() || dim.get<int>() < 1) {
    throw InputError("manifold dim must be a positive integer");
  }
  const int d = dim.get<int>();
  const std::string kind_s = kind.get<std::string>();
  ModelSpace space;
  if (kind_s == "euclidean") {
    space = ModelSpace::euclidean(d);
  } else if (kind_s == "sphere") {
    space = ModelSpace::sphere(d);
  } else if (kind_s == "hyperbolic") {
    space = ModelSpace::hyperbolic(d);
  } else {
    throw InputError("manifold kind must be \"euclidean\", \"sphere\" or "
                     "\"hyperbolic\", got \"" + kind_s + "\"");
  }
  const Eigen::Index D = space.ambient_dim();

  Point center = as_vector(require(root, "center", "measure file"), D, "center");
  const double radius = as_number(require(root, "radius", "measure file"), "radius");
  const double p = as_number(require(root, "p", "measure file"), "p");

  const json& pts = require(root, "points", "measure file");
  if (!pts.is_array() || pts.empty()) {
    throw InputError("\"points\" must be a non-empty array");
  }
  std::vector<Point> points;
  points.reserve(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    points.push_back(as_vector(pts[i], D, "points[" + std::to_string(i) + "]"));
  }

  std::vector<double> weights;
  if (auto it = root.find("weights"); it != root.end()) {
    if (!it->is_array() || it->size() != pts.size()) {
      throw InputError("\"weights\" must be an array with one entry per point");
    }
    weights.reserve(it->size());
    for (size_t i = 0; i < it->size(); ++i) {
      weights.push_back(
          as_number((*it)[i], "weights[" + std::to_string(i) + "]"));
    }
  } else {
    weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
  }

  DiscreteMeasure measure(space, std::move(points), std::move(weights));
  return MeasureProblem{space, std::move(measure), std::move(center), radius, p};
}

MeasureProblem load_measure_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open measure file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_measure_json(buf.str());
}

}  // namespace pmean
