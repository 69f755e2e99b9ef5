#pragma once

#include <string>

#include "pmean/measure.hpp"

namespace pmean {

// A measure file bundles the measure with the ball parameters it is meant
// to be solved in. Parsing is strict (unknown keys rejected) and checks the
// embedding constraints, but admissibility validation is a separate step.
struct MeasureProblem {
  ModelSpace space;
  DiscreteMeasure measure;
  Point center;
  double radius;
  double p;
};

MeasureProblem parse_measure_json(const std::string& text);
MeasureProblem load_measure_file(const std::string& path);

}  // namespace pmean
