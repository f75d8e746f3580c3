#pragma once

#include <string>
#include <vector>

namespace stepdelay::verify {

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs the full acceptance matrix. quick shrinks grids/horizons for a fast
// smoke pass; tol_scale multiplies the acceptance tolerances.
std::vector<CriterionResult> run_all(bool quick = false, double tol_scale = 1.0,
                                     int threads = 1);

std::string report_json(const std::vector<CriterionResult>& results);

}  // namespace stepdelay::verify
