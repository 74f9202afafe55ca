#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skloc {

// Input or configuration rejected before any work started. `field` names the
// offending parameter so front ends can report it (exit-code-2 contract).
struct ValidationError : std::runtime_error {
  std::string field;
  ValidationError(std::string field_, const std::string& what_)
      : std::runtime_error(field_ + ": " + what_), field(std::move(field_)) {}
};

// An iterative solver hit its iteration cap. Carries the best estimate found
// so callers can still inspect it.
struct NonConvergenceError : std::runtime_error {
  double best_estimate;
  NonConvergenceError(double best, const std::string& what_)
      : std::runtime_error(what_), best_estimate(best) {}
};

// Descent diverged (objective increased for several consecutive steps).
// Carries the objective trajectory up to the failure; `step` is filled with
// the localization step index when the failure happens inside the drive.
struct DivergenceError : std::runtime_error {
  std::vector<double> trajectory;
  int step = -1;
  DivergenceError(std::vector<double> trajectory_, const std::string& what_)
      : std::runtime_error(what_), trajectory(std::move(trajectory_)) {}
};

// A persisted artifact declares a schema version this build does not read.
struct SchemaVersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace skloc
