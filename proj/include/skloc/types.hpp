#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace skloc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Distance kept from the cube boundary wherever magnetizations are clamped.
// Entropy and atanh blow up at |m| = 1; staying 1e-12 inside keeps both
// finite while perturbing tanh outputs by at most one part in 1e12.
inline constexpr double kInteriorClamp = 1e-12;

// A point of the open cube (-1, 1)^n: a per-coordinate mean of a +/-1 spin.
// Constructed through `clamped` so downstream entropy/atanh evaluations are
// always finite.
struct MagnetizationVector {
  Vector values;

  MagnetizationVector() = default;
  explicit MagnetizationVector(Vector v) : values(std::move(v)) {}

  static MagnetizationVector clamped(Vector v) {
    const double lim = 1.0 - kInteriorClamp;
    return MagnetizationVector(v.cwiseMin(lim).cwiseMax(-lim));
  }

  Eigen::Index n() const { return values.size(); }

  bool interior() const {
    return values.size() > 0
               ? values.cwiseAbs().maxCoeff() <= 1.0 - kInteriorClamp
               : true;
  }
};

}  // namespace skloc
