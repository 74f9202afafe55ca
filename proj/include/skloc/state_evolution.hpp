#pragma once

#include <vector>

#include "json.hpp"
#include "skloc/types.hpp"

namespace skloc::se {

// Gaussian quadrature rule against the standard normal weight: for smooth f,
// E[f(W)] with W ~ N(0,1) is approximated by sum_i weights[i] * f(nodes[i])
// with spectral accuracy.
struct Quadrature {
  Vector nodes;
  Vector weights;
  int order = 0;
};

// Gauss-Hermite rule of the given order, rescaled from the e^{-x^2} weight
// to the standard normal (nodes scaled by sqrt(2); weights come out of the
// Jacobi-matrix eigenvectors already normalized to sum to 1).
Quadrature gauss_hermite(int order);

// Shared default rule (order 61) used everywhere a caller does not need a
// custom order.
const Quadrature& default_quadrature();

// Scalar posterior mean-squared error of a +/-1 spin observed through a
// Gaussian channel of signal-to-noise gamma:
//   mmse(gamma) = 1 - E[tanh(gamma + sqrt(gamma) W)^2].
// Decreasing and convex in gamma; 1 at gamma = 0, -> 0 as gamma -> infinity.
double mmse(double gamma, const Quadrature& quad);

// Scalar recursion gamma_{k+1} = beta^2 (1 - mmse(gamma_k + t)) started at
// gamma_0 = 0. Returns gamma_0..gamma_{k_max}; every value lies in
// [0, beta^2] and the sequence is nondecreasing.
std::vector<double> gamma_iterates(double beta, double t, int k_max,
                                   const Quadrature& quad);

// Unique nonnegative solution of gamma = beta^2 (1 - mmse(gamma + t)) for
// t > 0 and 0 <= beta < 1, to absolute accuracy tol. Damped Picard iteration
// (the map has slope in [0, beta^2], so the damped map contracts) with a
// bisection fallback; throws NonConvergenceError if both hit their caps.
double gamma_star(double beta, double t, double tol, const Quadrature& quad);

// Predicted normalized overlap of the mean estimate after k iterations:
// gamma_{k+1} / beta^2 (the recursion runs one step ahead of the estimate
// it describes). Zero when beta = 0.
double q_k(double beta, double t, int k, const Quadrature& quad);

// Predicted per-coordinate mean-squared error of the mean estimate after k
// iterations in the planted channel: 1 - gamma_{k+1}/beta^2.
double amp_mse_prediction(double beta, double t, int k, const Quadrature& quad);

struct ScheduleEntry {
  double t = 0.0;
  double gamma_star = 0.0;
  double q_star = 0.0;
};

// Precomputed drive schedule: the fixed point and its normalized form at
// every time t = l * delta, l = 0..big_l. The l = 0 entry is the t -> 0+
// limit (both quantities vanish there).
struct ScheduleTable {
  double beta = 0.0;
  double delta = 0.0;
  int big_l = 0;
  int quadrature_order = 0;
  std::vector<ScheduleEntry> entries;  // size big_l + 1

  nlohmann::json to_json() const;
  static ScheduleTable from_json(const nlohmann::json& j);
};

// Builds the schedule with default tolerance 1e-10 per entry.
ScheduleTable build_schedule(double beta, double delta, int big_l,
                             const Quadrature& quad);

inline constexpr double kGammaStarTol = 1e-10;

}  // namespace skloc::se
