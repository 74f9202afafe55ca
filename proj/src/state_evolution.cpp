#include "skloc/state_evolution.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "skloc/errors.hpp"

namespace skloc::se {

namespace {

constexpr int kPicardCap = 100000;
constexpr int kBisectionCap = 200;

double recursion_map(double beta, double t, double gamma, const Quadrature& quad) {
  return beta * beta * (1.0 - mmse(gamma + t, quad));
}

}  // namespace

Quadrature gauss_hermite(int order) {
  if (order < 1)
    throw ValidationError("order", "gauss_hermite: order must be >= 1");

  // Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
  // matrix of the Hermite recurrence (zero diagonal, off-diagonal
  // sqrt(k/2)); the weight attached to a node is the squared first component
  // of its normalized eigenvector. Rescaling x -> sqrt(2) x converts the
  // e^{-x^2} weight into the standard normal, and the eigenvector
  // normalization makes the weights sum to one with no explicit constant.
  Matrix jacobi = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  if (es.info() != Eigen::Success)
    throw NonConvergenceError(0.0, "gauss_hermite: eigensolver failed");

  Quadrature q;
  q.order = order;
  q.nodes = std::sqrt(2.0) * es.eigenvalues();
  q.weights = es.eigenvectors().row(0).transpose().array().square();
  return q;
}

const Quadrature& default_quadrature() {
  static const Quadrature q = gauss_hermite(61);
  return q;
}

double mmse(double gamma, const Quadrature& quad) {
  if (!(gamma >= 0.0))
    throw ValidationError("gamma", "mmse: gamma must be >= 0");
  const double root = std::sqrt(gamma);
  double second_moment = 0.0;
  for (int j = 0; j < quad.order; ++j) {
    const double th = std::tanh(gamma + root * quad.nodes[j]);
    second_moment += quad.weights[j] * th * th;
  }
  return std::clamp(1.0 - second_moment, 0.0, 1.0);
}

std::vector<double> gamma_iterates(double beta, double t, int k_max,
                                   const Quadrature& quad) {
  if (k_max < 0)
    throw ValidationError("k_max", "gamma_iterates: k_max must be >= 0");
  if (!(t >= 0.0))
    throw ValidationError("t", "gamma_iterates: t must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (int k = 0; k < k_max; ++k)
    out[k + 1] = recursion_map(beta, t, out[k], quad);
  return out;
}

double gamma_star(double beta, double t, double tol, const Quadrature& quad) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw ValidationError("beta", "gamma_star: beta must lie in [0, 1)");
  if (!(t > 0.0)) throw ValidationError("t", "gamma_star: t must be > 0");
  if (!(tol > 0.0)) throw ValidationError("tol", "gamma_star: tol must be > 0");
  if (beta == 0.0) return 0.0;

  // The residual controls the error through the contraction factor beta^2:
  // |gamma - gamma_*| <= residual / (1 - beta^2). Stop when that bound is
  // below tol.
  const double residual_tol = tol * (1.0 - beta * beta);

  double gamma = 0.5 * beta * beta;
  for (int it = 0; it < kPicardCap; ++it) {
    const double mapped = recursion_map(beta, t, gamma, quad);
    if (std::abs(mapped - gamma) <= residual_tol) return gamma;
    gamma = 0.5 * gamma + 0.5 * mapped;
  }

  // Bisection fallback on [0, beta^2]: g(gamma) = gamma - map(gamma) is
  // nonpositive at 0 and nonnegative at beta^2.
  double lo = 0.0, hi = beta * beta;
  for (int it = 0; it < kBisectionCap; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= tol) return mid;
    if (mid - recursion_map(beta, t, mid, quad) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  throw NonConvergenceError(0.5 * (lo + hi),
                            "gamma_star: iteration caps exhausted");
}

double q_k(double beta, double t, int k, const Quadrature& quad) {
  if (k < 0) throw ValidationError("k", "q_k: k must be >= 0");
  if (beta == 0.0) return 0.0;
  const auto g = gamma_iterates(beta, t, k + 1, quad);
  return g[static_cast<std::size_t>(k) + 1] / (beta * beta);
}

double amp_mse_prediction(double beta, double t, int k, const Quadrature& quad) {
  if (!(beta > 0.0))
    throw ValidationError("beta", "amp_mse_prediction: beta must be > 0");
  return 1.0 - q_k(beta, t, k, quad);
}

ScheduleTable build_schedule(double beta, double delta, int big_l,
                             const Quadrature& quad) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw ValidationError("beta", "build_schedule: beta must lie in [0, 1)");
  if (!(delta > 0.0))
    throw ValidationError("delta", "build_schedule: delta must be > 0");
  if (big_l < 1)
    throw ValidationError("big_l", "build_schedule: big_l must be >= 1");

  ScheduleTable table;
  table.beta = beta;
  table.delta = delta;
  table.big_l = big_l;
  table.quadrature_order = quad.order;
  table.entries.resize(static_cast<std::size_t>(big_l) + 1);
  table.entries[0] = ScheduleEntry{0.0, 0.0, 0.0};
  for (int l = 1; l <= big_l; ++l) {
    const double t = l * delta;
    const double gs =
        beta > 0.0 ? gamma_star(beta, t, kGammaStarTol, quad) : 0.0;
    table.entries[static_cast<std::size_t>(l)] =
        ScheduleEntry{t, gs, beta > 0.0 ? gs / (beta * beta) : 0.0};
  }
  return table;
}

nlohmann::json ScheduleTable::to_json() const {
  nlohmann::json j;
  j["beta"] = beta;
  j["delta"] = delta;
  j["L"] = big_l;
  j["quadrature_order"] = quadrature_order;
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"t", e.t}, {"gamma_star", e.gamma_star}, {"q_star", e.q_star}});
  return j;
}

ScheduleTable ScheduleTable::from_json(const nlohmann::json& j) {
  for (const char* key : {"beta", "delta", "L", "quadrature_order", "entries"})
    if (!j.contains(key))
      throw ValidationError(key, std::string("ScheduleTable: missing key ") + key);
  ScheduleTable table;
  table.beta = j.at("beta").get<double>();
  table.delta = j.at("delta").get<double>();
  table.big_l = j.at("L").get<int>();
  table.quadrature_order = j.at("quadrature_order").get<int>();
  const auto& arr = j.at("entries");
  if (!arr.is_array() ||
      arr.size() != static_cast<std::size_t>(table.big_l) + 1)
    throw ValidationError("entries",
                          "ScheduleTable: entries must hold L + 1 elements");
  table.entries.reserve(arr.size());
  for (const auto& e : arr)
    table.entries.push_back(ScheduleEntry{e.at("t").get<double>(),
                                          e.at("gamma_star").get<double>(),
                                          e.at("q_star").get<double>()});
  return table;
}

}  // namespace skloc::se
