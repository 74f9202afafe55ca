#pragma once

#include <cstdint>
#include <vector>

#include "skloc/disorder.hpp"
#include "skloc/sampler.hpp"
#include "skloc/types.hpp"

namespace skloc::oracle {

// Fully enumerated tilted Gibbs law on {-1,+1}^n for n <= 24. State b is
// bit-coded: spin i of state b is +1 exactly when bit i of b is set.
struct ExactGibbs {
  Eigen::Index n = 0;
  double beta = 0.0;
  Vector y;
  Matrix a;                         // coupling matrix copy
  std::vector<double> log_weights;  // (beta/2) <x,Ax> + <y,x> per state
  double log_z = 0.0;               // log-sum-exp of log_weights
  std::vector<double> probs;        // exp(log_weights - log_z)
};

// Enumerates all 2^n states in Gray-code order, updating the quadratic and
// linear energy terms in O(n) per visited state.
ExactGibbs exact_build(const disorder::CouplingMatrix& matrix, const Vector& y,
                       double beta);

// Exact mean coordinates sum_x p(x) x, each strictly inside (-1, 1) unless
// the law is a point mass (clamped either way).
MagnetizationVector exact_mean(const ExactGibbs& g);

// Exact spin second moment E[x x^T] (diagonal identically 1).
Matrix exact_second_moment(const ExactGibbs& g);

// Exact covariance E[x x^T] - m m^T.
Matrix exact_covariance(const ExactGibbs& g);

// Largest eigenvalue of the exact covariance by power iteration on the
// assembled matrix (n <= 20 gate: the covariance is exact, only its top
// eigenvalue is iterated).
double exact_cov_top_eigenvalue(const ExactGibbs& g);

// log of the centered partition function
//   2^{-n} sum_x exp{(beta/2) <x,Ax> - beta^2 n / 4}
// by full enumeration (n <= 24).
double log_z_sk(const disorder::CouplingMatrix& matrix, double beta);

// Monte Carlo estimate of the same quantity for sizes that cannot be
// enumerated: `samples` uniform spin vectors, streaming log-sum-exp, with a
// delta-method standard error of the log. An estimator with a reported SE,
// not an exact value: at large n the summand spread makes the estimate
// noisy, which is why the SE travels with it.
struct LogZskEstimate {
  double value = 0.0;
  double std_error = 0.0;
};
LogZskEstimate log_z_sk_mc(const disorder::CouplingMatrix& matrix, double beta,
                           std::int64_t samples, std::uint64_t seed);

// iid draws from the enumerated law by inverse CDF; deterministic per seed.
sampler::EmpiricalSample exact_sample(const ExactGibbs& g, std::int64_t count,
                                      std::uint64_t seed);

// Heat-bath single-site dynamics: one sweep updates every site once, each
// site resampled from its exact conditional law given the rest. Returns the
// final state of `chains` independent chains started uniformly at random.
sampler::EmpiricalSample glauber_run(const disorder::CouplingMatrix& matrix,
                                     double beta, int sweeps, int chains,
                                     std::uint64_t seed);

// Probability that site i is resampled to +1 given the rest of x (exposed
// for detailed-balance checks).
double glauber_flip_probability(const disorder::CouplingMatrix& matrix,
                                double beta, const Vector& x, Eigen::Index i);

// Optimal assignment between two equal-size batches under squared Euclidean
// cost. cost is normalized by n*m, so it upper-bounds the squared
// normalized Wasserstein distance between the underlying laws.
struct TransportPlan {
  std::vector<int> assignment;  // row i of a matches column assignment[i] of b
  double cost = 0.0;
};
TransportPlan w2_empirical(const sampler::EmpiricalSample& a,
                           const sampler::EmpiricalSample& b);

// Same solver on arbitrary equal-size vector batches (columns are points).
TransportPlan w2_empirical_matrices(const Matrix& a, const Matrix& b);

}  // namespace skloc::oracle
