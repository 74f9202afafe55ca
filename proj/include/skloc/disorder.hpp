#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "skloc/types.hpp"

namespace skloc::disorder {

// Symmetric coupling matrix with its generating seed. Entries are stored
// densely; symmetry is exact at the bit level because each off-diagonal pair
// is written from a single draw.
struct CouplingMatrix {
  Eigen::Index n = 0;
  Matrix entries;
  std::uint64_t seed = 0;

  // Cached spectral-norm estimate, filled on first use with a coarse
  // tolerance (1e-4). Guaranteed to be at least as large as every Rayleigh
  // quotient visited while estimating, so it never under-reports by more
  // than the power-iteration residual.
  double op_norm_estimate() const;

 private:
  mutable std::optional<double> op_norm_cache_;
};

// Gaussian orthogonal ensemble scaled so the spectrum concentrates on
// [-2, 2]: off-diagonal variance 1/n, diagonal variance 2/n. Identical
// (n, seed) give bitwise-identical matrices.
CouplingMatrix sample_goe(Eigen::Index n, std::uint64_t seed);

// Pair of independent same-size draws, used as the endpoints of an
// interpolation path.
struct DisorderPath {
  CouplingMatrix a0;
  CouplingMatrix a1;
};

DisorderPath sample_path(Eigen::Index n, std::uint64_t seed);

// sqrt(1 - s^2) * a0 + s * a1 for s in [0, 1]: each coordinate pair stays
// jointly Gaussian with per-entry correlation sqrt(1 - s^2) while the
// marginal law of the matrix is unchanged. The result carries a0's seed.
CouplingMatrix interpolate(const DisorderPath& path, double s);

// Rank-one spike (beta/n) x0 x0^T added to a GOE draw, with x0 uniform on
// the hypercube. At beta = 0 the matrix is bitwise identical to
// sample_goe(n, seed): the spike addition is skipped entirely, so the pure
// and planted ensembles share noise exactly.
struct PlantedInstance {
  Vector x0;
  CouplingMatrix matrix;
  double beta = 0.0;
};

PlantedInstance sample_planted(Eigen::Index n, double beta, std::uint64_t seed);

// Spectral norm max(|lambda_max|, |lambda_min|) by power iteration on the
// shifted matrices 3I + A and 3I - A (both positive definite whenever
// ||A|| < 3, which holds with overwhelming margin for the ensembles here).
// Deterministic all-ones start; stops when the Rayleigh quotient moves by
// less than tol * max(1, |quotient|) between sweeps; throws
// NonConvergenceError carrying the best estimate after 1000 sweeps.
double operator_norm(const CouplingMatrix& m, double tol = 1e-6);

// Binary container: magic "SKLM", u32 version, u64 n, then n*n doubles
// row-major, all little-endian. Round-trips bitwise.
void save_matrix(const CouplingMatrix& m, const std::string& path);
CouplingMatrix load_matrix(const std::string& path);

// Plain-text export, one row per line, entries separated by commas.
void export_csv(const CouplingMatrix& m, const std::string& path);

}  // namespace skloc::disorder
