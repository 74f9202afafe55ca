#pragma once

#include <utility>

#include "skloc/disorder.hpp"
#include "skloc/types.hpp"

namespace skloc::amp {

// One iterate of the memory-one message-passing recursion
//   z^{k+1} = beta * A * m^k + y - b_k * m^{k-1},   m^k = tanh(z^k),
// with the Onsager coefficient b_k = (beta^2/n) sum_i (1 - (m^k_i)^2).
struct AmpState {
  Vector z;                    // pre-activation z^k
  MagnetizationVector m_curr;  // tanh(z^k), clamped to the open cube
  MagnetizationVector m_prev;  // previous magnetization m^{k-1}
  double onsager = 0.0;        // b_k evaluated at m_curr
  int iter = 0;                // k
};

// Initial state: m^{-1} = z^0 = 0, so b_0 = beta^2.
AmpState amp_init(Eigen::Index n, double beta);

// Advances the recursion by one step. The first step from amp_init returns
// z^1 == y bitwise: the matrix and Onsager terms multiply exact zeros.
AmpState amp_step(const AmpState& state, const disorder::CouplingMatrix& matrix,
                  const Vector& y, double beta);

// Reusable buffers for repeated runs on the hot path (one allocation per
// distinct n, none afterwards).
struct AmpWorkspace {
  Vector z;
  Vector m;
  Vector m_prev;
  Vector tmp;
};

// Runs k_amp steps from the zero initialization and leaves z^k in ws.z and
// the clamped tanh(z^k) in ws.m. Bitwise identical to chaining amp_step.
void amp_run_ws(const disorder::CouplingMatrix& matrix, const Vector& y,
                double beta, int k_amp, AmpWorkspace& ws);

// Convenience wrapper returning the final magnetization and full state.
std::pair<MagnetizationVector, AmpState> amp_run(
    const disorder::CouplingMatrix& matrix, const Vector& y, double beta,
    int k_amp);

// Sensitivity of the pre-activation output to the drive field:
//   ||atanh m(y1) - atanh m(y2)|| / ||y1 - y2||  after k steps.
// For ||A||_op <= 3 (validated on entry) the ratio is bounded by k * 6^k.
double amp_lipschitz_probe(const disorder::CouplingMatrix& matrix,
                           const Vector& y1, const Vector& y2, double beta,
                           int k);

}  // namespace skloc::amp
