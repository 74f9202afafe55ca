#pragma once

#include <vector>

#include "skloc/disorder.hpp"
#include "skloc/types.hpp"

namespace skloc::tap {

// Everything the mean-field objective needs besides the point it is
// evaluated at. The coupling matrix is borrowed, not copied: the context
// must not outlive it.
struct TapContext {
  const disorder::CouplingMatrix* matrix = nullptr;
  Vector y;
  double q = 0.0;  // overlap parameter in [0, 1]
  double beta = 0.0;
};

TapContext make_context(const disorder::CouplingMatrix& matrix, const Vector& y,
                        double q, double beta);

// Mean-field free energy
//   F(m) = -(beta/2)<m,Am> - <y,m> - sum_i h(m_i)
//          - n beta^2 (1-q)(1+q-2|m|^2/n)/4
// with h the binary entropy of a +/-1 spin with mean m_i.
double tap_free_energy(const TapContext& ctx, const MagnetizationVector& m);

// grad F = -beta A m - y + atanh(m) + beta^2 (1-q) m.
Vector tap_gradient(const TapContext& ctx, const MagnetizationVector& m);

// Matrix-free action of the Hessian
//   (-beta A + D(m) + beta^2 (1-q) I) v,   D(m) = diag(1/(1-m_i^2)).
// The Hessian is never assembled.
Vector tap_hessian_apply(const TapContext& ctx, const MagnetizationVector& m,
                         const Vector& v);

// Bregman divergence of the negative entropy:
//   D(m, nn) = sum_i [ -h(m_i) + h(nn_i) - atanh(nn_i) (m_i - nn_i) ].
// Nonnegative; zero iff m == nn.
double bregman(const MagnetizationVector& m, const MagnetizationVector& nn);

// Reusable buffers and the energy trace of a descent run.
struct NgdWorkspace {
  Vector u;     // pre-activation iterate
  Vector m;     // tanh(u), clamped
  Vector am;    // A * m, shared by the energy and the gradient
  Vector grad;
  std::vector<double> energies;  // F along the trajectory, k_ngd + 1 values
};

// Natural-gradient (mirror) descent on the free energy:
//   u <- u - eta * grad F(tanh(u)),
// starting from u0, for k_ngd steps. The energy trace is recorded; three
// consecutive energy increases raise DivergenceError carrying the trace.
// Result: ws.m holds the final clamped magnetization.
void ngd_run_ws(const TapContext& ctx, const Vector& u0, double eta, int k_ngd,
                NgdWorkspace& ws);

// Convenience wrapper; pass `trace` to receive the energy trajectory.
MagnetizationVector ngd_run(const TapContext& ctx, const Vector& u0, double eta,
                            int k_ngd, std::vector<double>* trace = nullptr);

// Distance (sup norm) between the explicit update tanh(atanh(m) - eta grad)
// and an independent per-coordinate root solve of the implicit first-order
// condition atanh(x) = atanh(m) - eta grad F(m). The two coincide
// analytically; the returned gap is numerical only (contract: <= 1e-10).
double mirror_step_check(const TapContext& ctx, const MagnetizationVector& m,
                         double eta);

}  // namespace skloc::tap
