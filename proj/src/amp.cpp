#include "skloc/amp.hpp"

#include <cmath>

#include "skloc/errors.hpp"

namespace skloc::amp {

namespace {

double onsager_of(const Vector& m, double beta) {
  const double n = static_cast<double>(m.size());
  return beta * beta * (n - m.squaredNorm()) / n;
}

void check_dims(const disorder::CouplingMatrix& matrix, const Vector& y) {
  if (matrix.entries.rows() != matrix.n || matrix.entries.cols() != matrix.n)
    throw ValidationError("matrix", "amp: matrix shape mismatch");
  if (y.size() != matrix.n)
    throw ValidationError("y", "amp: field length mismatch");
}

// Single update kernel shared by amp_step and amp_run_ws, so the two entry
// points produce bitwise-identical trajectories by construction.
void step_core(const Matrix& a, const Vector& y, double beta, double onsager,
               const Vector& m, const Vector& m_prev, Vector& tmp, Vector& z) {
  tmp.noalias() = a * m;
  z = beta * tmp + y - onsager * m_prev;
}

Vector clamped_tanh(const Vector& z) {
  const double lim = 1.0 - kInteriorClamp;
  return z.array().tanh().min(lim).max(-lim).matrix();
}

}  // namespace

AmpState amp_init(Eigen::Index n, double beta) {
  if (n < 1) throw ValidationError("n", "amp_init: need n >= 1");
  AmpState s;
  s.z = Vector::Zero(n);
  s.m_curr = MagnetizationVector(Vector::Zero(n));
  s.m_prev = MagnetizationVector(Vector::Zero(n));
  s.onsager = beta * beta;
  s.iter = 0;
  return s;
}

AmpState amp_step(const AmpState& state, const disorder::CouplingMatrix& matrix,
                  const Vector& y, double beta) {
  check_dims(matrix, y);
  if (state.z.size() != matrix.n || state.m_curr.values.size() != matrix.n ||
      state.m_prev.values.size() != matrix.n)
    throw ValidationError("state", "amp_step: state dimension mismatch");

  AmpState next;
  Vector tmp(matrix.n);
  next.z.resize(matrix.n);
  step_core(matrix.entries, y, beta, state.onsager, state.m_curr.values,
            state.m_prev.values, tmp, next.z);
  next.m_curr = MagnetizationVector(clamped_tanh(next.z));
  next.m_prev = state.m_curr;
  next.onsager = onsager_of(next.m_curr.values, beta);
  next.iter = state.iter + 1;
  return next;
}

void amp_run_ws(const disorder::CouplingMatrix& matrix, const Vector& y,
                double beta, int k_amp, AmpWorkspace& ws) {
  check_dims(matrix, y);
  if (k_amp < 0) throw ValidationError("k_amp", "amp_run: need k_amp >= 0");
  const Eigen::Index n = matrix.n;
  ws.z = Vector::Zero(n);
  ws.m = Vector::Zero(n);
  ws.m_prev = Vector::Zero(n);
  ws.tmp.resize(n);
  double onsager = beta * beta;
  for (int k = 0; k < k_amp; ++k) {
    step_core(matrix.entries, y, beta, onsager, ws.m, ws.m_prev, ws.tmp, ws.z);
    ws.m_prev.swap(ws.m);
    ws.m = clamped_tanh(ws.z);
    onsager = onsager_of(ws.m, beta);
  }
}

std::pair<MagnetizationVector, AmpState> amp_run(
    const disorder::CouplingMatrix& matrix, const Vector& y, double beta,
    int k_amp) {
  check_dims(matrix, y);
  if (k_amp < 0) throw ValidationError("k_amp", "amp_run: need k_amp >= 0");
  AmpState state = amp_init(matrix.n, beta);
  for (int k = 0; k < k_amp; ++k) state = amp_step(state, matrix, y, beta);
  return {state.m_curr, state};
}

double amp_lipschitz_probe(const disorder::CouplingMatrix& matrix,
                           const Vector& y1, const Vector& y2, double beta,
                           int k) {
  check_dims(matrix, y1);
  check_dims(matrix, y2);
  if (k < 1) throw ValidationError("k", "amp_lipschitz_probe: need k >= 1");
  if (y1 == y2)
    throw ValidationError("y2", "amp_lipschitz_probe: fields must differ");
  if (matrix.op_norm_estimate() > 3.0)
    throw ValidationError("matrix",
                          "amp_lipschitz_probe: operator norm above 3");
  const Vector m1 = amp_run(matrix, y1, beta, k).first.values;
  const Vector m2 = amp_run(matrix, y2, beta, k).first.values;
  const Vector d = m1.array().atanh().matrix() - m2.array().atanh().matrix();
  return d.norm() / (y1 - y2).norm();
}

}  // namespace skloc::amp
