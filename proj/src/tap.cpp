#include "skloc/tap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skloc/errors.hpp"

namespace skloc::tap {

namespace {

// Binary entropy of a +/-1 spin with mean m, in nats. log1p keeps both
// branches accurate near the clamp boundary, where 1 -/+ m is as small as
// kInteriorClamp.
double entropy(double m) {
  return std::log(2.0) -
         0.5 * ((1.0 + m) * std::log1p(m) + (1.0 - m) * std::log1p(-m));
}

void check_context(const TapContext& ctx) {
  if (ctx.matrix == nullptr)
    throw ValidationError("matrix", "tap: context has no coupling matrix");
  if (ctx.y.size() != ctx.matrix->n)
    throw ValidationError("y", "tap: field length mismatch");
  if (!(ctx.q >= 0.0 && ctx.q <= 1.0))
    throw ValidationError("q", "tap: overlap parameter outside [0,1]");
}

void check_point(const TapContext& ctx, const MagnetizationVector& m) {
  if (m.values.size() != ctx.matrix->n)
    throw ValidationError("m", "tap: magnetization length mismatch");
  if (!m.interior())
    throw ValidationError("m", "tap: magnetization touches the cube boundary");
}

// Correction term -n beta^2 (1-q)(1+q-2|m|^2/n)/4 and the shared quadratic
// and linear pieces, given a precomputed A*m.
double energy_given_am(const TapContext& ctx, const Vector& m,
                       const Vector& am) {
  const double n = static_cast<double>(m.size());
  const double quad = -0.5 * ctx.beta * m.dot(am);
  const double lin = -ctx.y.dot(m);
  double ent = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) ent += entropy(m[i]);
  const double big_q = m.squaredNorm() / n;
  const double corr = -n * ctx.beta * ctx.beta * (1.0 - ctx.q) *
                      (1.0 + ctx.q - 2.0 * big_q) / 4.0;
  return quad + lin - ent + corr;
}

void gradient_given_am(const TapContext& ctx, const Vector& m,
                       const Vector& am, Vector& grad) {
  grad = -ctx.beta * am - ctx.y + m.array().atanh().matrix() +
         (ctx.beta * ctx.beta * (1.0 - ctx.q)) * m;
}

}  // namespace

TapContext make_context(const disorder::CouplingMatrix& matrix, const Vector& y,
                        double q, double beta) {
  TapContext ctx;
  ctx.matrix = &matrix;
  ctx.y = y;
  ctx.q = q;
  ctx.beta = beta;
  check_context(ctx);
  return ctx;
}

double tap_free_energy(const TapContext& ctx, const MagnetizationVector& m) {
  check_context(ctx);
  check_point(ctx, m);
  const Vector am = ctx.matrix->entries * m.values;
  return energy_given_am(ctx, m.values, am);
}

Vector tap_gradient(const TapContext& ctx, const MagnetizationVector& m) {
  check_context(ctx);
  check_point(ctx, m);
  const Vector am = ctx.matrix->entries * m.values;
  Vector grad;
  gradient_given_am(ctx, m.values, am, grad);
  return grad;
}

Vector tap_hessian_apply(const TapContext& ctx, const MagnetizationVector& m,
                         const Vector& v) {
  check_context(ctx);
  check_point(ctx, m);
  if (v.size() != ctx.matrix->n)
    throw ValidationError("v", "tap_hessian_apply: vector length mismatch");
  const Vector diag =
      (1.0 - m.values.array().square()).inverse().matrix();
  return -ctx.beta * (ctx.matrix->entries * v) +
         diag.cwiseProduct(v) + (ctx.beta * ctx.beta * (1.0 - ctx.q)) * v;
}

double bregman(const MagnetizationVector& m, const MagnetizationVector& nn) {
  if (m.values.size() != nn.values.size())
    throw ValidationError("nn", "bregman: length mismatch");
  if (!m.interior() || !nn.interior())
    throw ValidationError("m", "bregman: point touches the cube boundary");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m.values.size(); ++i) {
    const double a = m.values[i], b = nn.values[i];
    acc += -entropy(a) + entropy(b) - std::atanh(b) * (a - b);
  }
  // Exact zero for identical inputs; tiny negative values are cancellation
  // noise around zero.
  return std::max(acc, 0.0);
}

void ngd_run_ws(const TapContext& ctx, const Vector& u0, double eta, int k_ngd,
                NgdWorkspace& ws) {
  check_context(ctx);
  if (u0.size() != ctx.matrix->n)
    throw ValidationError("u0", "ngd_run: start vector length mismatch");
  if (!u0.allFinite())
    throw ValidationError("u0", "ngd_run: start vector must be finite");
  if (!(eta > 0.0)) throw ValidationError("eta", "ngd_run: need eta > 0");
  if (k_ngd < 0) throw ValidationError("k_ngd", "ngd_run: need k_ngd >= 0");

  const double lim = 1.0 - kInteriorClamp;
  ws.u = u0;
  ws.m = ws.u.array().tanh().min(lim).max(-lim).matrix();
  ws.energies.clear();
  ws.energies.reserve(static_cast<std::size_t>(k_ngd) + 1);

  int rises = 0;
  for (int k = 0; k <= k_ngd; ++k) {
    ws.am.noalias() = ctx.matrix->entries * ws.m;
    const double energy = energy_given_am(ctx, ws.m, ws.am);
    if (!ws.energies.empty()) {
      const double prev = ws.energies.back();
      rises = energy > prev + 1e-12 * (1.0 + std::abs(prev)) ? rises + 1 : 0;
    }
    ws.energies.push_back(energy);
    if (rises >= 3)
      throw DivergenceError(ws.energies,
                            "ngd_run: free energy rose for 3 consecutive steps");
    if (k == k_ngd) break;
    gradient_given_am(ctx, ws.m, ws.am, ws.grad);
    ws.u -= eta * ws.grad;
    ws.m = ws.u.array().tanh().min(lim).max(-lim).matrix();
  }
}

MagnetizationVector ngd_run(const TapContext& ctx, const Vector& u0, double eta,
                            int k_ngd, std::vector<double>* trace) {
  NgdWorkspace ws;
  ngd_run_ws(ctx, u0, eta, k_ngd, ws);
  if (trace != nullptr) *trace = ws.energies;
  return MagnetizationVector(std::move(ws.m));
}

double mirror_step_check(const TapContext& ctx, const MagnetizationVector& m,
                         double eta) {
  check_context(ctx);
  check_point(ctx, m);
  if (!(eta >= 0.0))
    throw ValidationError("eta", "mirror_step_check: need eta >= 0");
  const Vector grad = tap_gradient(ctx, m);
  const Vector target = m.values.array().atanh().matrix() - eta * grad;
  const double lim = 1.0 - kInteriorClamp;
  const Vector explicit_step =
      target.array().tanh().min(lim).max(-lim).matrix();

  // Independent route: bisect atanh(x) = target per coordinate. atanh is
  // strictly increasing, so plain interval halving on [-lim, lim] converges
  // to the same point the closed form lands on (or the clamp boundary when
  // the target lies outside the representable range).
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.values.size(); ++i) {
    double lo = -lim, hi = lim;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (std::atanh(mid) < target[i])
        lo = mid;
      else
        hi = mid;
    }
    const double root = 0.5 * (lo + hi);
    worst = std::max(worst, std::abs(root - explicit_step[i]));
  }
  return worst;
}

}  // namespace skloc::tap
