#include "skloc/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "skloc/errors.hpp"
#include "skloc/parallel.hpp"
#include "skloc/rng.hpp"

namespace skloc::oracle {

namespace {

constexpr Eigen::Index kEnumerationCap = 24;
constexpr Eigen::Index kCovarianceCap = 20;

inline std::uint64_t gray(std::uint64_t k) { return k ^ (k >> 1); }

// Spin vector for a bit-coded state: bit i set <=> x_i = +1.
Vector state_to_vector(std::uint64_t code, Eigen::Index n) {
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = (code >> i) & 1u ? 1.0 : -1.0;
  return x;
}

// Fixed block decomposition of the state space: boundaries depend only on n,
// so parallel fills and reductions are bitwise reproducible at any worker
// count (each block is combined serially in block order).
std::vector<std::uint64_t> block_bounds(std::uint64_t total) {
  const std::uint64_t want = std::clamp<std::uint64_t>(total / 4096, 1, 256);
  std::vector<std::uint64_t> bounds;
  bounds.reserve(want + 1);
  for (std::uint64_t b = 0; b <= want; ++b)
    bounds.push_back(total / want * b + std::min<std::uint64_t>(total % want, b));
  return bounds;
}

struct BlockStat {
  double max = -std::numeric_limits<double>::infinity();
  double sum_exp = 0.0;  // sum of exp(lw - max) within the block
};

}  // namespace

ExactGibbs exact_build(const disorder::CouplingMatrix& matrix, const Vector& y,
                       double beta) {
  const Eigen::Index n = matrix.n;
  if (n < 1 || n > kEnumerationCap)
    throw ValidationError("n", "exact_build: need 1 <= n <= 24");
  if (matrix.entries.rows() != n || matrix.entries.cols() != n)
    throw ValidationError("matrix", "exact_build: matrix shape mismatch");
  if (y.size() != n)
    throw ValidationError("y", "exact_build: field length mismatch");

  ExactGibbs g;
  g.n = n;
  g.beta = beta;
  g.y = y;
  g.a = matrix.entries;
  const std::uint64_t total = 1ull << n;
  g.log_weights.resize(total);

  const auto bounds = block_bounds(total);
  const std::int64_t nblocks = static_cast<std::int64_t>(bounds.size()) - 1;
  std::vector<BlockStat> stats(static_cast<std::size_t>(nblocks));

  // Pass 1: Gray-code walk per block. Consecutive visited states differ in
  // exactly one spin (bit countr_zero(k+1)), so the quadratic and linear
  // energies update in O(n): flipping x_j changes <x,Ax> by
  // -4 x_j (Ax)_j + 4 A_jj and <y,x> by -2 y_j x_j.
  parallel_for(nblocks, [&](std::int64_t blk) {
    const std::uint64_t k0 = bounds[static_cast<std::size_t>(blk)];
    const std::uint64_t k1 = bounds[static_cast<std::size_t>(blk) + 1];
    Vector x = state_to_vector(gray(k0), n);
    Vector s = matrix.entries * x;
    double e_quad = x.dot(s);
    double e_lin = y.dot(x);
    auto& stat = stats[static_cast<std::size_t>(blk)];

    double lw = 0.5 * beta * e_quad + e_lin;
    g.log_weights[gray(k0)] = lw;
    stat.max = lw;
    for (std::uint64_t k = k0; k + 1 < k1; ++k) {
      const int j = std::countr_zero(k + 1);
      const double xj = x[j];
      e_quad += -4.0 * xj * s[j] + 4.0 * matrix.entries(j, j);
      e_lin += -2.0 * y[j] * xj;
      s.noalias() -= (2.0 * xj) * matrix.entries.col(j);
      x[j] = -xj;
      lw = 0.5 * beta * e_quad + e_lin;
      g.log_weights[gray(k + 1)] = lw;
      stat.max = std::max(stat.max, lw);
    }
  });

  // Pass 2: per-block exp sums against the block max.
  parallel_for(nblocks, [&](std::int64_t blk) {
    const std::uint64_t k0 = bounds[static_cast<std::size_t>(blk)];
    const std::uint64_t k1 = bounds[static_cast<std::size_t>(blk) + 1];
    auto& stat = stats[static_cast<std::size_t>(blk)];
    double acc = 0.0;
    for (std::uint64_t b = k0; b < k1; ++b)
      acc += std::exp(g.log_weights[gray(b)] - stat.max);
    stat.sum_exp = acc;
  });

  double global_max = -std::numeric_limits<double>::infinity();
  for (const auto& st : stats) global_max = std::max(global_max, st.max);
  double z = 0.0;
  for (const auto& st : stats) z += std::exp(st.max - global_max) * st.sum_exp;
  g.log_z = global_max + std::log(z);

  g.probs.resize(total);
  parallel_for(nblocks, [&](std::int64_t blk) {
    const std::uint64_t k0 = bounds[static_cast<std::size_t>(blk)];
    const std::uint64_t k1 = bounds[static_cast<std::size_t>(blk) + 1];
    for (std::uint64_t b = k0; b < k1; ++b)
      g.probs[b] = std::exp(g.log_weights[b] - g.log_z);
  });
  return g;
}

namespace {

// Raw (unclamped) mean, shared by the mean and covariance paths.
Vector raw_mean(const ExactGibbs& g) {
  const std::uint64_t total = 1ull << g.n;
  const auto bounds = block_bounds(total);
  const std::int64_t nblocks = static_cast<std::int64_t>(bounds.size()) - 1;
  std::vector<Vector> plus(static_cast<std::size_t>(nblocks));
  std::vector<double> mass(static_cast<std::size_t>(nblocks), 0.0);

  parallel_for(nblocks, [&](std::int64_t blk) {
    Vector acc = Vector::Zero(g.n);
    double m = 0.0;
    for (std::uint64_t b = bounds[static_cast<std::size_t>(blk)];
         b < bounds[static_cast<std::size_t>(blk) + 1]; ++b) {
      const double p = g.probs[b];
      m += p;
      std::uint64_t bits = b;
      while (bits) {
        acc[std::countr_zero(bits)] += p;
        bits &= bits - 1;
      }
    }
    plus[static_cast<std::size_t>(blk)] = acc;
    mass[static_cast<std::size_t>(blk)] = m;
  });

  Vector plus_mass = Vector::Zero(g.n);
  double total_mass = 0.0;
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    plus_mass += plus[static_cast<std::size_t>(blk)];
    total_mass += mass[static_cast<std::size_t>(blk)];
  }
  // mean_i = P(x_i = +1) - P(x_i = -1) = 2 * plus_i - total.
  return 2.0 * plus_mass - Vector::Constant(g.n, total_mass);
}

}  // namespace

MagnetizationVector exact_mean(const ExactGibbs& g) {
  return MagnetizationVector::clamped(raw_mean(g));
}

Matrix exact_second_moment(const ExactGibbs& g) {
  if (g.n > kCovarianceCap)
    throw ValidationError("n", "exact_second_moment: need n <= 20");
  const std::uint64_t total = 1ull << g.n;
  const auto bounds = block_bounds(total);
  const std::int64_t nblocks = static_cast<std::int64_t>(bounds.size()) - 1;
  std::vector<Matrix> acc(static_cast<std::size_t>(nblocks));

  parallel_for(nblocks, [&](std::int64_t blk) {
    Matrix local = Matrix::Zero(g.n, g.n);
    Vector x(g.n);
    for (std::uint64_t b = bounds[static_cast<std::size_t>(blk)];
         b < bounds[static_cast<std::size_t>(blk) + 1]; ++b) {
      for (Eigen::Index i = 0; i < g.n; ++i)
        x[i] = (b >> i) & 1u ? 1.0 : -1.0;
      local.selfadjointView<Eigen::Lower>().rankUpdate(x, g.probs[b]);
    }
    acc[static_cast<std::size_t>(blk)] = local;
  });

  Matrix m = Matrix::Zero(g.n, g.n);
  for (const auto& a : acc) m += a;
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  return m;
}

Matrix exact_covariance(const ExactGibbs& g) {
  const Vector m = raw_mean(g);
  Matrix cov = exact_second_moment(g);
  cov.noalias() -= m * m.transpose();
  return cov;
}

double exact_cov_top_eigenvalue(const ExactGibbs& g) {
  const Matrix cov = exact_covariance(g);
  // Power iteration on the PSD covariance; the mild tilt in the start
  // vector avoids starting orthogonal to a symmetric top eigenspace.
  Vector v(g.n);
  for (Eigen::Index i = 0; i < g.n; ++i) v[i] = 1.0 + 0.01 * i;
  v /= v.norm();
  double rq_prev = -1.0;
  for (int it = 0; it < 10000; ++it) {
    Vector w = cov * v;
    const double rq = v.dot(w);
    if (it > 0 && std::abs(rq - rq_prev) <= 1e-12 * std::max(1.0, rq))
      return rq;
    rq_prev = rq;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;  // point mass: zero covariance
    v = w / norm;
  }
  throw NonConvergenceError(rq_prev,
                            "exact_cov_top_eigenvalue: power iteration cap");
}

double log_z_sk(const disorder::CouplingMatrix& matrix, double beta) {
  if (beta == 0.0) return 0.0;
  const auto g = exact_build(matrix, Vector::Zero(matrix.n), beta);
  const double n = static_cast<double>(matrix.n);
  return g.log_z - n * std::log(2.0) - beta * beta * n / 4.0;
}

LogZskEstimate log_z_sk_mc(const disorder::CouplingMatrix& matrix, double beta,
                           std::int64_t samples, std::uint64_t seed) {
  if (samples < 2)
    throw ValidationError("samples", "log_z_sk_mc: need at least 2 samples");
  const Eigen::Index n = matrix.n;
  SplitRng stream = SplitRng(seed).split(stream_tag::kUniformControl);

  // Energies in blocks through a single float32 GEMM per block: the energy
  // scale is O(sqrt(n)) so float rounding (~1e-5 absolute here) is far below
  // the Monte Carlo noise this estimator is used with.
  const Eigen::Index block_cols = 2048;
  const Eigen::MatrixXf a32 = matrix.entries.cast<float>();
  Eigen::MatrixXf x(n, block_cols), gemm(n, block_cols);

  const double shift = beta * beta * static_cast<double>(n) / 4.0;
  double run_max = -std::numeric_limits<double>::infinity();
  double s1 = 0.0;  // sum exp(e - run_max)
  double s2 = 0.0;  // sum exp(2(e - run_max))
  std::int64_t done = 0;
  while (done < samples) {
    const Eigen::Index cols =
        static_cast<Eigen::Index>(std::min<std::int64_t>(block_cols, samples - done));
    for (Eigen::Index c = 0; c < cols; ++c) {
      Eigen::Index i = 0;
      while (i < n) {
        std::uint64_t bits = stream.next_u64();
        for (int b = 0; b < 64 && i < n; ++b, ++i, bits >>= 1)
          x(i, c) = bits & 1u ? 1.0f : -1.0f;
      }
    }
    gemm.leftCols(cols).noalias() = a32 * x.leftCols(cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double quad =
          static_cast<double>(x.col(c).dot(gemm.col(c)));
      const double e = 0.5 * beta * quad - shift;
      if (e > run_max) {
        // Rescale the running sums to the new maximum.
        const double r = std::exp(run_max - e);
        s1 *= r;
        s2 *= r * r;
        run_max = e;
      }
      const double d = std::exp(e - run_max);
      s1 += d;
      s2 += d * d;
    }
    done += cols;
  }

  const double m = static_cast<double>(samples);
  LogZskEstimate est;
  est.value = run_max + std::log(s1) - std::log(m);
  // Delta method: SE(log Zhat) = SD(w)/(sqrt(M) * mean(w)), computed from
  // the max-scaled sums so nothing overflows.
  const double ratio = std::max(s2 / (s1 * s1) - 1.0 / m, 0.0);
  est.std_error = std::sqrt(m / (m - 1.0) * ratio);
  return est;
}

sampler::EmpiricalSample exact_sample(const ExactGibbs& g, std::int64_t count,
                                      std::uint64_t seed) {
  if (count < 1) throw ValidationError("count", "exact_sample: count >= 1");
  const std::uint64_t total = 1ull << g.n;
  std::vector<double> cdf(total);
  double acc = 0.0;
  for (std::uint64_t b = 0; b < total; ++b) {
    acc += g.probs[b];
    cdf[b] = acc;
  }

  SplitRng stream = SplitRng(seed).split(stream_tag::kExactSample);
  sampler::EmpiricalSample out;
  out.seeds = {stream.fingerprint()};
  out.spins.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const double u = stream.next_double() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::uint64_t code = static_cast<std::uint64_t>(
        std::min<std::ptrdiff_t>(it - cdf.begin(),
                                 static_cast<std::ptrdiff_t>(total) - 1));
    out.spins.push_back(state_to_vector(code, g.n));
  }
  return out;
}

double glauber_flip_probability(const disorder::CouplingMatrix& matrix,
                                double beta, const Vector& x, Eigen::Index i) {
  const double field =
      beta * (matrix.entries.col(i).dot(x) - matrix.entries(i, i) * x[i]);
  return 0.5 * (1.0 + std::tanh(field));
}

sampler::EmpiricalSample glauber_run(const disorder::CouplingMatrix& matrix,
                                     double beta, int sweeps, int chains,
                                     std::uint64_t seed) {
  if (sweeps < 1) throw ValidationError("sweeps", "glauber_run: sweeps >= 1");
  if (chains < 1) throw ValidationError("chains", "glauber_run: chains >= 1");
  const Eigen::Index n = matrix.n;
  const SplitRng root(seed);

  sampler::EmpiricalSample out;
  out.spins.resize(static_cast<std::size_t>(chains));
  out.seeds.resize(static_cast<std::size_t>(chains));

  parallel_for(chains, [&](std::int64_t c) {
    SplitRng stream =
        root.split(stream_tag::kGlauber, static_cast<std::uint64_t>(c));
    out.seeds[static_cast<std::size_t>(c)] = stream.fingerprint();
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = stream.next_sign();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p_plus = glauber_flip_probability(matrix, beta, x, i);
        x[i] = stream.next_double() < p_plus ? 1.0 : -1.0;
      }
    }
    out.spins[static_cast<std::size_t>(c)] = std::move(x);
  });
  return out;
}

namespace {

// Square linear assignment by shortest augmenting paths with dual potential
// maintenance (Jonker-Volgenant style). O(m^3) worst case.
std::vector<int> solve_assignment(const Matrix& cost) {
  const int m = static_cast<int>(cost.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m, 0.0), v(m, 0.0), shortest(m, 0.0);
  std::vector<int> col4row(m, -1), row4col(m, -1), pred(m, -1), remaining(m, 0);
  std::vector<char> scanned_row(m, 0), scanned_col(m, 0);

  for (int cur = 0; cur < m; ++cur) {
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::fill(scanned_row.begin(), scanned_row.end(), 0);
    std::fill(scanned_col.begin(), scanned_col.end(), 0);
    for (int it = 0; it < m; ++it) remaining[it] = m - it - 1;
    int num_remaining = m;

    double min_val = 0.0;
    int i = cur;
    int sink = -1;
    while (sink == -1) {
      scanned_row[i] = 1;
      int index = -1;
      double lowest = kInf;
      for (int it = 0; it < num_remaining; ++it) {
        const int j = remaining[it];
        const double r = min_val + cost(i, j) - u[i] - v[j];
        if (r < shortest[j]) {
          shortest[j] = r;
          pred[j] = i;
        }
        if (shortest[j] < lowest ||
            (shortest[j] == lowest && row4col[j] == -1)) {
          lowest = shortest[j];
          index = it;
        }
      }
      min_val = lowest;
      const int j = remaining[index];
      if (row4col[j] == -1)
        sink = j;
      else
        i = row4col[j];
      scanned_col[j] = 1;
      remaining[index] = remaining[--num_remaining];
    }

    u[cur] += min_val;
    for (int r = 0; r < m; ++r)
      if (scanned_row[r] && r != cur)
        u[r] += min_val - shortest[col4row[r]];
    for (int j = 0; j < m; ++j)
      if (scanned_col[j]) v[j] -= min_val - shortest[j];

    int j = sink;
    for (;;) {
      const int r = pred[j];
      row4col[j] = r;
      std::swap(col4row[r], j);
      if (r == cur) break;
    }
  }
  return col4row;
}

}  // namespace

TransportPlan w2_empirical_matrices(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols() || a.cols() < 1)
    throw ValidationError("m", "w2_empirical: batches must share a positive size");
  if (a.rows() != b.rows())
    throw ValidationError("n", "w2_empirical: dimension mismatch");
  const Eigen::Index m = a.cols();
  if (m > 3000)
    throw ValidationError("m", "w2_empirical: batch size capped at 3000");

  // ||a_i - b_j||^2 through one GEMM.
  const Vector na = a.colwise().squaredNorm();
  const Vector nb = b.colwise().squaredNorm();
  Matrix cost = (-2.0) * (a.transpose() * b);
  cost.colwise() += na;
  cost.rowwise() += nb.transpose();
  cost = cost.cwiseMax(0.0);  // clip tiny negative cancellation noise

  TransportPlan plan;
  plan.assignment = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    total += cost(i, plan.assignment[static_cast<std::size_t>(i)]);
  plan.cost = total / (static_cast<double>(a.rows()) * static_cast<double>(m));
  return plan;
}

TransportPlan w2_empirical(const sampler::EmpiricalSample& a,
                           const sampler::EmpiricalSample& b) {
  if (a.spins.size() != b.spins.size() || a.spins.empty())
    throw ValidationError("m", "w2_empirical: batches must share a positive size");
  const Eigen::Index n = a.spins.front().size();
  Matrix ma(n, static_cast<Eigen::Index>(a.spins.size()));
  Matrix mb(n, static_cast<Eigen::Index>(b.spins.size()));
  for (std::size_t i = 0; i < a.spins.size(); ++i) {
    if (a.spins[i].size() != n || b.spins[i].size() != n)
      throw ValidationError("n", "w2_empirical: ragged batch");
    ma.col(static_cast<Eigen::Index>(i)) = a.spins[i];
    mb.col(static_cast<Eigen::Index>(i)) = b.spins[i];
  }
  return w2_empirical_matrices(ma, mb);
}

}  // namespace skloc::oracle
