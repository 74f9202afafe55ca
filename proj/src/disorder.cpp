#include "skloc/disorder.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "skloc/errors.hpp"
#include "skloc/rng.hpp"

namespace skloc::disorder {

namespace {

static_assert(std::endian::native == std::endian::little,
              "matrix container I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'K', 'L', 'M'};
constexpr std::uint32_t kContainerVersion = 1;
constexpr int kPowerIterationCap = 1000;

// Positive shift that keeps 3I +/- A positive definite for every matrix this
// toolkit produces (GOE norms concentrate near 2; spiked instances stay well
// below 3 for the betas in play).
constexpr double kPowerShift = 3.0;

// Largest Rayleigh quotient of (kPowerShift*I + sign*A) reached by power
// iteration, minus the shift: an estimate of the corresponding spectral end
// of A. Reports the running maximum so the caller's estimate dominates every
// Ritz value visited.
double spectral_end(const Matrix& a, double sign, double tol, bool& converged,
                    double& best_end) {
  const Eigen::Index n = a.rows();
  Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector w(n);
  double rq_prev = std::numeric_limits<double>::quiet_NaN();
  converged = false;
  for (int it = 0; it < kPowerIterationCap; ++it) {
    w.noalias() = sign * (a * v);
    w += kPowerShift * v;
    const double rq = v.dot(w);
    best_end = std::max(best_end, rq - kPowerShift);
    if (it > 0 && std::abs(rq - rq_prev) <= tol * std::max(1.0, std::abs(rq))) {
      converged = true;
      return rq - kPowerShift;
    }
    rq_prev = rq;
    const double norm = w.norm();
    if (norm == 0.0) {  // v spans the kernel of the shifted matrix
      converged = true;
      return rq - kPowerShift;
    }
    v = w / norm;
  }
  return rq_prev - kPowerShift;
}

}  // namespace

double CouplingMatrix::op_norm_estimate() const {
  if (!op_norm_cache_) {
    try {
      op_norm_cache_ = operator_norm(*this, 1e-4);
    } catch (const NonConvergenceError& e) {
      op_norm_cache_ = e.best_estimate;
    }
  }
  return *op_norm_cache_;
}

CouplingMatrix sample_goe(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n", "sample_goe: n must be >= 1");
  CouplingMatrix m;
  m.n = n;
  m.seed = seed;
  m.entries.resize(n, n);

  SplitRng stream = SplitRng(seed).split(stream_tag::kGoe);
  const double off_scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double diag_scale = std::sqrt(2.0 / static_cast<double>(n));
  // Upper triangle plus diagonal, row by row, mirrored as drawn. One draw
  // per entry pair makes symmetry exact at the bit level.
  for (Eigen::Index i = 0; i < n; ++i) {
    m.entries(i, i) = diag_scale * stream.next_gaussian();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = off_scale * stream.next_gaussian();
      m.entries(i, j) = v;
      m.entries(j, i) = v;
    }
  }
  return m;
}

DisorderPath sample_path(Eigen::Index n, std::uint64_t seed) {
  const SplitRng root(seed);
  DisorderPath path;
  path.a0 = sample_goe(n, root.split(stream_tag::kPath, 0).fingerprint());
  path.a1 = sample_goe(n, root.split(stream_tag::kPath, 1).fingerprint());
  return path;
}

CouplingMatrix interpolate(const DisorderPath& path, double s) {
  if (!(s >= 0.0 && s <= 1.0))
    throw ValidationError("s", "interpolate: s must lie in [0, 1]");
  if (path.a0.n != path.a1.n || path.a0.n < 1)
    throw ValidationError("path", "interpolate: endpoints must share a positive size");
  CouplingMatrix m;
  m.n = path.a0.n;
  m.seed = path.a0.seed;
  const double c0 = std::sqrt(1.0 - s * s);
  // c0^2 + s^2 = 1 preserves the per-entry variance, so every slice of the
  // path is again GOE-distributed while correlating with a0 at level c0.
  m.entries = c0 * path.a0.entries + s * path.a1.entries;
  return m;
}

PlantedInstance sample_planted(Eigen::Index n, double beta, std::uint64_t seed) {
  if (!(beta >= 0.0))
    throw ValidationError("beta", "sample_planted: beta must be >= 0");
  PlantedInstance inst;
  inst.beta = beta;
  inst.matrix = sample_goe(n, seed);

  SplitRng signs = SplitRng(seed).split(stream_tag::kPlantedSign);
  inst.x0.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) inst.x0[i] = signs.next_sign();

  // Skipped at beta = 0 so the zero-spike instance is bitwise identical to
  // the plain draw (adding 0.0 can still flip the sign of a signed zero).
  if (beta > 0.0) {
    const double scale = beta / static_cast<double>(n);
    inst.matrix.entries.noalias() += scale * (inst.x0 * inst.x0.transpose());
  }
  return inst;
}

double operator_norm(const CouplingMatrix& m, double tol) {
  if (!(tol > 0.0))
    throw ValidationError("tol", "operator_norm: tol must be > 0");
  if (m.n < 1 || m.entries.rows() != m.n || m.entries.cols() != m.n)
    throw ValidationError("matrix", "operator_norm: matrix is empty or misshapen");

  double best = 0.0;
  bool conv_hi = false, conv_lo = false;
  const double end_hi = spectral_end(m.entries, +1.0, tol, conv_hi, best);
  const double end_lo = spectral_end(m.entries, -1.0, tol, conv_lo, best);
  const double estimate = std::max({end_hi, end_lo, 0.0});
  if (!conv_hi || !conv_lo) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "operator_norm: power iteration hit the %d-sweep cap",
                  kPowerIterationCap);
    throw NonConvergenceError(std::max(best, 0.0), msg);
  }
  return estimate;
}

void save_matrix(const CouplingMatrix& m, const std::string& path) {
  if (m.n < 1 || m.entries.rows() != m.n || m.entries.cols() != m.n)
    throw ValidationError("matrix", "save_matrix: matrix is empty or misshapen");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_matrix: cannot open " + path);

  out.write(kMagic, 4);
  const std::uint32_t version = kContainerVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t n = static_cast<std::uint64_t>(m.n);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  std::vector<double> row(static_cast<std::size_t>(m.n));
  for (Eigen::Index i = 0; i < m.n; ++i) {
    for (Eigen::Index j = 0; j < m.n; ++j)
      row[static_cast<std::size_t>(j)] = m.entries(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_matrix: write failed for " + path);
}

CouplingMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_matrix: cannot open " + path);

  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw SchemaVersionError("load_matrix: bad magic in " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kContainerVersion)
    throw SchemaVersionError("load_matrix: unsupported container version " +
                             std::to_string(version));
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n == 0 || n > (1ull << 20))
    throw SchemaVersionError("load_matrix: implausible dimension in header");

  CouplingMatrix m;
  m.n = static_cast<Eigen::Index>(n);
  m.seed = 0;  // the container stores entries only
  m.entries.resize(m.n, m.n);
  std::vector<double> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < m.n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw SchemaVersionError("load_matrix: truncated payload");
    for (Eigen::Index j = 0; j < m.n; ++j)
      m.entries(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

void export_csv(const CouplingMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);
  char buf[32];
  for (Eigen::Index i = 0; i < m.n; ++i) {
    for (Eigen::Index j = 0; j < m.n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.entries(i, j));
      out << buf << (j + 1 < m.n ? "," : "");
    }
    out << '\n';
  }
}

}  // namespace skloc::disorder
