#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skloc/sampler.hpp"
#include "skloc/types.hpp"

namespace skloc::experiments {

// One named curve: y[i] +/- se[i] measured at abscissa x[i]. All three
// vectors have equal length; se entries are zero when no error bar applies.
struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> se;
};

// Self-describing artifact of one experiment run. `config` is a full
// parameter snapshot (enough to repeat the run), `seeds` lists every derived
// stream seed in drawing order, and `metrics` holds scalar results that a
// repeated run must reproduce bitwise. Timestamps and wall-clock curves are
// informational; everything else is a pure function of (config, seeds).
struct RunRecord {
  nlohmann::json config;
  std::map<std::string, double> metrics;
  std::map<std::string, Series> curves;
  std::vector<std::uint64_t> seeds;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;  // UTC, ISO 8601
  std::string code_version;
  // Set when the run leaves the regime the sampling guarantees cover
  // (inverse temperature 0.5 or above). The run still executes; the flag
  // travels with the artifact so downstream readers can filter.
  bool out_of_theory = false;
};

// Disorder-chaos study: how fast two Gibbs laws decorrelate as their
// coupling matrices are rotated apart. overlap_sq[i] is the disorder average
// of E[(<x0,xs>/n)^2] with x0, xs drawn independently from the two exact
// laws at s = s_grid[i]; w2_lower[i] is the matching assignment-based
// transport cost between exact-sample batches. Standard errors are
// bootstrap-over-disorder-draws.
struct ChaosResult {
  std::vector<double> s_grid;
  std::vector<double> overlap_sq;
  std::vector<double> overlap_se;
  std::vector<double> w2_lower;
  std::vector<double> w2_se;
  double beta = 0.0;
  RunRecord record;
};

// Wall-clock scaling of one localization run across problem sizes.
// `seconds[i]` is the best of `repeats` timed runs at n = sizes[i] (best, to
// suppress scheduler noise); `matvecs_per_run` counts coupling-matrix
// multiplies per run, a pure function of the solver settings; `slope` is the
// least-squares slope of log-seconds against log-n, absent for a
// single-point grid.
struct BenchResult {
  std::vector<Eigen::Index> sizes;
  std::vector<double> seconds;
  long matvecs_per_run = 0;
  std::optional<double> slope;
  RunRecord record;
};

// Measures decorrelation between the exact Gibbs laws of a disorder pair
// interpolated to each s in s_grid, averaged over `disorder_samples`
// independent pairs. Exact enumeration bounds n at 16. The squared-overlap
// values come from exact second moments (no replica sampling noise); the
// transport curve uses exact-sample batches. The record carries curves
// "overlap_sq", "w2_lower" and the exploratory ratio curve "decorrelation"
// (overlap_sq(s) relative to the first grid entry).
ChaosResult run_chaos(double beta, Eigen::Index n,
                      const std::vector<double>& s_grid, int disorder_samples,
                      std::uint64_t seed);

// Perturbation response of the full sampler. Runs coupled replica batches on
// disorder pairs interpolated to each s in s_grid (shared driving noise and
// rounding) and on a fixed matrix across beta_grid (again shared noise), and
// records the mean squared coordinate displacement per site. Curves:
// "disorder" over s_grid, "temperature" over beta_grid. The s = 0 and
// beta' = beta entries are exactly zero because the coupled runs are
// bitwise identical.
RunRecord run_stability(double beta, Eigen::Index n,
                        const std::vector<double>& s_grid,
                        const std::vector<double>& beta_grid, int replicas,
                        std::uint64_t seed);

// Sampling-quality sweep over temperatures: for each beta, transport cost of
// the localization sampler against fresh exact batches, next to a uniform
// control and an exact-vs-exact baseline (the resolution floor of the
// empirical estimate). Replicas are split into chunks, each chunk matched
// against its own exact batch; error bars are bootstrap-over-chunks, which
// needs at least two chunks (replicas >= 400). `config_base` supplies the
// discretization and solver settings; its n, beta, and seed fields are
// overridden by the sweep. Curves: "w2_algorithm", "w2_control",
// "w2_exact_baseline", all over beta_grid.
RunRecord run_sampling_quality(const std::vector<double>& beta_grid,
                               Eigen::Index n, int replicas,
                               const sampler::RunConfig& config_base,
                               std::uint64_t seed);

// Times one localization run per grid size (after one untimed warmup each)
// and fits the log-log scaling slope. `config_base` fixes everything except
// n. Timings live in the record's "seconds" curve and the slope in the
// "loglog_slope" metric; both are measurements of the clock, not of the
// algorithm, so they are the one documented exception to the
// bitwise-reproducible-metrics rule. The operation count is reproducible.
BenchResult run_bench(const std::vector<Eigen::Index>& n_grid,
                      const sampler::RunConfig& config_base, int repeats = 3);

// Lossless JSON round trip for records. Doubles are emitted in shortest
// round-trip decimal form (up to 17 significant digits). Writing rejects
// non-finite metric or curve values, naming the offending key (for example
// "curves.disorder.y"); reading rejects unknown schema versions before
// touching any payload field.
void write_record(const RunRecord& record, const std::string& path);
RunRecord read_record(const std::string& path);

// Writes one "<name>.csv" per curve into `dir` (created if missing), header
// "x,y,se", one row per point, shortest round-trip formatting.
void export_csv(const RunRecord& record, const std::string& dir);

// Nonparametric bootstrap standard error of the mean of `values`: 1000
// resamples with replacement, deterministic per seed. A single value (or an
// empty list) has no spread to resample, so the result is zero.
double bootstrap_se(const std::vector<double>& values, std::uint64_t seed);

}  // namespace skloc::experiments
