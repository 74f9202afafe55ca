#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skloc/disorder.hpp"
#include "skloc/state_evolution.hpp"
#include "skloc/types.hpp"

namespace skloc::sampler {

// Parameters of one localization run. The schedule must be built for the
// same beta and delta and must cover at least big_l steps; validate()
// enforces every invariant and names the offending field.
struct RunConfig {
  double beta = 0.3;
  Eigen::Index n = 100;
  double delta = 0.05;
  int big_l = 100;    // drive steps; total time T = big_l * delta
  int k_amp = 25;     // message-passing iterations per mean evaluation
  int k_ngd = 50;     // descent iterations per mean evaluation
  double eta = 0.15;  // descent step size
  std::uint64_t seed = 1;
  se::ScheduleTable schedule;

  void validate() const;
};

// Convenience constructor that builds the matching schedule.
RunConfig make_config(double beta, Eigen::Index n, double delta, int big_l,
                      int k_amp = 25, int k_ngd = 50, double eta = 0.15,
                      std::uint64_t seed = 1,
                      const se::Quadrature& quad = se::default_quadrature());

// Full record of one Euler drive: external fields y_0..y_L, the mean
// estimate at every visited field, and the Brownian increments w_1..w_L
// (kept so a run can be replayed or coupled).
struct LocalizationTrajectory {
  std::vector<Vector> y_path;
  std::vector<MagnetizationVector> m_path;
  std::vector<Vector> increments;
};

// A batch of +/-1 draws with their per-replica stream fingerprints and,
// when produced by the localization sampler, the generating configuration.
struct EmpiricalSample {
  std::vector<Vector> spins;
  std::vector<std::uint64_t> seeds;
  std::optional<RunConfig> config;
};

// Runs the drive once (replica index 0) and records the trajectory:
// y_{l+1} = y_l + m_l * delta + sqrt(delta) * w_{l+1}, where m_l is the
// mean estimate at (matrix, y_l) computed with q = q_*(beta, l*delta) from
// the schedule. Descent divergence is rethrown with the step index filled.
LocalizationTrajectory localize(const disorder::CouplingMatrix& matrix,
                                const RunConfig& config);

// Coordinate i becomes +1 exactly when u_i <= (1 + m_i)/2 for iid uniform
// u; conditionally independent coordinates with E[x_i] = m_i.
Vector randomized_round(const MagnetizationVector& m, std::uint64_t seed);

// replicas independent drives, each ending in a rounded spin vector. Noise
// for replica r at step l comes from streams addressed (tag, r, l), so the
// batch is reproducible from config.seed alone and embarrassingly parallel.
EmpiricalSample sample(const disorder::CouplingMatrix& matrix,
                       const RunConfig& config, int replicas);

// One pass that snapshots the would-be output at each requested step count:
// checkpoint l yields exactly the batch that sample() would produce with
// big_l = l (the drive is a filtration — later steps do not disturb earlier
// ones). checkpoint_steps must be sorted, distinct, within [0, big_l].
std::vector<EmpiricalSample> sample_with_checkpoints(
    const disorder::CouplingMatrix& matrix, const RunConfig& config,
    int replicas, const std::vector<int>& checkpoint_steps);

// Batch of iid uniform +/-1 vectors (control baseline for quality curves).
EmpiricalSample uniform_sample(Eigen::Index n, int replicas, std::uint64_t seed);

// Runs the sampler on path endpoints A_0 and A_s with identical noise
// realizations (same Brownian increments, same rounding uniforms): the
// output difference measures sensitivity to the disorder alone.
std::pair<EmpiricalSample, EmpiricalSample> coupled_pair(
    const disorder::DisorderPath& path, double s, const RunConfig& config,
    int replicas);

// Same-noise runs at two parameter sets on one matrix (temperature
// stability); both configs must share n and seed.
std::pair<EmpiricalSample, EmpiricalSample> coupled_temperature_pair(
    const disorder::CouplingMatrix& matrix, const RunConfig& config_a,
    const RunConfig& config_b, int replicas);

// JSON metadata plus a packed bitset sidecar (path with ".bits" appended to
// the JSON path's stem). Bit i of replica r, in replica-major LSB-first
// order, is 1 exactly when spin i of replica r is +1.
void save_sample(const EmpiricalSample& sample, const std::string& json_path);
EmpiricalSample load_sample(const std::string& json_path);

// Full-fidelity JSON snapshot of a RunConfig (schedule included), the format
// embedded in saved samples and experiment records.
nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

}  // namespace skloc::sampler
