#include "skloc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <utility>

#include "json.hpp"
#include "skloc/amp.hpp"
#include "skloc/errors.hpp"
#include "skloc/parallel.hpp"
#include "skloc/rng.hpp"
#include "skloc/tap.hpp"

namespace skloc::sampler {

namespace {

// Rounding uniforms for replica r after l drive steps. A pure function of
// (seed, r, l) so coupled runs on different matrices consume identical
// uniforms, and so a checkpoint at step l reproduces the l-step run exactly.
std::uint64_t round_seed(std::uint64_t seed, std::uint64_t r, std::uint64_t l) {
  return SplitRng(seed).split(stream_tag::kRounding, r, l).fingerprint();
}

// One mean evaluation of the drive: message passing from the zero start,
// then descent from the pre-activation it reached, with the overlap
// parameter supplied by the schedule. Result lands in nws.m.
void mean_estimate(const disorder::CouplingMatrix& matrix, const Vector& y,
                   const RunConfig& config, double q, amp::AmpWorkspace& aws,
                   tap::NgdWorkspace& nws) {
  amp::amp_run_ws(matrix, y, config.beta, config.k_amp, aws);
  const tap::TapContext ctx = tap::make_context(matrix, y, q, config.beta);
  tap::ngd_run_ws(ctx, aws.z, config.eta, config.k_ngd, nws);
}

// Runs the Euler drive for one replica, invoking `visit(l, m)` at every
// step count l the caller flagged via `want`. The drive advances
//   y_{l+1} = y_l + m_l * delta + sqrt(delta) * w_{l+1}
// with w_{l+1} from the stream (kBrownian, r, l+1). The final mean (at
// l == big_l) is only computed when someone asked for it; a non-null
// `record` captures the full field/mean/increment history. Descent
// divergence is rethrown with the step index filled in.
template <typename Want, typename Visit>
void run_drive(const disorder::CouplingMatrix& matrix, const RunConfig& config,
               std::uint64_t r, const Want& want, const Visit& visit,
               LocalizationTrajectory* record = nullptr) {
  const Eigen::Index n = config.n;
  const double sqrt_delta = std::sqrt(config.delta);
  const SplitRng root(config.seed);
  amp::AmpWorkspace aws;
  tap::NgdWorkspace nws;
  Vector y = Vector::Zero(n);
  if (record) record->y_path.push_back(y);
  for (int l = 0; l <= config.big_l; ++l) {
    const bool advancing = l < config.big_l;
    if (!advancing && !want(l) && !record) break;
    const double q =
        config.schedule.entries[static_cast<std::size_t>(l)].q_star;
    try {
      mean_estimate(matrix, y, config, q, aws, nws);
    } catch (DivergenceError& e) {
      e.step = l;
      throw;
    }
    if (record) record->m_path.emplace_back(MagnetizationVector(nws.m));
    if (want(l)) visit(l, nws.m);
    if (advancing) {
      const Vector w =
          root.split(stream_tag::kBrownian, r, static_cast<std::uint64_t>(l) + 1)
              .gaussian_vector(n);
      y = (y + nws.m * config.delta + sqrt_delta * w).eval();
      if (record) {
        record->increments.push_back(w);
        record->y_path.push_back(y);
      }
    }
  }
}

void check_matrix(const disorder::CouplingMatrix& matrix,
                  const RunConfig& config) {
  if (matrix.n != config.n)
    throw ValidationError("matrix",
                          "coupling matrix size does not match config.n");
}

void check_replicas(int replicas) {
  if (replicas < 1) throw ValidationError("replicas", "need at least 1");
}

Vector round_with(const MagnetizationVector& m, SplitRng stream) {
  const Eigen::Index n = m.n();
  const Vector u = stream.uniform_vector(n);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = u[i] <= 0.5 * (1.0 + m.values[i]) ? 1.0 : -1.0;
  return x;
}

constexpr int kSampleSchemaVersion = 1;

}  // namespace

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["beta"] = c.beta;
  j["n"] = static_cast<std::int64_t>(c.n);
  j["delta"] = c.delta;
  j["big_l"] = c.big_l;
  j["k_amp"] = c.k_amp;
  j["k_ngd"] = c.k_ngd;
  j["eta"] = c.eta;
  j["seed"] = c.seed;
  j["schedule"] = c.schedule.to_json();
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.beta = j.at("beta").get<double>();
  c.n = static_cast<Eigen::Index>(j.at("n").get<std::int64_t>());
  c.delta = j.at("delta").get<double>();
  c.big_l = j.at("big_l").get<int>();
  c.k_amp = j.at("k_amp").get<int>();
  c.k_ngd = j.at("k_ngd").get<int>();
  c.eta = j.at("eta").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.schedule = se::ScheduleTable::from_json(j.at("schedule"));
  return c;
}

namespace {

std::filesystem::path bits_path_for(const std::string& json_path) {
  std::filesystem::path p(json_path);
  p.replace_extension(".bits");
  return p;
}

}  // namespace

void RunConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ValidationError("beta", "must be finite and >= 0");
  if (n < 1) throw ValidationError("n", "dimension must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ValidationError("delta", "step size must be finite and > 0");
  if (big_l < 0) throw ValidationError("big_l", "step count must be >= 0");
  if (k_amp < 1)
    throw ValidationError("k_amp", "at least one message-passing step");
  if (k_ngd < 0) throw ValidationError("k_ngd", "must be >= 0");
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw ValidationError("eta", "descent step must be finite and > 0");
  if (schedule.beta != beta)
    throw ValidationError("schedule", "schedule built for a different beta");
  if (schedule.delta != delta)
    throw ValidationError("schedule", "schedule built for a different delta");
  if (schedule.big_l < big_l)
    throw ValidationError("schedule", "schedule covers fewer steps than big_l");
  if (schedule.entries.size() != static_cast<std::size_t>(schedule.big_l) + 1)
    throw ValidationError("schedule", "entry count does not match its big_l");
}

RunConfig make_config(double beta, Eigen::Index n, double delta, int big_l,
                      int k_amp, int k_ngd, double eta, std::uint64_t seed,
                      const se::Quadrature& quad) {
  RunConfig c;
  c.beta = beta;
  c.n = n;
  c.delta = delta;
  c.big_l = big_l;
  c.k_amp = k_amp;
  c.k_ngd = k_ngd;
  c.eta = eta;
  c.seed = seed;
  c.schedule = se::build_schedule(beta, delta, std::max(big_l, 1), quad);
  c.validate();
  return c;
}

LocalizationTrajectory localize(const disorder::CouplingMatrix& matrix,
                                const RunConfig& config) {
  config.validate();
  check_matrix(matrix, config);
  LocalizationTrajectory tr;
  tr.y_path.reserve(static_cast<std::size_t>(config.big_l) + 1);
  tr.m_path.reserve(static_cast<std::size_t>(config.big_l) + 1);
  tr.increments.reserve(static_cast<std::size_t>(config.big_l));
  run_drive(
      matrix, config, /*r=*/0, [](int) { return false; },
      [](int, const Vector&) {}, &tr);
  return tr;
}

Vector randomized_round(const MagnetizationVector& m, std::uint64_t seed) {
  if (!m.interior())
    throw ValidationError("m", "magnetization must be strictly inside (-1,1)");
  return round_with(m, SplitRng(seed).split(stream_tag::kRounding));
}

std::vector<EmpiricalSample> sample_with_checkpoints(
    const disorder::CouplingMatrix& matrix, const RunConfig& config,
    int replicas, const std::vector<int>& checkpoint_steps) {
  config.validate();
  check_matrix(matrix, config);
  check_replicas(replicas);
  if (checkpoint_steps.empty())
    throw ValidationError("checkpoint_steps", "need at least one checkpoint");
  for (std::size_t i = 0; i < checkpoint_steps.size(); ++i) {
    if (checkpoint_steps[i] < 0 || checkpoint_steps[i] > config.big_l)
      throw ValidationError("checkpoint_steps", "outside [0, big_l]");
    if (i > 0 && checkpoint_steps[i] <= checkpoint_steps[i - 1])
      throw ValidationError("checkpoint_steps", "must be sorted and distinct");
  }

  std::vector<EmpiricalSample> out(checkpoint_steps.size());
  for (std::size_t ci = 0; ci < out.size(); ++ci) {
    out[ci].spins.resize(static_cast<std::size_t>(replicas));
    out[ci].seeds.resize(static_cast<std::size_t>(replicas));
    RunConfig snap = config;  // the batch an l-step run would have produced
    snap.big_l = checkpoint_steps[ci];
    out[ci].config = std::move(snap);
  }

  // The drive is a filtration: steps past the last checkpoint cannot affect
  // anything returned, so trim the run there.
  RunConfig drive_cfg = config;
  drive_cfg.big_l = checkpoint_steps.back();

  parallel_for(replicas, [&](std::int64_t r) {
    const auto ur = static_cast<std::uint64_t>(r);
    auto next = checkpoint_steps.begin();
    run_drive(
        matrix, drive_cfg, ur,
        [&](int l) { return next != checkpoint_steps.end() && *next == l; },
        [&](int l, const Vector& m) {
          const auto ci =
              static_cast<std::size_t>(next - checkpoint_steps.begin());
          const std::uint64_t rs =
              round_seed(config.seed, ur, static_cast<std::uint64_t>(l));
          out[ci].spins[static_cast<std::size_t>(r)] =
              randomized_round(MagnetizationVector(m), rs);
          out[ci].seeds[static_cast<std::size_t>(r)] = rs;
          ++next;
        });
  });
  return out;
}

EmpiricalSample sample(const disorder::CouplingMatrix& matrix,
                       const RunConfig& config, int replicas) {
  auto batches = sample_with_checkpoints(matrix, config, replicas,
                                         {config.big_l});
  return std::move(batches.front());
}

EmpiricalSample uniform_sample(Eigen::Index n, int replicas,
                               std::uint64_t seed) {
  if (n < 1) throw ValidationError("n", "dimension must be >= 1");
  check_replicas(replicas);
  EmpiricalSample out;
  out.spins.resize(static_cast<std::size_t>(replicas));
  out.seeds.resize(static_cast<std::size_t>(replicas));
  parallel_for(replicas, [&](std::int64_t r) {
    SplitRng stream = SplitRng(seed).split(stream_tag::kUniformControl,
                                           static_cast<std::uint64_t>(r));
    out.seeds[static_cast<std::size_t>(r)] = stream.fingerprint();
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = stream.next_sign();
    out.spins[static_cast<std::size_t>(r)] = std::move(x);
  });
  return out;
}

std::pair<EmpiricalSample, EmpiricalSample> coupled_pair(
    const disorder::DisorderPath& path, double s, const RunConfig& config,
    int replicas) {
  if (!(s >= 0.0 && s <= 1.0))
    throw ValidationError("s", "interpolation parameter must lie in [0, 1]");
  config.validate();
  check_matrix(path.a0, config);
  check_replicas(replicas);
  const disorder::CouplingMatrix as = disorder::interpolate(path, s);
  // Same config (hence same Brownian and rounding streams) on both
  // endpoints; every kernel below is sequential per replica, so the two
  // runs see identical floating-point reduction orders by construction.
  EmpiricalSample lhs = sample(path.a0, config, replicas);
  EmpiricalSample rhs = sample(as, config, replicas);
  return {std::move(lhs), std::move(rhs)};
}

std::pair<EmpiricalSample, EmpiricalSample> coupled_temperature_pair(
    const disorder::CouplingMatrix& matrix, const RunConfig& config_a,
    const RunConfig& config_b, int replicas) {
  config_a.validate();
  config_b.validate();
  if (config_b.n != config_a.n)
    throw ValidationError("config_b", "coupled runs must share n");
  if (config_b.seed != config_a.seed)
    throw ValidationError("config_b", "coupled runs must share the seed");
  if (config_b.big_l != config_a.big_l)
    throw ValidationError("config_b", "coupled runs must share big_l");
  check_matrix(matrix, config_a);
  check_replicas(replicas);
  EmpiricalSample lhs = sample(matrix, config_a, replicas);
  EmpiricalSample rhs = sample(matrix, config_b, replicas);
  return {std::move(lhs), std::move(rhs)};
}

void save_sample(const EmpiricalSample& sample, const std::string& json_path) {
  if (sample.spins.empty())
    throw ValidationError("sample", "nothing to save: no replicas");
  const Eigen::Index n = sample.spins.front().size();
  for (const Vector& x : sample.spins) {
    if (x.size() != n)
      throw ValidationError("sample", "replicas have inconsistent sizes");
    for (Eigen::Index i = 0; i < n; ++i)
      if (x[i] != 1.0 && x[i] != -1.0)
        throw ValidationError("sample", "spins must be exactly +1 or -1");
  }
  if (sample.seeds.size() != sample.spins.size())
    throw ValidationError("sample", "one seed per replica required");

  const std::filesystem::path bits_path = bits_path_for(json_path);
  const std::size_t replicas = sample.spins.size();
  const std::size_t total = replicas * static_cast<std::size_t>(n);
  std::vector<unsigned char> packed((total + 7) / 8, 0);
  for (std::size_t r = 0; r < replicas; ++r)
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t bit = r * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(i);
      if (sample.spins[r][i] > 0.0)
        packed[bit / 8] |= static_cast<unsigned char>(1u << (bit % 8));
    }

  nlohmann::json j;
  j["schema"] = "skloc.sample";
  j["version"] = kSampleSchemaVersion;
  j["n"] = static_cast<std::int64_t>(n);
  j["replicas"] = static_cast<std::int64_t>(replicas);
  j["seeds"] = sample.seeds;
  j["bits_file"] = bits_path.filename().string();
  j["config"] = sample.config ? config_to_json(*sample.config)
                              : nlohmann::json(nullptr);

  std::ofstream jf(json_path, std::ios::trunc);
  if (!jf) throw ValidationError("json_path", "cannot open for writing");
  jf << j.dump(2) << '\n';
  jf.close();
  std::ofstream bf(bits_path, std::ios::binary | std::ios::trunc);
  if (!bf) throw ValidationError("json_path", "cannot open bits sidecar");
  bf.write(reinterpret_cast<const char*>(packed.data()),
           static_cast<std::streamsize>(packed.size()));
}

EmpiricalSample load_sample(const std::string& json_path) {
  std::ifstream jf(json_path);
  if (!jf) throw ValidationError("json_path", "cannot open for reading");
  nlohmann::json j;
  jf >> j;
  if (j.value("schema", std::string()) != "skloc.sample" ||
      j.value("version", -1) != kSampleSchemaVersion)
    throw SchemaVersionError("unsupported sample schema/version in " +
                             json_path);

  EmpiricalSample out;
  const auto n = static_cast<Eigen::Index>(j.at("n").get<std::int64_t>());
  const auto replicas =
      static_cast<std::size_t>(j.at("replicas").get<std::int64_t>());
  out.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (out.seeds.size() != replicas)
    throw ValidationError("seeds", "seed count does not match replicas");
  if (!j.at("config").is_null()) {
    out.config = config_from_json(j.at("config"));
    out.config->validate();
  }

  const std::filesystem::path bits_path = bits_path_for(json_path);
  std::ifstream bf(bits_path, std::ios::binary);
  if (!bf) throw ValidationError("bits", "cannot open sidecar " +
                                             bits_path.string());
  std::vector<unsigned char> packed((std::istreambuf_iterator<char>(bf)),
                                    std::istreambuf_iterator<char>());
  const std::size_t total = replicas * static_cast<std::size_t>(n);
  if (packed.size() != (total + 7) / 8)
    throw ValidationError("bits", "sidecar size does not match n * replicas");

  out.spins.resize(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t bit =
          r * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
      x[i] = (packed[bit / 8] >> (bit % 8)) & 1u ? 1.0 : -1.0;
    }
    out.spins[r] = std::move(x);
  }
  return out;
}

}  // namespace skloc::sampler
