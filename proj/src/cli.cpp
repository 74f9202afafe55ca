#include "skloc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "json.hpp"
#include "skloc/disorder.hpp"
#include "skloc/errors.hpp"
#include "skloc/experiments.hpp"
#include "skloc/oracle.hpp"
#include "skloc/parallel.hpp"
#include "skloc/rng.hpp"
#include "skloc/sampler.hpp"
#include "skloc/state_evolution.hpp"
#include "skloc/version.hpp"

namespace skloc::cli {

namespace {

// Config reader accepting both formats: files whose first byte is '{' parse
// as JSON (so a RunRecord's stored config object can be re-fed verbatim via
// --config), everything else goes through the stock TOML reader. Nested
// JSON objects flatten to sectioned items; keys that match no flag are
// ignored by the ignore-extras mode each command runs with.
class JsonOrTomlConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    input >> std::ws;
    if (input.peek() != '{') return CLI::ConfigTOML::from_config(input);
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") +
                           e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten({}, j, items);
    return items;
  }

 private:
  static void flatten(const std::vector<std::string>& parents,
                      const nlohmann::json& j,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto deeper = parents;
        deeper.push_back(key);
        flatten(deeper, value, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
};

// Flags shared by every command: the worker-pool override plus config-file
// support with flags-beat-file merging.
void add_common(CLI::App& app, int& threads) {
  app.add_option("--threads", threads,
                 "worker pool size (0 = SKLOC_THREADS env or logical cores)")
      ->capture_default_str();
  app.set_config("--config", "",
                 "TOML or JSON parameter file (flags take precedence)");
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());
  app.allow_config_extras(CLI::config_extras_mode::ignore_all);
}

// Parses `rest` with `app`, then runs `body`, mapping every failure mode to
// the exit-code contract: 0 success (including --help), 2 bad configuration,
// 1 runtime failure.
int run_with(CLI::App& app, const std::vector<std::string>& rest,
             const std::function<int()>& body) {
  try {
    std::vector<std::string> reversed(rest.rbegin(), rest.rend());
    app.parse(std::move(reversed));
    return body();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help and version land here as successes
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration - " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

// The one merged-config line every run prints before doing work, so logs
// always show the effective parameters after file/flag/default merging.
void echo_config(nlohmann::json body) {
  body["threads"] = thread_count();
  std::cout << "config " << body.dump() << "\n";
}

std::filesystem::path curves_dir_for(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension("");
  p += ".curves";
  return p;
}

void write_outputs(const experiments::RunRecord& record,
                   const std::string& out) {
  experiments::write_record(record, out);
  std::cout << "wrote " << out << "\n";
  const auto dir = curves_dir_for(out);
  experiments::export_csv(record, dir.string());
  std::cout << "wrote " << dir.string() << "/ (" << record.curves.size()
            << " curve files)\n";
  if (record.out_of_theory)
    std::cout << "note: run flagged out_of_theory (inverse temperature >= "
                 "0.5 somewhere in the grid)\n";
}

// ---------------------------------------------------------------------------
// verify: a battery of oracle self-checks, each reduced to a scalar `value`
// that must not exceed `bound`. Checks with exact-arithmetic guarantees use
// a zero bound; statistical ones use generous multiples of their standard
// errors so a correct build never trips them.

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

VerifyCheck make_check(std::string name, double value, double bound) {
  VerifyCheck c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.pass = value <= bound;
  return c;
}

Vector state_from_bits(std::uint64_t bits, Eigen::Index n) {
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = (bits >> i) & 1u ? 1.0 : -1.0;
  return x;
}

std::vector<VerifyCheck> run_verify_battery(Eigen::Index n,
                                            std::uint64_t seed) {
  std::vector<VerifyCheck> checks;
  const SplitRng root(seed);
  const double beta = 0.3;

  {  // Disorder construction: symmetric by construction, entry scale 1/n.
    const Eigen::Index big = 200;
    const auto a = disorder::sample_goe(
        big, root.split(stream_tag::kProbe, 1).fingerprint());
    checks.push_back(make_check(
        "goe_symmetry",
        (a.entries - a.entries.transpose()).cwiseAbs().maxCoeff(), 0.0));
    double sumsq = 0.0;
    for (Eigen::Index i = 0; i < big; ++i)
      for (Eigen::Index j = i + 1; j < big; ++j)
        sumsq += a.entries(i, j) * a.entries(i, j);
    const double scaled =
        sumsq / (static_cast<double>(big * (big - 1)) / 2.0) *
        static_cast<double>(big);
    checks.push_back(make_check("goe_offdiag_variance_times_n",
                                std::abs(scaled - 1.0), 0.1));
  }

  const auto matrix =
      disorder::sample_goe(n, root.split(stream_tag::kProbe, 2).fingerprint());
  SplitRng field_stream = root.split(stream_tag::kField, 1);
  const Vector y = 0.3 * field_stream.gaussian_vector(n);
  const auto g = oracle::exact_build(matrix, y, beta);

  {  // Enumerated law: normalized probabilities, unit spin diagonal.
    double total = 0.0;
    for (double p : g.probs) total += p;
    checks.push_back(
        make_check("exact_probability_normalization", std::abs(total - 1.0),
                   1e-12));
    const Matrix m2 = oracle::exact_second_moment(g);
    checks.push_back(make_check(
        "exact_second_moment_diagonal",
        (m2.diagonal() - Vector::Ones(n)).cwiseAbs().maxCoeff(), 1e-12));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(oracle::exact_covariance(g));
    checks.push_back(make_check(
        "exact_covariance_psd", std::max(0.0, -eig.eigenvalues().minCoeff()),
        1e-10));
  }

  {  // Dual route to the mean: coordinate means against field derivatives
     // of the log partition function.
    const auto m = oracle::exact_mean(g);
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector yp = y;
      Vector ym = y;
      yp[i] += h;
      ym[i] -= h;
      const double fd = (oracle::exact_build(matrix, yp, beta).log_z -
                         oracle::exact_build(matrix, ym, beta).log_z) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(fd - m.values[i]));
    }
    checks.push_back(make_check("exact_mean_vs_logz_derivative", worst, 1e-6));
  }

  // The heat-bath dynamics target the untilted measure, so its checks
  // enumerate at zero external field.
  const auto zero_field = oracle::exact_build(matrix, Vector::Zero(n), beta);

  {  // Heat-bath dynamics: detailed balance against the enumerated law.
    SplitRng pick = root.split(stream_tag::kProbe, 3);
    const std::uint64_t mask = (n >= 64) ? ~0ull : ((1ull << n) - 1);
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
      const std::uint64_t bits = pick.next_u64() & mask;
      const auto site = static_cast<Eigen::Index>(pick.next_u64() %
                                                  static_cast<std::uint64_t>(n));
      const Vector x = state_from_bits(bits, n);
      const double p =
          oracle::glauber_flip_probability(matrix, beta, x, site);
      const double pi_up = zero_field.probs[bits | (1ull << site)];
      const double pi_down = zero_field.probs[bits & ~(1ull << site)];
      const double flow = std::abs(pi_up * (1.0 - p) - pi_down * p);
      worst = std::max(worst, flow / std::max(pi_up * (1.0 - p), 1e-300));
    }
    checks.push_back(make_check("glauber_detailed_balance", worst, 1e-10));
  }

  {  // Heat-bath convergence: long chains land at the exact-sampling
     // transport floor (value may be negative; only an excess fails).
    const auto chains = oracle::glauber_run(
        matrix, beta, 2000, 300,
        root.split(stream_tag::kProbe, 4).fingerprint());
    const auto ref = oracle::exact_sample(
        zero_field, 300, root.split(stream_tag::kProbe, 5).fingerprint());
    const auto twin = oracle::exact_sample(
        zero_field, 300, root.split(stream_tag::kProbe, 6).fingerprint());
    const double floor = oracle::w2_empirical(twin, ref).cost;
    const double run = oracle::w2_empirical(chains, ref).cost;
    checks.push_back(make_check("glauber_transport_excess", run - floor, 0.05));
    checks.push_back(
        make_check("w2_self_distance", oracle::w2_empirical(ref, ref).cost,
                   0.0));
    checks.push_back(make_check(
        "w2_symmetry",
        std::abs(oracle::w2_empirical(chains, ref).cost -
                 oracle::w2_empirical(ref, chains).cost),
        1e-12));
  }

  {  // Monte Carlo log-partition estimate against full enumeration,
     // measured in its own reported standard errors.
    const auto est = oracle::log_z_sk_mc(
        matrix, beta, 20000, root.split(stream_tag::kProbe, 7).fingerprint());
    const double exact = oracle::log_z_sk(matrix, beta);
    checks.push_back(make_check(
        "logz_mc_vs_exact_in_se",
        std::abs(est.value - exact) / std::max(est.std_error, 1e-300), 4.0));
  }

  {  // Schedule entries solve their fixed-point equation.
    const auto table = se::build_schedule(beta, 0.05, 40,
                                          se::default_quadrature());
    double worst = 0.0;
    for (const auto& entry : table.entries) {
      const double rhs =
          beta * beta *
          (1.0 - se::mmse(entry.gamma_star + entry.t, se::default_quadrature()));
      worst = std::max(worst, std::abs(entry.gamma_star - rhs));
    }
    checks.push_back(make_check("schedule_fixed_point_residual", worst, 1e-8));
  }

  return checks;
}

int report_verify(Eigen::Index n, std::uint64_t seed, const std::string& out) {
  const auto checks = run_verify_battery(n, seed);
  bool all_pass = true;
  nlohmann::json jchecks = nlohmann::json::array();
  for (const auto& c : checks) {
    all_pass &= c.pass;
    std::printf("%-34s %s  value=%.6g bound=%.6g\n", c.name.c_str(),
                c.pass ? "pass" : "FAIL", c.value, c.bound);
    jchecks.push_back({{"check_name", c.name},
                       {"value", c.value},
                       {"bound", c.bound},
                       {"pass", c.pass}});
  }
  nlohmann::json report{{"schema", "skloc.verify"},
                        {"version", kSchemaVersion},
                        {"n", static_cast<std::int64_t>(n)},
                        {"seed", seed},
                        {"all_pass", all_pass},
                        {"checks", jchecks}};
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw ValidationError("out", "cannot open for writing");
    f << report.dump(2) << "\n";
    std::cout << "wrote " << out << "\n";
  }
  std::cout << (all_pass ? "verify: all checks passed"
                         : "verify: CHECKS FAILED")
            << "\n";
  return all_pass ? 0 : 1;
}

void emit_trajectory_csv(const sampler::LocalizationTrajectory& traj,
                         double delta, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ValidationError("emit-trajectory", "cannot open for writing");
  f << "step,t,y_norm,m_norm\n";
  for (std::size_t l = 0; l < traj.y_path.size(); ++l) {
    f << l << ',' << (static_cast<double>(l) * delta) << ','
      << traj.y_path[l].norm() << ',' << traj.m_path[l].values.norm() << "\n";
  }
}

// ---------------------------------------------------------------------------
// One function per subcommand. Each builds a standalone parser (so its
// --config file applies directly to its own flags), then runs the work.

int cmd_sample(const std::vector<std::string>& rest) {
  CLI::App app{"draw replica batches with the localization sampler"};
  app.name("skloc sample");
  int threads = 0;
  add_common(app, threads);
  double beta = 0.3, delta = 0.05, eta = 0.15;
  std::int64_t n = 100;
  int big_l = 100, k_amp = 25, k_ngd = 50, replicas = 100;
  std::uint64_t seed = 1;
  std::string out, matrix_path, traj_path;
  app.add_option("--beta", beta, "inverse temperature")->capture_default_str();
  app.add_option("--n", n, "system size")->capture_default_str();
  app.add_option("--delta", delta, "Euler step size")->capture_default_str();
  app.add_option("--L,--big_l", big_l, "drive steps (total time L*delta)")
      ->capture_default_str();
  app.add_option("--kamp,--k_amp", k_amp, "message-passing iterations")
      ->capture_default_str();
  app.add_option("--kngd,--k_ngd", k_ngd, "descent iterations")
      ->capture_default_str();
  app.add_option("--eta", eta, "descent step size")->capture_default_str();
  app.add_option("--replicas", replicas, "independent drives")
      ->capture_default_str();
  app.add_option("--seed", seed, "top-level seed (also draws the GOE)")
      ->capture_default_str();
  app.add_option("--out", out, "output JSON path (+ .bits sidecar)")
      ->required();
  app.add_option("--matrix", matrix_path,
                 "read the coupling matrix from a file instead of drawing "
                 "GOE from the seed");
  app.add_option("--emit-trajectory,--emit_trajectory", traj_path,
                 "also write replica-0 field/mean norms as CSV");

  return run_with(app, rest, [&] {
    set_thread_count(threads);
    disorder::CouplingMatrix matrix;
    if (matrix_path.empty()) {
      matrix = disorder::sample_goe(n, seed);
    } else {
      matrix = disorder::load_matrix(matrix_path);
      if (app.count("--n") > 0 && n != matrix.n)
        throw ValidationError("n", "differs from the matrix file size");
      n = matrix.n;
    }
    const auto cfg =
        sampler::make_config(beta, n, delta, big_l, k_amp, k_ngd, eta, seed);
    echo_config({{"subcommand", "sample"},
                 {"beta", beta},
                 {"n", n},
                 {"delta", delta},
                 {"big_l", big_l},
                 {"k_amp", k_amp},
                 {"k_ngd", k_ngd},
                 {"eta", eta},
                 {"replicas", replicas},
                 {"seed", seed},
                 {"matrix", matrix_path.empty() ? "goe(seed)" : matrix_path},
                 {"out", out}});
    if (!traj_path.empty()) {
      emit_trajectory_csv(sampler::localize(matrix, cfg), delta, traj_path);
      std::cout << "wrote " << traj_path << "\n";
    }
    const auto batch = sampler::sample(matrix, cfg, replicas);
    sampler::save_sample(batch, out);
    std::cout << "wrote " << out << " (+ bitset sidecar)\n";
    return 0;
  });
}

int cmd_se_table(const std::vector<std::string>& rest) {
  CLI::App app{"emit the scalar state-evolution schedule as JSON"};
  app.name("skloc se-table");
  int threads = 0;
  add_common(app, threads);
  double beta = 0.3, delta = 0.05;
  int big_l = 100, quad_order = 61;
  std::string out;
  app.add_option("--beta", beta, "inverse temperature")->capture_default_str();
  app.add_option("--delta", delta, "Euler step size")->capture_default_str();
  app.add_option("--L,--big_l", big_l, "drive steps to cover")
      ->capture_default_str();
  app.add_option("--quad-order,--quadrature_order", quad_order,
                 "Gauss-Hermite order")
      ->capture_default_str();
  app.add_option("--out", out, "output JSON path")->required();

  return run_with(app, rest, [&] {
    set_thread_count(threads);
    echo_config({{"subcommand", "se-table"},
                 {"beta", beta},
                 {"delta", delta},
                 {"big_l", big_l},
                 {"quadrature_order", quad_order},
                 {"out", out}});
    const auto schedule =
        se::build_schedule(beta, delta, big_l, se::gauss_hermite(quad_order));
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw ValidationError("out", "cannot open for writing");
    f << schedule.to_json().dump(2) << "\n";
    std::cout << "wrote " << out << "\n";
    return 0;
  });
}

int cmd_verify(const std::vector<std::string>& rest) {
  CLI::App app{"run the oracle self-check battery and report"};
  app.name("skloc verify");
  int threads = 0;
  add_common(app, threads);
  std::int64_t n = 12;
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--n", n, "enumeration size for the exact checks")
      ->capture_default_str();
  app.add_option("--seed", seed, "top-level seed")->capture_default_str();
  app.add_option("--out", out, "also write the JSON report here");

  return run_with(app, rest, [&] {
    set_thread_count(threads);
    echo_config(
        {{"subcommand", "verify"}, {"n", n}, {"seed", seed}, {"out", out}});
    if (n < 2 || n > 16)
      throw ValidationError("n", "exact checks need 2 <= n <= 16");
    return report_verify(n, seed, out);
  });
}

int cmd_chaos(const std::vector<std::string>& rest) {
  CLI::App app{"disorder-chaos study on exact Gibbs laws"};
  app.name("skloc chaos");
  int threads = 0;
  add_common(app, threads);
  double beta = 1.5;
  std::int64_t n = 14;
  std::vector<double> s_grid{0.0, 0.1, 0.3, 0.6};
  int draws = 100;
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--beta", beta, "inverse temperature")->capture_default_str();
  app.add_option("--n", n, "system size (enumeration, <= 16)")
      ->capture_default_str();
  app.add_option("--s-grid,--s_grid", s_grid, "interpolation parameters")
      ->capture_default_str();
  app.add_option("--disorder-samples,--disorder_samples", draws,
                 "independent disorder pairs")
      ->capture_default_str();
  app.add_option("--seed", seed, "top-level seed")->capture_default_str();
  app.add_option("--out", out, "output record path")->required();

  return run_with(app, rest, [&] {
    set_thread_count(threads);
    echo_config({{"subcommand", "chaos"},
                 {"beta", beta},
                 {"n", n},
                 {"s_grid", s_grid},
                 {"disorder_samples", draws},
                 {"seed", seed},
                 {"out", out}});
    const auto result = experiments::run_chaos(beta, n, s_grid, draws, seed);
    write_outputs(result.record, out);
    return 0;
  });
}

int cmd_stability(const std::vector<std::string>& rest) {
  CLI::App app{"sampler displacement under disorder/temperature shifts"};
  app.name("skloc stability");
  int threads = 0;
  add_common(app, threads);
  double beta = 0.3;
  std::int64_t n = 500;
  std::vector<double> s_grid{0.0, 0.01, 0.05, 0.2};
  std::vector<double> beta_grid{0.25, 0.3, 0.35, 0.4};
  int replicas = 20;
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--beta", beta, "reference inverse temperature")
      ->capture_default_str();
  app.add_option("--n", n, "system size")->capture_default_str();
  app.add_option("--s-grid,--s_grid", s_grid, "disorder rotations")
      ->capture_default_str();
  app.add_option("--beta-grid,--beta_grid", beta_grid,
                 "comparison temperatures")
      ->capture_default_str();
  app.add_option("--replicas", replicas, "coupled replica pairs")
      ->capture_default_str();
  app.add_option("--seed", seed, "top-level seed")->capture_default_str();
  app.add_option("--out", out, "output record path")->required();

  return run_with(app, rest, [&] {
    echo_config({{"subcommand", "stability"},
                 {"beta", beta},
                 {"n", n},
                 {"s_grid", s_grid},
                 {"beta_grid", beta_grid},
                 {"replicas", replicas},
                 {"seed", seed},
                 {"out", out},
                 {"threads_pinned", 1}});
    // Coupled runs execute with a single worker so both arms of every
    // comparison see one fixed execution order.
    set_thread_count(1);
    const auto record =
        experiments::run_stability(beta, n, s_grid, beta_grid, replicas, seed);
    set_thread_count(threads);
    write_outputs(record, out);
    return 0;
  });
}

int cmd_quality(const std::vector<std::string>& rest) {
  CLI::App app{"transport cost against exact sampling across temperatures"};
  app.name("skloc quality");
  int threads = 0;
  add_common(app, threads);
  std::vector<double> beta_grid{0.2, 0.3, 0.4};
  std::int64_t n = 10;
  int replicas = 2000;
  double delta = 0.05, eta = 0.15;
  int big_l = 100, k_amp = 25, k_ngd = 50;
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--beta-grid,--beta_grid", beta_grid,
                 "temperatures to sweep")
      ->capture_default_str();
  app.add_option("--n", n, "system size (enumeration, <= 14)")
      ->capture_default_str();
  app.add_option("--replicas", replicas, "sampler draws per beta")
      ->capture_default_str();
  app.add_option("--delta", delta, "Euler step size")->capture_default_str();
  app.add_option("--L,--big_l", big_l, "drive steps")->capture_default_str();
  app.add_option("--kamp,--k_amp", k_amp, "message-passing iterations")
      ->capture_default_str();
  app.add_option("--kngd,--k_ngd", k_ngd, "descent iterations")
      ->capture_default_str();
  app.add_option("--eta", eta, "descent step size")->capture_default_str();
  app.add_option("--seed", seed, "top-level seed")->capture_default_str();
  app.add_option("--out", out, "output record path")->required();

  return run_with(app, rest, [&] {
    set_thread_count(threads);
    echo_config({{"subcommand", "quality"},
                 {"beta_grid", beta_grid},
                 {"n", n},
                 {"replicas", replicas},
                 {"delta", delta},
                 {"big_l", big_l},
                 {"k_amp", k_amp},
                 {"k_ngd", k_ngd},
                 {"eta", eta},
                 {"seed", seed},
                 {"out", out}});
    sampler::RunConfig base;
    base.delta = delta;
    base.big_l = big_l;
    base.k_amp = k_amp;
    base.k_ngd = k_ngd;
    base.eta = eta;
    const auto record =
        experiments::run_sampling_quality(beta_grid, n, replicas, base, seed);
    write_outputs(record, out);
    return 0;
  });
}

int cmd_bench(const std::vector<std::string>& rest) {
  CLI::App app{"wall-clock scaling of one localization run"};
  app.name("skloc bench");
  int threads = 0;
  add_common(app, threads);
  std::vector<std::int64_t> n_grid{500, 1000, 2000};
  int repeats = 3;
  double beta = 0.3, delta = 0.05, eta = 0.15;
  int big_l = 100, k_amp = 25, k_ngd = 50;
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--n-grid,--n_grid", n_grid, "system sizes, ascending")
      ->capture_default_str();
  app.add_option("--repeats", repeats, "timed runs per size (best kept)")
      ->capture_default_str();
  app.add_option("--beta", beta, "inverse temperature")->capture_default_str();
  app.add_option("--delta", delta, "Euler step size")->capture_default_str();
  app.add_option("--L,--big_l", big_l, "drive steps")->capture_default_str();
  app.add_option("--kamp,--k_amp", k_amp, "message-passing iterations")
      ->capture_default_str();
  app.add_option("--kngd,--k_ngd", k_ngd, "descent iterations")
      ->capture_default_str();
  app.add_option("--eta", eta, "descent step size")->capture_default_str();
  app.add_option("--seed", seed, "top-level seed")->capture_default_str();
  app.add_option("--out", out, "output record path (optional)");

  return run_with(app, rest, [&] {
    set_thread_count(threads);
    echo_config({{"subcommand", "bench"},
                 {"n_grid", n_grid},
                 {"repeats", repeats},
                 {"beta", beta},
                 {"delta", delta},
                 {"big_l", big_l},
                 {"k_amp", k_amp},
                 {"k_ngd", k_ngd},
                 {"eta", eta},
                 {"seed", seed}});
    sampler::RunConfig base;
    base.beta = beta;
    base.delta = delta;
    base.big_l = big_l;
    base.k_amp = k_amp;
    base.k_ngd = k_ngd;
    base.eta = eta;
    base.seed = seed;
    const std::vector<Eigen::Index> grid(n_grid.begin(), n_grid.end());
    const auto result = experiments::run_bench(grid, base, repeats);
    for (std::size_t i = 0; i < result.sizes.size(); ++i)
      std::printf("n=%-6ld  %.4f s  (%ld coupling matvecs)\n",
                  static_cast<long>(result.sizes[i]), result.seconds[i],
                  result.matvecs_per_run);
    if (result.slope)
      std::printf("log-log slope: %.3f\n", *result.slope);
    else
      std::printf("log-log slope: absent (single-point grid)\n");
    if (!out.empty()) write_outputs(result.record, out);
    return 0;
  });
}

struct CommandEntry {
  const char* name;
  const char* summary;
  int (*run)(const std::vector<std::string>&);
};

constexpr CommandEntry kCommands[] = {
    {"sample", "draw replica batches with the localization sampler",
     cmd_sample},
    {"se-table", "emit the scalar state-evolution schedule as JSON",
     cmd_se_table},
    {"verify", "run the oracle self-check battery and report", cmd_verify},
    {"chaos", "disorder-chaos study on exact Gibbs laws", cmd_chaos},
    {"stability", "sampler displacement under disorder/temperature shifts",
     cmd_stability},
    {"quality", "transport cost against exact sampling across temperatures",
     cmd_quality},
    {"bench", "wall-clock scaling of one localization run", cmd_bench},
};

void print_usage(std::ostream& os) {
  os << "skloc " << kCodeVersion
     << " - sampling toolkit for mean-field spin-glass Gibbs measures\n"
        "\n"
        "Usage: skloc SUBCOMMAND [OPTIONS]\n"
        "\n"
        "Subcommands:\n";
  for (const auto& c : kCommands) {
    os << "  ";
    os.width(10);
    os << std::left << c.name << "  " << c.summary << "\n";
  }
  os << "\nRun 'skloc SUBCOMMAND --help' for flags and defaults.\n";
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args) {
  if (args.empty()) {
    print_usage(std::cerr);
    std::cerr << "invalid configuration - subcommand: one is required\n";
    return 2;
  }
  const std::string& first = args[0];
  if (first == "--help" || first == "-h" || first == "help") {
    print_usage(std::cout);
    return 0;
  }
  if (first == "--version") {
    std::cout << "skloc " << kCodeVersion << "\n";
    return 0;
  }
  for (const auto& c : kCommands) {
    if (first == c.name)
      return c.run(std::vector<std::string>(args.begin() + 1, args.end()));
  }
  std::cerr << "invalid configuration - subcommand: unknown \"" << first
            << "\"\n";
  print_usage(std::cerr);
  return 2;
}

}  // namespace skloc::cli
