// The localization sampler: the Euler drive, randomized rounding, replica
// batches, checkpointing, disorder-coupled runs, persistence, and the
// distributional probes (martingale, covariance decay, rounding
// contraction, end-to-end quality against the enumeration oracle).
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "json.hpp"
#include "skloc/disorder.hpp"
#include "skloc/errors.hpp"
#include "skloc/oracle.hpp"
#include "skloc/parallel.hpp"
#include "skloc/rng.hpp"
#include "skloc/sampler.hpp"

using namespace skloc;

namespace {

// Empirical batches as column matrices for the transport solver.
Matrix columns_of(const std::vector<Vector>& draws) {
  const Eigen::Index n = draws.front().size();
  Matrix out(n, static_cast<Eigen::Index>(draws.size()));
  for (std::size_t j = 0; j < draws.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = draws[j];
  return out;
}

sampler::EmpiricalSample head_of(const sampler::EmpiricalSample& s,
                                 std::size_t count) {
  sampler::EmpiricalSample out;
  out.spins.assign(s.spins.begin(), s.spins.begin() + count);
  out.seeds.assign(s.seeds.begin(), s.seeds.begin() + count);
  return out;
}

}  // namespace

TEST_CASE("configuration validation") {
  auto cfg = sampler::make_config(0.3, 20, 0.05, 10);
  cfg.validate();  // the constructor output is valid as-is
  CHECK(cfg.schedule.entries.size() == 11);
  CHECK(cfg.schedule.entries[0].q_star == 0.0);

  auto expect_field = [&](auto mutate, const char* field) {
    auto bad = cfg;
    mutate(bad);
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains(field),
                         ValidationError);
  };
  expect_field([](sampler::RunConfig& c) { c.beta = -0.1; }, "beta");
  expect_field([](sampler::RunConfig& c) { c.n = 0; }, "n");
  expect_field([](sampler::RunConfig& c) { c.delta = 0.0; }, "delta");
  expect_field([](sampler::RunConfig& c) { c.big_l = -1; }, "big_l");
  expect_field([](sampler::RunConfig& c) { c.k_amp = 0; }, "k_amp");
  expect_field([](sampler::RunConfig& c) { c.k_ngd = -1; }, "k_ngd");
  expect_field([](sampler::RunConfig& c) { c.eta = 0.0; }, "eta");
  expect_field([](sampler::RunConfig& c) { c.schedule.beta = 0.4; },
               "schedule");
  expect_field([](sampler::RunConfig& c) { c.schedule.delta = 0.1; },
               "schedule");
  expect_field([](sampler::RunConfig& c) { c.big_l = 99; }, "schedule");
}

TEST_CASE("localization drive") {
  SUBCASE("zero steps record only the zero field") {
    const auto a = disorder::sample_goe(6, 501);
    const auto cfg = sampler::make_config(0.3, 6, 0.05, 0, 5, 5);
    const auto tr = sampler::localize(a, cfg);
    REQUIRE(tr.y_path.size() == 1);
    CHECK(tr.y_path[0] == Vector::Zero(6));
    CHECK(tr.increments.empty());
    CHECK(tr.m_path.size() == 1);
  }

  SUBCASE("stored fields satisfy the update identity bitwise") {
    const auto a = disorder::sample_goe(20, 502);
    const auto cfg = sampler::make_config(0.35, 20, 0.05, 30, 10, 15);
    const auto tr = sampler::localize(a, cfg);
    REQUIRE(tr.y_path.size() == 31);
    REQUIRE(tr.m_path.size() == 31);
    REQUIRE(tr.increments.size() == 30);
    const double sqrt_delta = std::sqrt(cfg.delta);
    for (std::size_t l = 0; l < 30; ++l) {
      const Vector expected = (tr.y_path[l] + tr.m_path[l].values * cfg.delta +
                               sqrt_delta * tr.increments[l])
                                  .eval();
      CHECK(tr.y_path[l + 1] == expected);
    }
  }

  SUBCASE("replay is bitwise reproducible") {
    const auto a = disorder::sample_goe(15, 503);
    const auto cfg = sampler::make_config(0.4, 15, 0.05, 12, 8, 10);
    const auto t1 = sampler::localize(a, cfg);
    const auto t2 = sampler::localize(a, cfg);
    for (std::size_t l = 0; l < t1.y_path.size(); ++l)
      CHECK(t1.y_path[l] == t2.y_path[l]);
    for (std::size_t l = 0; l < t1.m_path.size(); ++l)
      CHECK(t1.m_path[l].values == t2.m_path[l].values);
  }

  SUBCASE("decoupled coordinates: mean is tanh of the field") {
    const auto a = disorder::sample_goe(15, 504);
    const auto cfg = sampler::make_config(0.0, 15, 0.1, 20, 5, 10);
    const auto tr = sampler::localize(a, cfg);
    for (std::size_t l = 0; l < tr.m_path.size(); ++l) {
      const Vector expected = tr.y_path[l].array().tanh().matrix();
      CHECK((tr.m_path[l].values - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("the drive's final mean tracks the exact tilted mean") {
    const auto a = disorder::sample_goe(10, 505);
    const auto cfg = sampler::make_config(0.3, 10, 0.02, 500);
    const auto tr = sampler::localize(a, cfg);
    const auto g = oracle::exact_build(a, tr.y_path.back(), 0.3);
    const Vector exact = oracle::exact_mean(g).values;
    const double mse =
        (tr.m_path.back().values - exact).squaredNorm() / 10.0;
    CHECK(mse <= 0.02);
  }

  SUBCASE("descent divergence reports the drive step") {
    const auto a = disorder::sample_goe(50, 5);
    const auto cfg = sampler::make_config(0.45, 50, 0.05, 40, 25, 120, 1.2, 5);
    CHECK_THROWS_AS(sampler::localize(a, cfg), DivergenceError);
    try {
      sampler::localize(a, cfg);
    } catch (const DivergenceError& e) {
      CHECK(e.step == 1);
      CHECK(e.trajectory.size() >= 4);
    }
  }

  SUBCASE("matrix size mismatch is rejected") {
    const auto a = disorder::sample_goe(6, 506);
    const auto cfg = sampler::make_config(0.3, 7, 0.05, 3, 5, 5);
    CHECK_THROWS_WITH_AS(sampler::localize(a, cfg),
                         doctest::Contains("matrix"), ValidationError);
  }
}

TEST_CASE("randomized rounding") {
  SUBCASE("near-boundary means round to their sign") {
    Vector m = Vector::Constant(100, 1.0 - 1e-12);
    m.head(50) *= -1.0;
    const Vector x = sampler::randomized_round(MagnetizationVector(m), 601);
    CHECK(x.head(50) == Vector::Constant(50, -1.0));
    CHECK(x.tail(50) == Vector::Constant(50, 1.0));
  }

  SUBCASE("zero mean rounds to fair coins") {
    const Eigen::Index n = 4;
    const MagnetizationVector m(Vector::Zero(n));
    Vector sum = Vector::Zero(n);
    for (std::uint64_t rep = 0; rep < 100000; ++rep)
      sum += sampler::randomized_round(m, 602 + rep);
    CHECK((sum / 1e5).cwiseAbs().maxCoeff() <= 0.01);
  }

  SUBCASE("a 0.6 coordinate hits +1 at rate 0.8") {
    Vector mv(4);
    mv << 0.6, -0.2, 0.1, 0.4;
    const MagnetizationVector m(mv);
    std::int64_t plus = 0;
    for (std::uint64_t rep = 0; rep < 100000; ++rep)
      plus += sampler::randomized_round(m, 700000 + rep)[0] > 0.0;
    CHECK(std::abs(static_cast<double>(plus) / 1e5 - 0.8) <= 0.005);
  }

  SUBCASE("identical seeds give identical roundings; boundary rejected") {
    Vector mv(5);
    mv << 0.3, -0.7, 0.0, 0.9, -0.1;
    const MagnetizationVector m(mv);
    CHECK(sampler::randomized_round(m, 603) ==
          sampler::randomized_round(m, 603));
    Vector bad = mv;
    bad[2] = 1.0;
    CHECK_THROWS_WITH_AS(
        sampler::randomized_round(MagnetizationVector(bad), 604),
        doctest::Contains("m"), ValidationError);
  }
}

TEST_CASE("replica batches") {
  SUBCASE("free spins average to zero") {
    const auto a = disorder::sample_goe(8, 611);
    const auto cfg = sampler::make_config(0.0, 8, 0.1, 5, 2, 2, 0.15, 611);
    const auto batch = sampler::sample(a, cfg, 10000);
    REQUIRE(batch.spins.size() == 10000);
    Vector sum = Vector::Zero(8);
    for (const Vector& x : batch.spins) {
      sum += x;
      CHECK(x.cwiseAbs().maxCoeff() == 1.0);
    }
    CHECK((sum / 1e4).cwiseAbs().maxCoeff() <= 0.05);
    CHECK(batch.config->big_l == 5);
  }

  SUBCASE("batches are deterministic and worker-count independent") {
    const auto a = disorder::sample_goe(12, 612);
    const auto cfg = sampler::make_config(0.4, 12, 0.05, 6, 6, 8, 0.15, 612);
    const auto b1 = sampler::sample(a, cfg, 9);
    set_thread_count(3);
    const auto b2 = sampler::sample(a, cfg, 9);
    set_thread_count(0);
    REQUIRE(b1.spins.size() == b2.spins.size());
    for (std::size_t r = 0; r < b1.spins.size(); ++r) {
      CHECK(b1.spins[r] == b2.spins[r]);
      CHECK(b1.seeds[r] == b2.seeds[r]);
    }
  }

  SUBCASE("replica 0 rounds the trajectory's final mean") {
    const auto a = disorder::sample_goe(10, 613);
    const auto cfg = sampler::make_config(0.3, 10, 0.05, 8, 6, 8, 0.15, 613);
    const auto batch = sampler::sample(a, cfg, 3);
    const auto tr = sampler::localize(a, cfg);
    CHECK(batch.spins[0] ==
          sampler::randomized_round(tr.m_path.back(), batch.seeds[0]));
  }

  SUBCASE("a checkpoint reproduces the shorter run exactly") {
    const auto a = disorder::sample_goe(20, 614);
    const auto cfg7 = sampler::make_config(0.35, 20, 0.05, 7, 5, 6, 0.15, 614);
    const auto cfg3 = sampler::make_config(0.35, 20, 0.05, 3, 5, 6, 0.15, 614);
    const auto snaps = sampler::sample_with_checkpoints(a, cfg7, 5, {0, 3, 7});
    REQUIRE(snaps.size() == 3);
    const auto direct3 = sampler::sample(a, cfg3, 5);
    const auto direct7 = sampler::sample(a, cfg7, 5);
    for (std::size_t r = 0; r < 5; ++r) {
      CHECK(snaps[1].spins[r] == direct3.spins[r]);
      CHECK(snaps[1].seeds[r] == direct3.seeds[r]);
      CHECK(snaps[2].spins[r] == direct7.spins[r]);
      CHECK(snaps[2].seeds[r] == direct7.seeds[r]);
    }
    CHECK(snaps[0].config->big_l == 0);
    CHECK(snaps[1].config->big_l == 3);
  }

  SUBCASE("checkpoint and replica validation") {
    const auto a = disorder::sample_goe(6, 615);
    const auto cfg = sampler::make_config(0.3, 6, 0.05, 4, 5, 5, 0.15, 615);
    CHECK_THROWS_WITH_AS(sampler::sample_with_checkpoints(a, cfg, 2, {}),
                         doctest::Contains("checkpoint_steps"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(sampler::sample_with_checkpoints(a, cfg, 2, {2, 2}),
                         doctest::Contains("checkpoint_steps"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(sampler::sample_with_checkpoints(a, cfg, 2, {3, 1}),
                         doctest::Contains("checkpoint_steps"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(sampler::sample_with_checkpoints(a, cfg, 2, {5}),
                         doctest::Contains("checkpoint_steps"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(sampler::sample(a, cfg, 0),
                         doctest::Contains("replicas"), ValidationError);
  }

  SUBCASE("uniform control batch") {
    const auto u = sampler::uniform_sample(8, 10000, 616);
    Vector sum = Vector::Zero(8);
    for (const Vector& x : u.spins) sum += x;
    CHECK((sum / 1e4).cwiseAbs().maxCoeff() <= 0.05);
    CHECK(!u.config.has_value());
    const auto v = sampler::uniform_sample(8, 10000, 616);
    CHECK(u.spins[17] == v.spins[17]);
    CHECK_THROWS_WITH_AS(sampler::uniform_sample(0, 5, 1),
                         doctest::Contains("n"), ValidationError);
    CHECK_THROWS_WITH_AS(sampler::uniform_sample(5, 0, 1),
                         doctest::Contains("replicas"), ValidationError);
  }
}

TEST_CASE("disorder-coupled runs") {
  SUBCASE("zero perturbation gives bitwise-identical outputs") {
    const auto path = disorder::sample_path(30, 621);
    const auto cfg = sampler::make_config(0.3, 30, 0.05, 8, 6, 8, 0.15, 621);
    const auto [lhs, rhs] = sampler::coupled_pair(path, 0.0, cfg, 3);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(lhs.spins[r] == rhs.spins[r]);
      CHECK(lhs.seeds[r] == rhs.seeds[r]);
    }
  }

  SUBCASE("free dynamics ignore the matrix entirely") {
    const auto path = disorder::sample_path(12, 622);
    const auto cfg = sampler::make_config(0.0, 12, 0.1, 6, 3, 3, 0.15, 622);
    const auto [lhs, rhs] = sampler::coupled_pair(path, 1.0, cfg, 4);
    for (std::size_t r = 0; r < 4; ++r) CHECK(lhs.spins[r] == rhs.spins[r]);
  }

  SUBCASE("output sensitivity grows with the perturbation") {
    const auto path = disorder::sample_path(500, 623);
    const auto cfg = sampler::make_config(0.3, 500, 0.05, 10, 10, 10, 0.15, 623);
    std::vector<double> dist;
    for (const double s : {0.01, 0.05, 0.2}) {
      const auto [lhs, rhs] = sampler::coupled_pair(path, s, cfg, 20);
      double acc = 0.0;
      for (std::size_t r = 0; r < 20; ++r)
        acc += (lhs.spins[r] - rhs.spins[r]).squaredNorm() / 500.0;
      dist.push_back(acc / 20.0);
    }
    CHECK(dist[0] <= dist[1]);
    CHECK(dist[1] <= dist[2]);
  }

  SUBCASE("parameter coupling shares noise and validates") {
    const auto a = disorder::sample_goe(25, 624);
    const auto cfg_a = sampler::make_config(0.3, 25, 0.05, 6, 5, 6, 0.15, 624);
    const auto cfg_b = sampler::make_config(0.31, 25, 0.05, 6, 5, 6, 0.15, 624);
    const auto [lhs, rhs] =
        sampler::coupled_temperature_pair(a, cfg_a, cfg_a, 3);
    for (std::size_t r = 0; r < 3; ++r) CHECK(lhs.spins[r] == rhs.spins[r]);
    const auto [lo, hi] = sampler::coupled_temperature_pair(a, cfg_a, cfg_b, 3);
    CHECK(lo.spins.size() == 3);  // nearby temperatures both complete
    CHECK(hi.spins.size() == 3);

    auto bad_seed = cfg_b;
    bad_seed.seed = 9;
    CHECK_THROWS_WITH_AS(
        sampler::coupled_temperature_pair(a, cfg_a, bad_seed, 2),
        doctest::Contains("config_b"), ValidationError);
    const auto cfg_n = sampler::make_config(0.3, 10, 0.05, 6, 5, 6, 0.15, 624);
    CHECK_THROWS_WITH_AS(sampler::coupled_temperature_pair(a, cfg_a, cfg_n, 2),
                         doctest::Contains("config_b"), ValidationError);
    const auto path = disorder::sample_path(25, 625);
    CHECK_THROWS_WITH_AS(sampler::coupled_pair(path, 1.5, cfg_a, 2),
                         doctest::Contains("s"), ValidationError);
  }
}

TEST_CASE("persistence round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "skloc_test_io";
  std::filesystem::create_directories(dir);
  const std::string json_path = (dir / "batch.json").string();

  const auto a = disorder::sample_goe(11, 631);
  const auto cfg = sampler::make_config(0.3, 11, 0.05, 4, 5, 6, 0.15, 631);
  const auto batch = sampler::sample(a, cfg, 7);
  sampler::save_sample(batch, json_path);

  SUBCASE("everything survives bitwise") {
    const auto back = sampler::load_sample(json_path);
    REQUIRE(back.spins.size() == 7);
    for (std::size_t r = 0; r < 7; ++r) {
      CHECK(back.spins[r] == batch.spins[r]);
      CHECK(back.seeds[r] == batch.seeds[r]);
    }
    REQUIRE(back.config.has_value());
    CHECK(back.config->beta == cfg.beta);
    CHECK(back.config->delta == cfg.delta);
    CHECK(back.config->big_l == cfg.big_l);
    CHECK(back.config->seed == cfg.seed);
    REQUIRE(back.config->schedule.entries.size() ==
            cfg.schedule.entries.size());
    for (std::size_t l = 0; l < cfg.schedule.entries.size(); ++l)
      CHECK(back.config->schedule.entries[l].q_star ==
            cfg.schedule.entries[l].q_star);
  }

  SUBCASE("a config-free batch round-trips with null config") {
    const auto u = sampler::uniform_sample(5, 4, 632);
    const std::string p2 = (dir / "uniform.json").string();
    sampler::save_sample(u, p2);
    const auto back = sampler::load_sample(p2);
    CHECK(!back.config.has_value());
    for (std::size_t r = 0; r < 4; ++r) CHECK(back.spins[r] == u.spins[r]);
  }

  SUBCASE("foreign schema versions are refused") {
    std::ifstream in(json_path);
    nlohmann::json j;
    in >> j;
    in.close();
    j["version"] = 999;
    const std::string p3 = (dir / "future.json").string();
    {
      std::ofstream out(p3);
      out << j.dump();
    }
    std::filesystem::copy_file(
        dir / "batch.bits", dir / "future.bits",
        std::filesystem::copy_options::overwrite_existing);
    CHECK_THROWS_AS(sampler::load_sample(p3), SchemaVersionError);
  }

  SUBCASE("a truncated sidecar is rejected") {
    const std::string p4 = (dir / "trunc.json").string();
    std::filesystem::copy_file(
        json_path, p4, std::filesystem::copy_options::overwrite_existing);
    {
      std::ofstream out(dir / "trunc.bits",
                        std::ios::binary | std::ios::trunc);
      out << "xx";
    }
    CHECK_THROWS_WITH_AS(sampler::load_sample(p4), doctest::Contains("bits"),
                         ValidationError);
  }

  SUBCASE("missing file and malformed batches are named") {
    CHECK_THROWS_WITH_AS(sampler::load_sample((dir / "absent.json").string()),
                         doctest::Contains("json_path"), ValidationError);
    sampler::EmpiricalSample bad = batch;
    bad.spins[2][3] = 0.5;
    CHECK_THROWS_WITH_AS(sampler::save_sample(bad, json_path),
                         doctest::Contains("sample"), ValidationError);
  }
}

TEST_CASE("mean process is a martingale under exact continuation") {
  // Given the field at time t, the future of the localization process is
  // the same process restarted from the tilted measure: the field at t+d
  // equals y + d*x' + sqrt(d)*g with x' drawn from the current posterior.
  // Averaging the exact posterior mean over that transition must return
  // the current posterior mean, coordinate by coordinate.
  const Eigen::Index n = 12;
  const double beta = 0.3;
  const auto a = disorder::sample_goe(n, 641);
  const auto prior = oracle::exact_build(a, Vector::Zero(n), beta);
  const int continuations = 2000;

  for (const double t : {0.5, 1.0}) {
    CAPTURE(t);
    // One exact draw of the time-t field via the channel representation.
    SplitRng field = SplitRng(642).split(stream_tag::kField,
                                         static_cast<std::uint64_t>(10 * t));
    const Vector x_star = oracle::exact_sample(prior, 1, 643).spins[0];
    const Vector y_t = t * x_star + std::sqrt(t) * field.gaussian_vector(n);

    const auto posterior = oracle::exact_build(a, y_t, beta);
    const Vector m_t = oracle::exact_mean(posterior).values;

    const double d = 0.5;
    const auto x_next =
        oracle::exact_sample(posterior, continuations,
                             644 + static_cast<std::uint64_t>(10 * t));
    SplitRng noise = SplitRng(645).split(stream_tag::kBrownian,
                                         static_cast<std::uint64_t>(10 * t));
    Vector mean = Vector::Zero(n);
    Vector sq_sum = Vector::Zero(n);
    for (int j = 0; j < continuations; ++j) {
      const Vector y_next =
          y_t + d * x_next.spins[static_cast<std::size_t>(j)] +
          std::sqrt(d) * noise.gaussian_vector(n);
      const Vector m_next =
          oracle::exact_mean(oracle::exact_build(a, y_next, beta)).values;
      mean += m_next;
      sq_sum += m_next.cwiseProduct(m_next);
    }
    mean /= continuations;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double var =
          (sq_sum[i] / continuations - mean[i] * mean[i]) * continuations /
          (continuations - 1);
      const double se = std::sqrt(std::max(var, 0.0) / continuations);
      CHECK(std::abs(mean[i] - m_t[i]) <= 3.0 * se + 1e-9);
    }
  }
}

TEST_CASE("posterior covariance decays like 1/t") {
  // Channel representation: the time-t field is t*x* + sqrt(t)*g. The top
  // eigenvalue of the path-averaged posterior covariance must fall below
  // 1/t, with the Monte Carlo error measured by projecting each path's
  // covariance onto the average's leading eigenvector.
  const Eigen::Index n = 12;
  const double beta = 0.3;
  const auto a = disorder::sample_goe(n, 651);
  const auto prior = oracle::exact_build(a, Vector::Zero(n), beta);
  const int paths = 150;

  for (const double t : {1.0, 2.0, 4.0}) {
    CAPTURE(t);
    const auto draws =
        oracle::exact_sample(prior, paths, 652 + static_cast<std::uint64_t>(t));
    SplitRng noise = SplitRng(653).split(stream_tag::kBrownian,
                                         static_cast<std::uint64_t>(t));
    std::vector<Matrix> covs;
    covs.reserve(static_cast<std::size_t>(paths));
    Matrix avg = Matrix::Zero(n, n);
    for (int p = 0; p < paths; ++p) {
      const Vector y = t * draws.spins[static_cast<std::size_t>(p)] +
                       std::sqrt(t) * noise.gaussian_vector(n);
      covs.push_back(
          oracle::exact_covariance(oracle::exact_build(a, y, beta)));
      avg += covs.back();
    }
    avg /= paths;
    Eigen::SelfAdjointEigenSolver<Matrix> es(avg);
    const double top = es.eigenvalues().maxCoeff();
    Eigen::Index which = 0;
    es.eigenvalues().maxCoeff(&which);
    const Vector v = es.eigenvectors().col(which);
    double sq = 0.0;
    for (const Matrix& c : covs) {
      const double proj = v.dot(c * v);
      sq += (proj - top) * (proj - top);
    }
    const double se = std::sqrt(sq / (paths - 1) / paths);
    CHECK(top <= 1.0 / t + 3.0 * se);
  }
}

TEST_CASE("rounding contracts transport distance") {
  // Coupled drives on slightly perturbed disorder give paired mean laws;
  // rounding both sides with shared uniforms must keep the spin laws at
  // most 2*sqrt(distance) apart, up to Monte Carlo slack.
  const Eigen::Index n = 10;
  const int batch = 400;
  for (std::uint64_t pair = 0; pair < 10; ++pair) {
    CAPTURE(pair);
    const auto path = disorder::sample_path(n, 7000 + pair);
    const auto as = disorder::interpolate(path, 0.1);
    auto cfg = sampler::make_config(0.3, n, 0.05, 12, 8, 8, 0.15, 1);
    Matrix m1(n, batch), m2(n, batch), x1(n, batch), x2(n, batch);
    double paired = 0.0;
    for (int r = 0; r < batch; ++r) {
      cfg.seed = 7100 + pair * 1000 + static_cast<std::uint64_t>(r);
      const auto t1 = sampler::localize(path.a0, cfg);
      const auto t2 = sampler::localize(as, cfg);
      m1.col(r) = t1.m_path.back().values;
      m2.col(r) = t2.m_path.back().values;
      const std::uint64_t shared = 9000 + pair * 1000 +
                                   static_cast<std::uint64_t>(r);
      x1.col(r) = sampler::randomized_round(t1.m_path.back(), shared);
      x2.col(r) = sampler::randomized_round(t2.m_path.back(), shared);
      paired += (m1.col(r) - m2.col(r)).squaredNorm();
    }
    paired /= static_cast<double>(n) * batch;
    const double cm = oracle::w2_empirical_matrices(m1, m2).cost;
    const double cr = oracle::w2_empirical_matrices(x1, x2).cost;
    // Quantitative form: squared spin distance at most twice the root of
    // the paired mean distance, plus rounding-noise slack.
    CHECK(cr <= 2.0 * std::sqrt(paired) + 0.05);
    // Stated form on the optimal-transport values themselves.
    CHECK(std::sqrt(cr) <= 2.0 * std::pow(cm, 0.25) + 0.3);
  }
}

TEST_CASE("end-to-end quality against the enumeration oracle" *
          doctest::timeout(900)) {
  const Eigen::Index n = 10;
  const double beta = 0.3;
  const auto a = disorder::sample_goe(n, 661);
  const auto exact = oracle::exact_build(a, Vector::Zero(n), beta);
  const int m = 2000;
  const auto reference = oracle::exact_sample(exact, m, 662);
  const Matrix ref_cols = columns_of(reference.spins);

  // One drive pass, snapshotting the batch at T = 1 and T = 10.
  const auto cfg = sampler::make_config(beta, n, 0.02, 500, 25, 50, 0.15, 663);
  const auto snaps = sampler::sample_with_checkpoints(a, cfg, m, {50, 500});
  const double w2_t1 =
      oracle::w2_empirical_matrices(columns_of(snaps[0].spins), ref_cols).cost;
  const double w2_t10 =
      oracle::w2_empirical_matrices(columns_of(snaps[1].spins), ref_cols).cost;

  // Longer localization gets closer to the target law.
  CHECK(w2_t10 < w2_t1);

  // Frozen regression bound for the T = 10 batch. Calibration at this exact
  // configuration: observed 0.1634, while two same-law exact batches of this
  // size land at 0.152-0.162 — the drive output is at the empirical floor.
  // The bound is floor + margin; the control at ~0.28 stays far outside it.
  std::printf("[quality] w2(T=1)=%.6f w2(T=10)=%.6f\n", w2_t1, w2_t10);
  CHECK(w2_t10 <= 0.20);

  // The drive beats the iid-sign control.
  const auto control = sampler::uniform_sample(n, m, 664);
  const double w2_control =
      oracle::w2_empirical_matrices(columns_of(control.spins), ref_cols).cost;
  CHECK(w2_t10 < w2_control);

  // Single-site dynamics baseline: comparable quality after many sweeps.
  const auto chains = oracle::glauber_run(a, beta, 10000, 10000, 665);
  const double w2_glauber =
      oracle::w2_empirical_matrices(columns_of(head_of(chains, m).spins),
                                    ref_cols)
          .cost;
  std::printf("[quality] w2(glauber)=%.6f w2(control)=%.6f\n", w2_glauber,
              w2_control);
  CHECK(w2_glauber <= w2_t10 + 0.05);
}
