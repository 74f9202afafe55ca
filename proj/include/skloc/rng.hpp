#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>

namespace skloc {

using PhiloxKey = std::array<std::uint64_t, 2>;
using PhiloxBlock = std::array<std::uint64_t, 4>;

// One application of the Philox-4x64-10 block function: 10 rounds of
// multiply-hi/lo mixing with Weyl-sequence key bumps. Deterministic, keyed,
// and invertible in the counter, so distinct counters under one key give
// independent-looking 256-bit blocks.
PhiloxBlock philox4x64(const PhiloxKey& key, const PhiloxBlock& counter);

// Counter-based stream with O(1) splitting.
//
// A stream is addressed by a 128-bit key and a 128-bit stream id; draws walk
// a 64-bit block counter under that address. `split` derives a child address
// by encrypting (domain-separated) the child indices under the parent's
// address, so children are statistically independent of the parent and of
// each other, and splitting never consumes parent state: split(a,b,c) gives
// the same child no matter how many numbers the parent has produced. That is
// what makes replica/step-addressed noise reproducible and couplable across
// runs that share a top-level seed.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed);

  // Child stream addressed by up to three indices. Distinct (a, b, c) give
  // independent children; the call is const and repeatable.
  SplitRng split(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  std::uint64_t next_u64();
  double next_double();      // uniform on [0, 1), 53-bit mantissa
  double next_double_pos();  // uniform on (0, 1], safe under log()
  double next_gaussian();    // standard normal via Box-Muller

  Eigen::VectorXd gaussian_vector(Eigen::Index n);
  Eigen::VectorXd uniform_vector(Eigen::Index n);

  // +/-1 with equal probability.
  double next_sign();

  // Stable 64-bit digest of the stream address (not of its position). Used
  // to derive plain integer seeds for records and nested components.
  std::uint64_t fingerprint() const;

 private:
  SplitRng(PhiloxKey key, std::uint64_t id0, std::uint64_t id1);
  void refill();

  PhiloxKey key_;
  std::uint64_t id0_, id1_;   // stream id, occupies counter words 2 and 3
  std::uint64_t block_ = 0;   // counter word 0, incremented per refill
  PhiloxBlock buf_{};
  int buf_pos_ = 4;           // 4 = buffer empty
};

// Fixed purpose tags for stream addressing. Every consumer of randomness
// derives its stream as split(tag, ...), so no two purposes can collide and
// the noise fed to a given (purpose, replica, step) slot is a pure function
// of the top-level seed.
namespace stream_tag {
inline constexpr std::uint64_t kGoe = 1;          // GOE matrix entries
inline constexpr std::uint64_t kPlantedSign = 2;  // planted spin vector
inline constexpr std::uint64_t kPath = 3;         // endpoint seeds of a disorder path
inline constexpr std::uint64_t kBrownian = 4;     // Euler drive increments
inline constexpr std::uint64_t kRounding = 5;     // coordinate rounding uniforms
inline constexpr std::uint64_t kGlauber = 6;      // single-site dynamics
inline constexpr std::uint64_t kExactSample = 7;  // inverse-CDF draws
inline constexpr std::uint64_t kBootstrap = 8;    // resampling indices
inline constexpr std::uint64_t kProbe = 9;        // test perturbations
inline constexpr std::uint64_t kField = 10;       // auxiliary external fields
inline constexpr std::uint64_t kUniformControl = 11;  // iid-sign baseline sampler
inline constexpr std::uint64_t kExperiment = 12;  // per-draw seeds inside experiment loops
}  // namespace stream_tag

}  // namespace skloc
