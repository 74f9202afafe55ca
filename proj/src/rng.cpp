#include "skloc/rng.hpp"

#include <cmath>
#include <numbers>

#include "skloc/errors.hpp"

namespace skloc {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

// Domain constants for key derivation; arbitrary but fixed forever, since
// changing them changes every stream downstream of a seed.
constexpr std::uint64_t kRootTweak = 0x736b6c6f632e726eull;    // "skloc.rn"
constexpr std::uint64_t kSplitDomain = 0x73706c6974ull;        // "split"
constexpr std::uint64_t kFingerprintDomain = 0x66696e6765ull;  // "finge"

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace

PhiloxBlock philox4x64(const PhiloxKey& key, const PhiloxBlock& counter) {
  std::uint64_t k0 = key[0], k1 = key[1];
  std::uint64_t x0 = counter[0], x1 = counter[1], x2 = counter[2],
                x3 = counter[3];
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, x0, hi0, lo0);
    mulhilo(kMul1, x2, hi1, lo1);
    x0 = hi1 ^ x1 ^ k0;
    x1 = lo1;
    x2 = hi0 ^ x3 ^ k1;
    x3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {x0, x1, x2, x3};
}

SplitRng::SplitRng(std::uint64_t seed) : key_{seed, kRootTweak}, id0_(0), id1_(0) {}

SplitRng::SplitRng(PhiloxKey key, std::uint64_t id0, std::uint64_t id1)
    : key_(key), id0_(id0), id1_(id1) {}

SplitRng SplitRng::split(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  // Two block-function applications absorb (parent address, a, b, c) into a
  // fresh 256-bit child address. The first mixes the parent id and the
  // leading index under the parent key; the second mixes the remaining
  // indices under the intermediate key.
  const PhiloxBlock t = philox4x64(key_, {kSplitDomain, a, id0_, id1_});
  const PhiloxBlock u = philox4x64({t[0], t[1]}, {b, c, t[2], t[3]});
  return SplitRng({u[0], u[1]}, u[2], u[3]);
}

void SplitRng::refill() {
  buf_ = philox4x64(key_, {block_, 0, id0_, id1_});
  ++block_;
  buf_pos_ = 0;
}

std::uint64_t SplitRng::next_u64() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

double SplitRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SplitRng::next_double_pos() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double SplitRng::next_gaussian() {
  // Box-Muller, cosine branch. Two words per variate keeps the consumption
  // pattern fixed, which matters for reproducibility contracts.
  const double u = next_double_pos();
  const double v = next_double();
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * std::numbers::pi * v);
}

double SplitRng::next_sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

Eigen::VectorXd SplitRng::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = next_gaussian();
  return out;
}

Eigen::VectorXd SplitRng::uniform_vector(Eigen::Index n) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = next_double();
  return out;
}

std::uint64_t SplitRng::fingerprint() const {
  return philox4x64(key_, {kFingerprintDomain, 0, id0_, id1_})[0];
}

}  // namespace skloc
