// Counter-based random source: every draw is a pure function of
// (seed, stream_id, counter), so chains can be sharded across workers by
// stream id and replayed from any saved counter without coordination.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hola {

namespace detail {

// SplitMix64 finalizer (Stafford mix 13). Applied to a Weyl sequence keyed by
// (seed, stream_id) this is the classic splitmix64 generator with random
// access through the counter.
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;  // 2^64 / phi
inline constexpr std::uint64_t kWeylHi = 0xD1B54A32D192ED03ull;  // odd, for the high counter word
inline constexpr std::uint64_t kStreamSalt = 0xA0761D6478BD642Full;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic splittable stream. State is the 128-bit counter only; normals
// are produced by the Marsaglia polar method with no cached spare, so saving
// the counter and regenerating reproduces the remaining sequence bit-exactly.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : key_(detail::mix64(seed ^ (detail::kGolden * stream_id + detail::kStreamSalt))),
        seed_(seed),
        stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter_lo() const { return ctr_lo_; }
  std::uint64_t counter_hi() const { return ctr_hi_; }

  void seek(std::uint64_t ctr_hi, std::uint64_t ctr_lo) {
    ctr_hi_ = ctr_hi;
    ctr_lo_ = ctr_lo;
  }

  // Raw 64-bit word at the current counter; advances the counter.
  std::uint64_t next_u64() {
    std::uint64_t z = detail::mix64(key_ + detail::kGolden * ctr_lo_ + detail::kWeylHi * ctr_hi_);
    if (++ctr_lo_ == 0) ++ctr_hi_;
    return z;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // One standard-normal pair via the polar method.
  void normal_pair(double& a, double& b) {
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    a = u * f;
    b = v * f;
  }

  // Fills `out` with i.i.d. N(0,1) draws. Odd lengths discard the spare of the
  // final pair, keeping the counter the whole generator state.
  void fill_normal(std::span<double> out) {
    std::size_t i = 0;
    double a, b;
    for (; i + 1 < out.size(); i += 2) {
      normal_pair(a, b);
      out[i] = a;
      out[i + 1] = b;
    }
    if (i < out.size()) {
      normal_pair(a, b);
      out[i] = a;
    }
  }

  double next_normal() {
    double a, b;
    normal_pair(a, b);
    return a;
  }

  std::vector<double> standard_normal(std::size_t count) {
    std::vector<double> out(count);
    fill_normal(out);
    return out;
  }

 private:
  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t ctr_hi_ = 0;
  std::uint64_t ctr_lo_ = 0;
};

}  // namespace hola
