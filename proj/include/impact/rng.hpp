#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace impact {

// Philox2x64-10 counter-based block cipher (Random123 constants). One stream
// per path index: results do not depend on how paths are partitioned across
// threads.
inline std::array<std::uint64_t, 2> philox2x64(std::uint64_t key,
                                               std::uint64_t c0,
                                               std::uint64_t c1) {
  constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
  constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;
  std::uint64_t x0 = c0, x1 = c1, k = key;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(kMul) * x0;
    const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
    const std::uint64_t lo = static_cast<std::uint64_t>(prod);
    x0 = hi ^ k ^ x1;
    x1 = lo;
    k += kWeyl;
  }
  return {x0, x1};
}

class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream)
      : key_(seed), stream_(stream) {}

  // uniform on (0,1), endpoints excluded
  double uniform() { return to_unit(next_u64()); }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t next_u64() {
    if (lane_ == 0) {
      block_ = philox2x64(key_, stream_, counter_++);
      lane_ = 1;
      return block_[0];
    }
    lane_ = 0;
    return block_[1];
  }

  static double to_unit(std::uint64_t x) {
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int lane_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace impact
