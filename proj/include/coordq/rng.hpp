#pragma once

#include <cstdint>

namespace coordq {

// splitmix64 step (Steele et al.). Used both as the generator and for
// deriving independent sub-streams; standard-library distributions are
// avoided on purpose so runs are bit-reproducible across toolchains.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive. Multiply-shift range reduction;
  // bias is < 2^-64 per draw, negligible at simulation scale.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t r = static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * span) >> 64);
    return lo + static_cast<int>(r);
  }

  // Uniform in [lo, hi).
  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Deterministic sub-stream seed: hash-chains the salts into the seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    std::uint64_t s = seed;
    s = splitmix64(s) ^ (a * 0x9e3779b97f4a7c15ULL + 1);
    s = splitmix64(s) ^ (b * 0xbf58476d1ce4e5b9ULL + 2);
    s = splitmix64(s) ^ (c * 0x94d049bb133111ebULL + 3);
    return splitmix64(s);
  }

 private:
  std::uint64_t state_;
};

}  // namespace coordq
