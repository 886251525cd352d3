#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fpa {

/// Philox4x32-10 counter-based generator. Stateless:
/// the output is a pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Uniform double in (0, 1) from 32 random bits; never 0 so log() is safe.
inline double uniform_open(std::uint32_t bits) {
  return (static_cast<double>(bits) + 0.5) * (1.0 / 4294967296.0);
}

inline Philox4x32::Counter philox_block(std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t step) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                            static_cast<std::uint32_t>(seed >> 32)};
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                static_cast<std::uint32_t>(step >> 32),
                                static_cast<std::uint32_t>(stream),
                                static_cast<std::uint32_t>(stream >> 32)};
  return Philox4x32::generate(ctr, key);
}

inline std::array<double, 4> uniform_block(std::uint64_t seed, std::uint64_t stream,
                                           std::uint64_t step) {
  const auto r = philox_block(seed, stream, step);
  return {uniform_open(r[0]), uniform_open(r[1]), uniform_open(r[2]), uniform_open(r[3])};
}

/// Standard normals for one (seed, stream, step) triple: four Box-Muller
/// variates from a single Philox block.
inline std::array<double, 4> normal_block(std::uint64_t seed, std::uint64_t stream,
                                          std::uint64_t step) {
  const auto r = philox_block(seed, stream, step);
  std::array<double, 4> z{};
  for (int pair = 0; pair < 2; ++pair) {
    const double u1 = uniform_open(r[2 * pair]);
    const double u2 = uniform_open(r[2 * pair + 1]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    z[2 * pair] = radius * std::cos(angle);
    z[2 * pair + 1] = radius * std::sin(angle);
  }
  return z;
}

}  // namespace fpa
