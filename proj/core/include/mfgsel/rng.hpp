#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfgsel {

// Counter-based generator (Philox4x32-10).  Streams are addressed by
// (key, stream id) and blocks within a stream by a 64-bit counter, so any
// path/particle can regenerate its noise independently of evaluation order.
namespace philox {

inline constexpr std::uint32_t mult_a = 0xD2511F53u;
inline constexpr std::uint32_t mult_b = 0xCD9E8D57u;
inline constexpr std::uint32_t weyl_a = 0x9E3779B9u;
inline constexpr std::uint32_t weyl_b = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c,
                       std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(mult_a) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(mult_b) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  k[0] += weyl_a;
  k[1] += weyl_b;
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                          std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) round_once(counter, key);
  return counter;
}

}  // namespace philox

// Experiment families; part of the stream id so that different consumers of
// the same master seed never overlap.
enum class StreamKind : std::uint64_t {
  mfg_path = 1,
  nplayer_particle = 2,
  cost_path = 3,
  hitting_path = 4,
};

// stream id layout: kind(8) | a(28) | b(28)
inline std::uint64_t stream_id(StreamKind kind, std::uint64_t a,
                               std::uint64_t b = 0) {
  return (static_cast<std::uint64_t>(kind) << 56) | ((a & 0xFFFFFFFull) << 28) |
         (b & 0xFFFFFFFull);
}

// Standard normals from a dedicated Philox stream; 53-bit uniforms, Box-Muller
// in fixed pairs so consumption is deterministic.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_{static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)} {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto w = philox::block(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
         stream_[0], stream_[1]},
        key_);
    ++block_;
    const double u1 = to_unit(w[0], w[1]);
    const double u2 = to_unit(w[2], w[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

 private:
  static double to_unit(std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t v =
        ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;  // 53 bits
    return (static_cast<double>(v) + 0.5) * 0x1.0p-53;        // in (0,1)
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> stream_;
  std::uint64_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mfgsel
