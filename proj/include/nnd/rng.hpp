#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace nnd::rng {

// Counter-based generator: Philox4x32-10 (Salmon et al., SC'11).
// Every draw is a pure function of (seed, stream, counter), so any
// substream can be reproduced independently and in parallel.
//
// Stream-splitting rule used throughout the project:
//   stream id = (uint64(kind) << 56) | index
// where `kind` names the purpose of the stream and `index` is the
// sampler iteration t, the dataset scene number, the training step, etc.
// One substream per sampler iteration makes noise draws independent of
// how earlier iterations consumed randomness.
enum class StreamKind : std::uint64_t {
  DatasetScene = 1,
  SamplerInit = 2,
  SamplerIter = 3,
  MeasureNoise = 4,
  TrainInit = 5,
  TrainStep = 6,
  Validation = 7,
  TrainNoise = 8,
  Generic = 9,
};

inline std::uint64_t stream_id(StreamKind kind, std::uint64_t index) {
  return (static_cast<std::uint64_t>(kind) << 56) | (index & 0x00ffffffffffffffULL);
}

namespace detail {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

}  // namespace detail

/// One independent substream of the counter-based generator.
/// Cheap to construct; holds only (seed, stream, counter) plus a one-value
/// cache for the second Box-Muller output.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}
  Stream(std::uint64_t seed, StreamKind kind, std::uint64_t index)
      : Stream(seed, stream_id(kind, index)) {}

  /// Raw 64-bit word.
  std::uint64_t next_u64() {
    if (have_half_) {
      have_half_ = false;
      return half_;
    }
    const auto block = detail::philox4x32(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
         static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
        {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++counter_;
    half_ = (static_cast<std::uint64_t>(block[2]) << 32) | block[3];
    have_half_ = true;
    return (static_cast<std::uint64_t>(block[0]) << 32) | block[1];
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; exactly two uniforms per pair.
  double normal() {
    if (have_normal_) {
      have_normal_ = false;
      return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    have_normal_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // 64-bit multiply-shift; bias is negligible for n << 2^64.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t half_ = 0;
  bool have_half_ = false;
  double cached_normal_ = 0.0;
  bool have_normal_ = false;
};

/// Identity string recorded in traces and manifests.
inline const char* algorithm_id() { return "philox4x32-10/box-muller"; }

}  // namespace nnd::rng
