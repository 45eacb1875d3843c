#pragma once

#include <cstdint>
#include <random>

namespace autosampling {

// Stream-id domains. Worker streams use the worker index directly; the
// engine's internal draws use the reserved domains so they can never
// collide with a worker stream.
inline constexpr std::uint64_t kStreamDomainWorker = 0;
inline constexpr std::uint64_t kStreamDomainInit = 1;
inline constexpr std::uint64_t kStreamDomainDataset = 2;
inline constexpr std::uint64_t kStreamDomainEval = 3;
inline constexpr std::uint64_t kStreamDomainStatic = 4;

/// Deterministic, splittable random stream. A stream is identified by
/// (seed, domain, a, b); identical ids replay identical sequences and the
/// ids are mixed through splitmix64 so distinct streams are decorrelated.
///
/// All draw primitives are implemented here rather than with
/// std::*_distribution, so sequences are identical across standard library
/// implementations. One stream is owned by exactly one worker at a time.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t domain, std::uint64_t a,
            std::uint64_t b = 0)
      : engine_(derive(seed, domain, a, b)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call).
  double next_gaussian();

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t domain,
                              std::uint64_t a, std::uint64_t b);

  std::mt19937_64 engine_;
};

}  // namespace autosampling
