#include "autosampling/rng.hpp"

#include <cmath>

namespace autosampling {

std::uint64_t RngStream::splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t RngStream::derive(std::uint64_t seed, std::uint64_t domain,
                                std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ domain);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  return s;
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double RngStream::next_gaussian() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace autosampling
