#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace entrank {

// Seeded generator with a platform-independent output sequence.
//
// The engine is std::mt19937_64, whose output is fixed by the standard. The
// standard distributions are implementation-defined, so bounded integers and
// unit reals are derived here directly from the raw 64-bit words.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound) by rejection sampling. bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [0, 1) with 53 bits of resolution.
  double unit();

 private:
  std::mt19937_64 engine_;
};

// Indices of k items drawn without replacement from [0, n), returned in
// ascending order. Partial Fisher-Yates over Prng(seed).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Maps a 64-bit word onto [0, 1).
inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace entrank
