#pragma once

#include <cstdint>
#include <random>

namespace ringtrap {

/// Independent generator for (master seed, stream index, purpose tag). Each
/// stream depends only on its own key, so results do not depend on the order
/// in which parallel workers pick up streams.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    tag};
  return std::mt19937_64(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace ringtrap
