#ifndef ALLREDUCE_RNG_HPP_
#define ALLREDUCE_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace allreduce {

using Rng = std::mt19937_64;

// All randomness descends from one root seed through named sub-streams, e.g.
// derive_seed(root, "scheduler/3"). Stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

inline Rng make_rng(std::uint64_t root, std::string_view stream) {
  return Rng(derive_seed(root, stream));
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

}  // namespace allreduce

#endif  // ALLREDUCE_RNG_HPP_
