#pragma once

#include <cstdint>
#include <random>

namespace gmf {

using Engine = std::mt19937_64;

// Purpose tags keep the draws of one replica in separate streams, so that e.g.
// the tilt location never perturbs the Gaussian increments.
enum class StreamPurpose : std::uint64_t {
  Field = 0,
  TiltLocation = 1,
  Toolbox = 2,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child stream derived from (master seed, index, purpose).
inline Engine child_stream(std::uint64_t master_seed, std::uint64_t index,
                           StreamPurpose purpose = StreamPurpose::Field) {
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  const std::uint64_t c = splitmix64(b ^ static_cast<std::uint64_t>(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return Engine(seq);
}

/// Fills `out` with i.i.d. standard normals from `rng`.
template <class Rng, class Range>
void fill_standard_normal(Rng& rng, Range&& out) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : out) v = dist(rng);
}

}  // namespace gmf
