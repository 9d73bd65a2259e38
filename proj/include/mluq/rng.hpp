#pragma once

#include <cstdint>

namespace mluq {

// Stream purpose tags; every random draw in the project is keyed by
// (seed, purpose, level key, replicate/shift, sample index, counter) so that
// results do not depend on execution order or worker count.
enum class Stream : std::uint64_t {
  mc_sample = 1,
  qmc_shift = 2,
  screening = 3,
  final_pass = 4,
  meta_replication = 5,
  oracle = 6,
  test = 7,
};

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based keyed generator. Stateless: the draw for a given
// (key, counter) pair is a pure function, so samples can be generated in any
// order by any worker.
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t purpose = 0;
  std::uint64_t level = 0;  // hash of the level / multi-index key
  std::uint64_t index = 0;  // sample or shift index

  RngKey with_index(std::uint64_t i) const { return {seed, purpose, level, i}; }

  std::uint64_t hash(std::uint64_t counter) const {
    std::uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ULL);
    h = mix64(h ^ purpose);
    h = mix64(h ^ level);
    h = mix64(h ^ index);
    return mix64(h ^ counter);
  }

  // uniform on [0,1)
  double uniform01(std::uint64_t counter) const {
    return static_cast<double>(hash(counter) >> 11) * 0x1.0p-53;
  }
  // uniform on (0,1), used for lattice shifts
  double uniform_open(std::uint64_t counter) const {
    return (static_cast<double>(hash(counter) >> 11) + 0.5) * 0x1.0p-53;
  }
  // uniform on [-1/2, 1/2)
  double uniform_sym(std::uint64_t counter) const {
    return uniform01(counter) - 0.5;
  }
};

inline RngKey make_key(std::uint64_t seed, Stream purpose, std::uint64_t level = 0,
                       std::uint64_t index = 0) {
  return {seed, static_cast<std::uint64_t>(purpose), level, index};
}

}  // namespace mluq
