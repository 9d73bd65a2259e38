#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mluq/rng.hpp"

namespace mluq {

// Per-dimension grid refinement levels; grid spacing 2^{-levels[j]} in
// direction j. Negative components are representable: they are the sentinel
// for "the functional value is zero by convention".
struct MultiIndex {
  std::vector<int> levels;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> l) : levels(std::move(l)) {}

  static MultiIndex isotropic(int d, int level) {
    return MultiIndex(std::vector<int>(static_cast<std::size_t>(d), level));
  }

  int dim() const { return static_cast<int>(levels.size()); }

  int order1_norm() const {
    return std::accumulate(levels.begin(), levels.end(), 0);
  }

  bool any_negative() const {
    for (int l : levels)
      if (l < 0) return true;
    return false;
  }

  MultiIndex minus_unit(int j) const {
    MultiIndex out = *this;
    out.levels[static_cast<std::size_t>(j)] -= 1;
    return out;
  }

  bool operator==(const MultiIndex&) const = default;

  // stable hash, used as RNG level key and memo key
  std::uint64_t hash() const {
    std::uint64_t h = 0x42d86c11ULL;
    for (int l : levels) h = mix64(h ^ static_cast<std::uint64_t>(l + 16));
    return h;
  }

  std::string to_string() const {
    std::string out = "(";
    for (std::size_t j = 0; j < levels.size(); ++j) {
      if (j) out += ",";
      out += std::to_string(levels[j]);
    }
    out += ")";
    return out;
  }
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& mi) const {
    return static_cast<std::size_t>(mi.hash());
  }
};

// All multi-indices with ||l||_1 == level, in lexicographic order.
std::vector<MultiIndex> shell(int level, int d);

// All multi-indices with ||l||_1 <= max_level (downward closed simplex).
std::vector<MultiIndex> simplex(int max_level, int d);

// C(max_level + d, d)
std::uint64_t simplex_size(int max_level, int d);

// C(level + d - 1, d - 1)
std::uint64_t shell_size(int level, int d);

std::uint64_t binomial(int n, int k);

}  // namespace mluq
