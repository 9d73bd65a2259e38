#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mluq/rng.hpp"

namespace mluq {

enum class LatticeSource { file, korobov_search };

// Rank-1 lattice rule: point i is frac(i z / N + shift) - 1/2 componentwise.
struct LatticeRule {
  int s = 0;
  std::uint64_t n = 0;
  std::vector<std::uint64_t> z;
  LatticeSource source = LatticeSource::korobov_search;
  bool search_exhausted = false;  // korobov search hit its cap

  void validate() const;  // gcd(z_j, n) == 1, 1 <= z_j < n
};

// i.i.d. uniform points on [-1/2,1/2]^s, deterministic given the key.
std::vector<std::vector<double>> mc_points(int s, std::int64_t n, const RngKey& key);

// One coordinate-keyed uniform draw; sample i, coordinate j.
inline double mc_coordinate(const RngKey& key, std::int64_t i, int j) {
  return key.with_index(static_cast<std::uint64_t>(i))
      .uniform_sym(static_cast<std::uint64_t>(j));
}

// Point i (1-based, i = 1..N) of the shifted rule, written into out[0..s).
void lattice_point(const LatticeRule& rule, std::uint64_t i,
                   std::span<const double> shift, std::span<double> out);

std::vector<std::vector<double>> lattice_points(const LatticeRule& rule,
                                                std::span<const double> shift);

// R-th random shift in (0,1)^s for the given key.
std::vector<double> random_shift(int s, const RngKey& key, std::uint64_t k);

struct ShiftStats {
  double mean = 0;
  double variance_of_mean = 0;  // sum (Q_k - Qbar)^2 / (R (R-1))
};

// Mean and unbiased variance-of-the-mean over R >= 2 shift estimates.
ShiftStats shift_statistics(std::span<const double> q);

// Worst-case criterion of the rule in the product-weight space with weights
// gamma_j = j^-2 (squared worst-case error; lower is better).
double lattice_score(std::span<const std::uint64_t> z, std::uint64_t n, int s);

// Korobov-form search z_j = a^{j-1} mod N over odd a, scored by
// lattice_score. Deterministic; tries at most search_cap candidates and flags
// the rule when the cap truncated the search.
LatticeRule korobov_search(int s, std::uint64_t n, std::uint64_t search_cap = 4096);

// ASCII generating-vector file: one integer per line (line j is z_j); lines
// starting with '#' are ignored.
LatticeRule load_lattice_file(const std::string& path, int s, std::uint64_t n);

}  // namespace mluq
