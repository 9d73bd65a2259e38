#include "mluq/combination.hpp"

#include <cmath>
#include <cstdlib>

namespace mluq {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t out = 1;
  for (int i = 1; i <= k; ++i) {
    out = out * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return out;
}

namespace {

// enumerate multi-indices with fixed order-1 norm, lexicographic
void shell_rec(int level, int d, std::vector<int>& prefix,
               std::vector<MultiIndex>& out) {
  if (static_cast<int>(prefix.size()) == d - 1) {
    prefix.push_back(level);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int l = 0; l <= level; ++l) {
    prefix.push_back(l);
    shell_rec(level - l, d, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<MultiIndex> shell(int level, int d) {
  std::vector<MultiIndex> out;
  if (level < 0) return out;
  out.reserve(shell_size(level, d));
  std::vector<int> prefix;
  shell_rec(level, d, prefix, out);
  return out;
}

std::vector<MultiIndex> simplex(int max_level, int d) {
  std::vector<MultiIndex> out;
  if (max_level < 0) return out;
  out.reserve(simplex_size(max_level, d));
  for (int l = 0; l <= max_level; ++l) {
    auto sh = shell(l, d);
    out.insert(out.end(), sh.begin(), sh.end());
  }
  return out;
}

std::uint64_t simplex_size(int max_level, int d) {
  return binomial(max_level + d, d);
}

std::uint64_t shell_size(int level, int d) {
  return binomial(level + d - 1, d - 1);
}

double mixed_difference(const LevelEvaluator& evaluator, const MultiIndex& ell) {
  const int d = ell.dim();
  double sum = 0;
  MultiIndex corner = ell;
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    int popcount = 0;
    for (int j = 0; j < d; ++j) {
      const int bit = (mask >> j) & 1;
      corner.levels[static_cast<std::size_t>(j)] = ell.levels[static_cast<std::size_t>(j)] - bit;
      popcount += bit;
    }
    const double term =
        corner.any_negative() ? 0.0 : evaluator(corner);
    sum += (popcount % 2 == 0) ? term : -term;
  }
  return sum;
}

IdentityCheck summation_identity_check(const LevelEvaluator& evaluator,
                                       const MultiIndex& ell_prime) {
  IdentityCheck out;
  out.lhs = evaluator(ell_prime);
  // iterate the box 0 <= ell <= ell'
  const int d = ell_prime.dim();
  MultiIndex ell = MultiIndex::isotropic(d, 0);
  double rhs = 0;
  for (;;) {
    rhs += mixed_difference(evaluator, ell);
    int j = 0;
    while (j < d) {
      if (ell.levels[static_cast<std::size_t>(j)] <
          ell_prime.levels[static_cast<std::size_t>(j)]) {
        ++ell.levels[static_cast<std::size_t>(j)];
        break;
      }
      ell.levels[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == d) break;
  }
  out.rhs = rhs;
  out.max_abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

double shell_sum(const LevelEvaluator& evaluator, int level, int d) {
  if (level < 0) return 0;
  double sum = 0;
  for (const auto& mi : shell(level, d)) sum += evaluator(mi);
  return sum;
}

double combination_value(const LevelEvaluator& evaluator, int level, int d) {
  double sum = 0;
  for (int k = 0; k <= d - 1; ++k) {
    const double s = shell_sum(evaluator, level - k, d);
    const double coef = static_cast<double>(binomial(d - 1, k));
    sum += (k % 2 == 0) ? coef * s : -coef * s;
  }
  return sum;
}

double truncated_difference_sum(const LevelEvaluator& evaluator, int level, int d) {
  double sum = 0;
  for (const auto& mi : simplex(level, d)) sum += mixed_difference(evaluator, mi);
  return sum;
}

}  // namespace mluq
