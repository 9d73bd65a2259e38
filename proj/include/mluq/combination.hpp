#pragma once

#include <functional>
#include <unordered_map>

#include "mluq/multi_index.hpp"

namespace mluq {

// A level evaluator maps a multi-index to a functional value. Callers must
// honor the convention "value := 0 if any component is negative";
// mixed_difference relies on it to absorb the boundary.
using LevelEvaluator = std::function<double(const MultiIndex&)>;

// d-dimensional mixed first difference: the alternating 2^d-term sum
// sum_{b in {0,1}^d} (-1)^{|b|} evaluator(ell - b).
double mixed_difference(const LevelEvaluator& evaluator, const MultiIndex& ell);

struct IdentityCheck {
  double lhs = 0;        // evaluator(ell')
  double rhs = 0;        // sum of mixed differences over 0 <= ell <= ell'
  double max_abs_diff = 0;
};

// Telescoping check: evaluator(ell') equals the sum of mixed differences
// over the box 0 <= ell <= ell'.
IdentityCheck summation_identity_check(const LevelEvaluator& evaluator,
                                       const MultiIndex& ell_prime);

// Shell sum S_l = sum over ||ell||_1 == level of evaluator(ell); 0 for level < 0.
double shell_sum(const LevelEvaluator& evaluator, int level, int d);

// Combination value via binomial reassembly of shell sums:
// sum_{k=0}^{d-1} (-1)^k C(d-1,k) S_{level-k}.
double combination_value(const LevelEvaluator& evaluator, int level, int d);

// The same value computed as the truncated sum of mixed differences over the
// simplex ||ell||_1 <= level; kept as the independent route for identity checks.
double truncated_difference_sum(const LevelEvaluator& evaluator, int level, int d);

// A costed evaluation: functional value plus the work spent producing it.
struct CostedValue {
  double value = 0;
  double cost = 0;
};

using CostedEvaluator = std::function<CostedValue(const MultiIndex&)>;

// Per-sample memo cache: every distinct grid is solved once per stochastic
// sample, no matter how many alternating sums reference it. Confined to one
// worker; not thread safe.
class MemoEvaluator {
 public:
  explicit MemoEvaluator(CostedEvaluator eval) : eval_(std::move(eval)) {}

  double operator()(const MultiIndex& mi) {
    if (mi.any_negative()) return 0.0;
    auto it = cache_.find(mi);
    if (it != cache_.end()) return it->second;
    CostedValue cv = eval_(mi);
    total_cost_ += cv.cost;
    cache_.emplace(mi, cv.value);
    return cv.value;
  }

  double total_cost() const { return total_cost_; }
  std::size_t distinct_solves() const { return cache_.size(); }

 private:
  CostedEvaluator eval_;
  std::unordered_map<MultiIndex, double, MultiIndexHash> cache_;
  double total_cost_ = 0;
};

}  // namespace mluq
