#include "mluq/verify.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "mluq/combination.hpp"
#include "mluq/estimators.hpp"

namespace mluq {

namespace {

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// deterministic pseudo-random evaluator table
LevelEvaluator random_table(std::uint64_t seed, std::uint64_t salt) {
  return [seed, salt](const MultiIndex& mi) {
    if (mi.any_negative()) return 0.0;
    const RngKey key = make_key(seed, Stream::test, salt ^ mi.hash());
    return 2.0 * key.uniform01(0) - 1.0;
  };
}

void add(VerifyReport& rep, const std::string& name, bool ok, const std::string& detail) {
  rep.items.push_back({name, ok, detail});
}

}  // namespace

VerifyReport run_verification(const RunConfig& config) {
  VerifyReport rep;
  const std::uint64_t seed = config.seed ? *config.seed : 1;
  const double tol = 1e-12;

  // 1. summation identity on synthetic tables, d in {1,2,3}, components <= 4
  {
    bool ok = true;
    std::ostringstream detail;
    for (int d = 1; d <= 3 && ok; ++d) {
      const auto table = random_table(seed, static_cast<std::uint64_t>(d));
      for (const auto& ell : simplex(4, d)) {
        const auto check = summation_identity_check(table, ell);
        if (!rel_close(check.lhs, check.rhs, tol)) {
          ok = false;
          detail << "summation identity violated at d=" << d << " ell="
                 << ell.to_string() << " diff=" << check.max_abs_diff;
          break;
        }
      }
    }
    add(rep, "summation-identity-synthetic", ok, detail.str());
  }

  // 2. truncated difference sum vs binomial shell reassembly
  {
    bool ok = true;
    std::ostringstream detail;
    for (int d = 1; d <= 3 && ok; ++d) {
      const auto table = random_table(seed, 100 + static_cast<std::uint64_t>(d));
      for (int level = 0; level <= 4; ++level) {
        const double a = truncated_difference_sum(table, level, d);
        const double b = combination_value(table, level, d);
        if (!rel_close(a, b, tol)) {
          ok = false;
          detail << "combination reassembly mismatch at d=" << d << " level="
                 << level << ": " << a << " vs " << b;
          break;
        }
      }
    }
    add(rep, "combination-binomial-reassembly", ok, detail.str());
  }

  const ProblemSpec spec = make_config_problem(config);
  const SolverConfig& solver = config.solver;
  const RngKey ykey = make_key(seed, Stream::test, 777);

  auto draw_y = [&](std::uint64_t i) {
    std::vector<double> y(static_cast<std::size_t>(spec.s));
    for (int j = 0; j < spec.s; ++j)
      y[static_cast<std::size_t>(j)] = mc_coordinate(ykey, static_cast<std::int64_t>(i), j);
    return y;
  };

  // 3. per-sample telescoping of isotropic level differences
  {
    bool ok = true;
    std::ostringstream detail;
    const int top = spec.d >= 3 ? 3 : 4;
    for (std::uint64_t i = 0; i < 3 && ok; ++i) {
      const auto y = draw_y(i);
      double sum = 0;
      for (int l = 0; l <= top; ++l) sum += mlmc_difference(spec, l, y, solver);
      GridSolution sol = solve(spec, MultiIndex::isotropic(spec.d, top), y, solver);
      const double direct = functional_value(spec, sol);
      if (!rel_close(sum, direct, tol)) {
        ok = false;
        detail << "telescoping violated at sample " << i << ": " << sum << " vs "
               << direct;
      }
    }
    add(rep, "per-sample-telescoping", ok, detail.str());
  }

  // 4. per-sample shell identity against combination values
  {
    bool ok = true;
    std::ostringstream detail;
    const int top = spec.d >= 3 ? 3 : 4;
    for (std::uint64_t i = 0; i < 3 && ok; ++i) {
      const auto y = draw_y(10 + i);
      for (int l = 0; l <= top && ok; ++l) {
        const double diff = combination_difference(spec, l, y, solver);
        const double a = combination_level_value(spec, l, y, solver);
        const double b = l > 0 ? combination_level_value(spec, l - 1, y, solver) : 0.0;
        if (!rel_close(diff, a - b, tol)) {
          ok = false;
          detail << "shell identity violated at level " << l << ": " << diff
                 << " vs " << (a - b);
        }
      }
    }
    add(rep, "per-sample-shell-identity", ok, detail.str());
  }

  // 5. summation identity on the PDE-backed evaluator
  {
    bool ok = true;
    std::ostringstream detail;
    const auto y = draw_y(42);
    MemoEvaluator memo([&](const MultiIndex& mi) -> CostedValue {
      GridSolution sol = solve(spec, mi, y, solver);
      return {functional_value(spec, sol), sol.cost_units};
    });
    const LevelEvaluator ev = [&memo](const MultiIndex& mi) { return memo(mi); };
    const int comp = spec.d >= 3 ? 2 : 3;
    const auto check =
        summation_identity_check(ev, MultiIndex::isotropic(spec.d, comp));
    if (!rel_close(check.lhs, check.rhs, tol)) {
      ok = false;
      detail << "pde summation identity diff " << check.max_abs_diff;
    }
    add(rep, "summation-identity-pde", ok, detail.str());
  }

  // 6. shifted-lattice unbiasedness on a product integrand with known integral
  {
    const int s = spec.s;
    const LatticeRule rule = korobov_search(s, 256);
    const double exact = std::pow(0.5 + 1.0 / 12.0, s);
    const int shifts = 64;
    std::vector<double> q(shifts);
    std::vector<double> y(static_cast<std::size_t>(s));
    const RngKey skey = make_key(seed, Stream::qmc_shift, 4242);
    for (int k = 0; k < shifts; ++k) {
      const auto shift = random_shift(s, skey, static_cast<std::uint64_t>(k));
      double acc = 0;
      for (std::uint64_t i = 1; i <= rule.n; ++i) {
        lattice_point(rule, i, shift, y);
        double prod = 1;
        for (double yj : y) prod *= 0.5 + yj * yj;
        acc += prod;
      }
      q[static_cast<std::size_t>(k)] = acc / static_cast<double>(rule.n);
    }
    const ShiftStats stats = shift_statistics(q);
    const double se = std::sqrt(std::max(stats.variance_of_mean, 1e-300));
    const bool ok = std::abs(stats.mean - exact) <= 4.0 * se + 1e-12;
    std::ostringstream detail;
    if (!ok)
      detail << "lattice mean " << stats.mean << " vs exact " << exact
             << " (se " << se << ")";
    add(rep, "lattice-unbiasedness", ok, detail.str());
  }

  // 7. pseudo-random sampler moments
  {
    const int s = 2;
    const std::int64_t n = 20000;
    const RngKey key = make_key(seed, Stream::mc_sample, 515);
    double mean = 0;
    for (std::int64_t i = 0; i < n; ++i) mean += mc_coordinate(key, i, 0);
    mean /= static_cast<double>(n);
    const double bound = 3.0 * std::sqrt(1.0 / 12.0 / static_cast<double>(n));
    const bool ok = std::abs(mean) <= bound;
    std::ostringstream detail;
    if (!ok) detail << "sample mean " << mean << " outside +-" << bound;
    add(rep, "mc-sampler-mean", ok, detail.str());
    (void)s;
  }

  return rep;
}

}  // namespace mluq
