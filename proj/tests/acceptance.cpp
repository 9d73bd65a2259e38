// Acceptance harness: one PASS/FAIL line per criterion, exit code equals the
// number of failed criteria. Each criterion is self-contained and uses an
// oracle independent of the code path it checks wherever one exists.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "mluq/combination.hpp"
#include "mluq/estimators.hpp"
#include "mluq/problem.hpp"
#include "mluq/rates.hpp"
#include "mluq/rng.hpp"
#include "mluq/sampler.hpp"
#include "mluq/solver.hpp"

using namespace mluq;

namespace {

int failures = 0;

void report(int crit, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s criterion-%d %s: %s\n", pass ? "PASS" : "FAIL", crit, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// deterministic pseudo-random evaluator table in [-1, 1]
LevelEvaluator random_table(std::uint64_t seed) {
  return [seed](const MultiIndex& mi) {
    if (mi.any_negative()) return 0.0;
    return 2.0 * make_key(seed, Stream::test, mi.hash()).uniform01(0) - 1.0;
  };
}

// PDE-backed memoized functional evaluator at a fixed stochastic point
LevelEvaluator pde_table(const ProblemSpec& spec, const std::vector<double>& y,
                         std::shared_ptr<MemoEvaluator>& memo_out) {
  const SolverConfig solver;
  memo_out = std::make_shared<MemoEvaluator>([&spec, y, solver](const MultiIndex& mi) {
    const GridSolution sol = solve(spec, mi, y, solver);
    return CostedValue{functional_value(spec, sol), sol.cost_units};
  });
  auto memo = memo_out;
  return [memo](const MultiIndex& mi) { return (*memo)(mi); };
}

// worst relative identity violation across the four exact identities for one
// evaluator in dimension d, components / norms up to `top`
double identity_worst(const LevelEvaluator& ev, int d, int top) {
  double worst = 0;
  // summation identity: value at ell' equals box sum of mixed differences
  for (const auto& ellp : simplex(top, d)) {
    const auto chk = summation_identity_check(ev, ellp);
    worst = std::max(worst, rel_diff(chk.lhs, chk.rhs));
  }
  for (int level = 0; level <= top; ++level) {
    // truncated simplex sum of mixed differences vs binomial reassembly
    worst = std::max(worst, rel_diff(combination_value(ev, level, d),
                                     truncated_difference_sum(ev, level, d)));
    if (level >= 1) {
      // backward difference of combination values vs shell of mixed diffs
      double shell_diff = 0;
      for (const auto& mi : shell(level, d)) shell_diff += mixed_difference(ev, mi);
      worst = std::max(worst,
                       rel_diff(combination_value(ev, level, d) -
                                    combination_value(ev, level - 1, d),
                                shell_diff));
    }
  }
  return worst;
}

void criterion_1() {
  double worst = 0;
  for (int d = 1; d <= 3; ++d) {
    worst = std::max(worst, identity_worst(random_table(2026 + d), d, 4));
    const ProblemSpec spec = make_problem("affine-sine", d, 4);
    std::vector<double> y(4);
    const RngKey key = make_key(31, Stream::test, static_cast<std::uint64_t>(d));
    for (int j = 0; j < 4; ++j) y[static_cast<std::size_t>(j)] = key.uniform_sym(j);
    std::shared_ptr<MemoEvaluator> memo;
    worst = std::max(worst, identity_worst(pde_table(spec, y, memo), d, 4));
  }
  report(1, "identity-suite", worst <= 1e-12,
         fmt("worst relative violation %.3g (tolerance 1e-12), d=1..3, components <= 4, "
             "synthetic and PDE-backed evaluators",
             worst));
}

void criterion_2() {
  bool ok = true;
  std::string detail;
  const struct { int d, l0, l1; } cases[] = {{1, 3, 7}, {2, 2, 6}};
  for (const auto& cs : cases) {
    const ProblemSpec spec = make_problem("manufactured-sine", cs.d, 1);
    const std::vector<double> y{0.0};
    std::vector<double> xs, ys;
    for (int l = cs.l0; l <= cs.l1; ++l) {
      const GridSolution sol = solve(spec, MultiIndex::isotropic(cs.d, l), y);
      const double err = std::abs(functional_value(spec, sol) - spec.exact_functional);
      xs.push_back(l);
      ys.push_back(std::log2(err));
    }
    const double order = -linear_fit(xs, ys).slope;
    ok = ok && order >= 1.8 && order <= 2.2;
    detail += fmt("d=%d order %.3f (levels %d..%d)  ", cs.d, order, cs.l0, cs.l1);
  }
  report(2, "solver-order", ok, detail + "bands [1.8, 2.2]");
}

void criterion_3() {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  DriverParams p;
  p.seed = 42;
  p.screening_level = 6;  // shells 1..4 are still pre-asymptotic
  p.n_screen = 200;
  const ScreenResult res = screen_driver(DriverKind::mimc, spec, p);
  if (!res.fit) {
    report(3, "rate-premises", false, "rate fit unavailable: " + res.fit_note);
    return;
  }
  const RateFit& f = *res.fit;
  const bool ok = f.alpha >= 1.5 && f.alpha <= 2.6 && f.beta >= 3.0 && f.beta <= 5.0 &&
                  f.gamma >= 0.8 && f.gamma <= 1.4;
  report(3, "rate-premises", ok,
         fmt("d=2 per-index fits alpha %.3f (se %.3f) in [1.5,2.6], beta %.3f (se %.3f) "
             "in [3,5], gamma %.3f (se %.3f) in [0.8,1.4]",
             f.alpha, f.alpha_se, f.beta, f.beta_se, f.gamma, f.gamma_se));
}

void criterion_4() {
  // coarsest informative scalar level (level 0 grids are empty, P := 0)
  const ProblemSpec spec = make_problem("affine-sine", 1, 4);
  const MultiIndex ell = MultiIndex::isotropic(1, 2);
  const RngKey shift_key = make_key(19, Stream::qmc_shift, 0);
  std::vector<std::pair<double, double>> var_vs_n;
  for (std::uint64_t n = 32; n <= 2048; n *= 2) {
    const LatticeRule rule = korobov_search(4, n);
    std::vector<double> q(32, 0.0);
    std::vector<double> y(4);
    for (int k = 0; k < 32; ++k) {
      const std::vector<double> shift =
          random_shift(4, shift_key, static_cast<std::uint64_t>(k) * 4096 + n);
      double acc = 0;
      for (std::uint64_t i = 1; i <= n; ++i) {
        lattice_point(rule, i, shift, y);
        acc += functional_value(spec, solve(spec, ell, y));
      }
      q[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
    }
    var_vs_n.emplace_back(static_cast<double>(n), shift_statistics(q).variance_of_mean);
  }
  double se = 0;
  bool inflated = false;
  const double p = fit_qmc_exponent(var_vs_n, &se, &inflated);
  report(4, "qmc-variance-rate", p >= 1.5,
         fmt("fitted p %.3f (se %.3f%s) >= 1.5, N in {2^5..2^11}, R = 32", p, se,
             inflated ? ", inflated" : ""));
}

void criterion_5() {
  // (a) shifted-lattice unbiasedness on a product integrand with known integral
  const int s = 4;
  const LatticeRule rule = korobov_search(s, 256);
  const RngKey key = make_key(23, Stream::qmc_shift, 0);
  std::vector<double> q(500, 0.0);
  std::vector<double> y(static_cast<std::size_t>(s));
  for (int k = 0; k < 500; ++k) {
    const std::vector<double> shift = random_shift(s, key, static_cast<std::uint64_t>(k));
    double acc = 0;
    for (std::uint64_t i = 1; i <= rule.n; ++i) {
      lattice_point(rule, i, shift, y);
      double f = 1;
      for (double yj : y) f *= 0.5 + yj * yj;
      acc += f;
    }
    q[static_cast<std::size_t>(k)] = acc / static_cast<double>(rule.n);
  }
  const ShiftStats st = shift_statistics(q);
  const double exact = std::pow(7.0 / 12.0, s);
  const double se_lattice = std::sqrt(st.variance_of_mean);
  const bool lattice_ok = std::abs(st.mean - exact) <= 4.0 * se_lattice;

  // (b) each driver at fixed L against a 10^6-sample MC oracle for E[P_L]
  const ProblemSpec spec = make_problem("affine-sine", 1, 4);
  const MultiIndex ell = MultiIndex::isotropic(1, 2);
  const RngKey okey = make_key(4057, Stream::oracle, 0);
  const std::int64_t n_oracle = 1000000;
  double mean = 0, m2 = 0;
  std::vector<double> yy(4);
  for (std::int64_t i = 0; i < n_oracle; ++i) {
    for (int j = 0; j < 4; ++j)
      yy[static_cast<std::size_t>(j)] = mc_coordinate(okey, i, j);
    const double v = functional_value(spec, solve(spec, ell, yy));
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  const double oracle_se =
      std::sqrt(m2 / static_cast<double>(n_oracle - 1) / static_cast<double>(n_oracle));

  const DriverKind drivers[] = {DriverKind::mc,    DriverKind::mlmc,
                                DriverKind::mimc,  DriverKind::mlqmc,
                                DriverKind::miqmc, DriverKind::mlmc_comb};
  bool drivers_ok = true;
  std::string detail;
  const LatticeRule driver_rule = korobov_search(4, 1 << 12);
  for (DriverKind drv : drivers) {
    const bool qmc = drv == DriverKind::mlqmc || drv == DriverKind::miqmc;
    const int reps = 100;
    std::vector<double> est(reps);
    bool all_success = true;
    for (int rep = 0; rep < reps; ++rep) {
      DriverParams p;
      p.seed = 777000 + static_cast<std::uint64_t>(rep);
      p.fixed_level = 2;
      if (qmc) p.lattice = driver_rule;
      const EstimatorReport r = run_driver(drv, spec, 4e-3, p);
      all_success = all_success && r.success;
      est[static_cast<std::size_t>(rep)] = r.estimate;
    }
    double em = 0;
    for (double e : est) em += e;
    em /= reps;
    double ss = 0;
    for (double e : est) ss += (e - em) * (e - em);
    const double meta_se = std::sqrt(ss / (reps - 1.0) / reps);
    const double comb_se = std::sqrt(meta_se * meta_se + oracle_se * oracle_se);
    const double z = std::abs(em - mean) / comb_se;
    drivers_ok = drivers_ok && all_success && z <= 4.0;
    detail += fmt("%s %.2fse ", driver_name(drv).c_str(), z);
  }
  report(5, "unbiasedness", lattice_ok && drivers_ok,
         fmt("lattice mean %.6f vs exact %.6f (%.2f se of 500 shifts); fixed-L driver "
             "deviations vs 1e6-sample oracle: %s(all <= 4 se required)",
             st.mean, exact, std::abs(st.mean - exact) / se_lattice, detail.c_str()));
}

// reference E[P] by Richardson extrapolation of shifted-lattice level means;
// uses only the solver and the lattice sampler, independent of the estimator
// drivers under test
double reference_value(int d) {
  const ProblemSpec spec = make_problem("affine-sine", d, 4);
  const SolverConfig solver;
  const int levels[3] = {d == 1 ? 7 : 5, d == 1 ? 8 : 6, d == 1 ? 9 : 7};
  const std::uint64_t n = d == 1 ? 4096 : 2048;
  const int r = d == 1 ? 16 : 8;
  const LatticeRule rule = korobov_search(4, n);
  const RngKey key = make_key(606, Stream::oracle, static_cast<std::uint64_t>(d));
  double m[3];
  std::vector<double> y(4);
  for (int t = 0; t < 3; ++t) {
    double acc = 0;
    for (int k = 0; k < r; ++k) {
      const std::vector<double> shift = random_shift(4, key, static_cast<std::uint64_t>(k));
      for (std::uint64_t i = 1; i <= n; ++i) {
        lattice_point(rule, i, shift, y);
        acc += d == 1 ? functional_value(
                            spec, solve(spec, MultiIndex::isotropic(1, levels[t]), y))
                      : combination_level_value(spec, levels[t], y, solver);
      }
    }
    m[t] = acc / static_cast<double>(n * static_cast<std::uint64_t>(r));
  }
  const double ratio = (m[2] - m[1]) / (m[1] - m[0]);
  return m[2] + (m[2] - m[1]) * ratio / (1.0 - ratio);
}

void criterion_6() {
  bool ok = true;
  std::string detail;
  const DriverKind drivers[] = {DriverKind::mc,    DriverKind::mlmc,
                                DriverKind::mimc,  DriverKind::mlqmc,
                                DriverKind::miqmc, DriverKind::mlmc_comb};
  const LatticeRule rule = korobov_search(4, 1 << 12);
  for (int d = 1; d <= 2; ++d) {
    const double ref = reference_value(d);
    const ProblemSpec spec = make_problem("affine-sine", d, 4);
    const std::vector<double> eps_grid =
        d == 1 ? std::vector<double>{4e-3, 2e-3, 1e-3}
               : std::vector<double>{8e-3, 4e-3, 2e-3};
    double worst = 0;
    for (DriverKind drv : drivers) {
      const bool qmc = drv == DriverKind::mlqmc || drv == DriverKind::miqmc;
      for (double eps : eps_grid) {
        double mse = 0;
        const int reps = 100;
        for (int rep = 0; rep < reps; ++rep) {
          DriverParams p;
          p.seed = 880000 + static_cast<std::uint64_t>(rep);
          if (qmc) p.lattice = rule;
          const EstimatorReport r = run_driver(drv, spec, eps, p);
          if (!r.success) ok = false;
          const double e = r.estimate - ref;
          mse += e * e;
        }
        mse /= reps;
        worst = std::max(worst, mse / (eps * eps));
      }
    }
    ok = ok && worst <= 1.2;
    detail += fmt("d=%d ref %.8f worst MSE/eps^2 %.3f  ", d, ref, worst);
  }
  report(6, "mse-feasibility", ok,
         detail + "(6 drivers x 3 eps x 100 meta-replications, bound 1.2)");
}

void criterion_7() {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  const LatticeRule rule = korobov_search(4, 1 << 12);
  const std::vector<double> eps_grid{4e-3, 2e-3, 1e-3, 5e-4};
  std::vector<double> xs, ys;
  double miq_last = 0, mlmc_last = 0;
  bool success = true;
  for (double eps : eps_grid) {
    DriverParams p;
    p.seed = 99;
    p.lattice = rule;
    const EstimatorReport miq = miqmc_run(spec, eps, p);
    DriverParams pm;
    pm.seed = 99;
    const EstimatorReport ml = mlmc_run(spec, eps, pm);
    success = success && miq.success && ml.success;
    xs.push_back(std::log2(eps));
    ys.push_back(std::log2(miq.modeled_cost));
    miq_last = miq.modeled_cost;
    mlmc_last = ml.modeled_cost;
  }
  const double slope = std::abs(linear_fit(xs, ys).slope);
  const bool ok = success && slope < 2.0 && miq_last <= mlmc_last;
  report(7, "cost-scaling", ok,
         fmt("d=2 modeled-cost slope %.3f (< 2 required) over eps {4e-3..5e-4}; at "
             "eps=5e-4 miqmc %.4g <= mlmc %.4g",
             slope, miq_last, mlmc_last));
}

void criterion_8() {
  const std::vector<double> v{1.0, 0.25};
  const std::vector<double> c{1.0, 2.0};
  const double eps = 1.0, p = 1.0;
  const Allocation got = allocate_samples(v, c, eps, p);
  // brute-force oracle: minimize N1 c1 + N2 c2 subject to the variance budget
  const double budget = 0.5 * eps * eps;
  double best_cost = 1e300;
  std::int64_t best[2] = {0, 0};
  for (std::int64_t n1 = 1; n1 <= 256; ++n1)
    for (std::int64_t n2 = 1; n2 <= 256; ++n2) {
      if (v[0] / static_cast<double>(n1) + v[1] / static_cast<double>(n2) > budget)
        continue;
      const double cost = c[0] * static_cast<double>(n1) + c[1] * static_cast<double>(n2);
      if (cost < best_cost) {
        best_cost = cost;
        best[0] = n1;
        best[1] = n2;
      }
    }
  const bool ok = std::llabs(got.n[0] - best[0]) <= 1 && std::llabs(got.n[1] - best[1]) <= 1;
  report(8, "allocation-optimality", ok,
         fmt("v=(1,0.25) c=(1,2) p=1: closed form N=(%lld,%lld) real (%.3f,%.3f) vs "
             "grid-search oracle (%lld,%lld), within 1 sample",
             static_cast<long long>(got.n[0]), static_cast<long long>(got.n[1]),
             got.real_n[0], got.real_n[1], static_cast<long long>(best[0]),
             static_cast<long long>(best[1])));
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  return failures;
}
