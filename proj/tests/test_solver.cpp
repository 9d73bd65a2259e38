#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mluq/rates.hpp"
#include "mluq/sampler.hpp"
#include "mluq/solver.hpp"

using namespace mluq;

TEST_CASE("d=1 Poisson with a=1, f=1 is exact at the nodes") {
  const ProblemSpec spec = make_problem("constant", 1, 1);
  const std::vector<double> y{0.0};
  const GridSolution sol = solve(spec, MultiIndex({3}), y);
  REQUIRE(sol.extents == std::vector<int>{7});
  for (int i = 0; i < 7; ++i) {
    const double x = (i + 1) / 8.0;
    CHECK(sol.nodal_values[i] == doctest::Approx(x * (1 - x) / 2).epsilon(1e-12));
  }
}

TEST_CASE("d=1 functional converges to 1/12 at second order") {
  const ProblemSpec spec = make_problem("constant", 1, 1);
  const std::vector<double> y{0.0};
  std::vector<double> xs, ys;
  for (int l = 3; l <= 7; ++l) {
    const GridSolution sol = solve(spec, MultiIndex({l}), y);
    const double err = std::abs(functional_value(spec, sol) - 1.0 / 12.0);
    REQUIRE(err > 0);
    xs.push_back(l);
    ys.push_back(std::log2(err));
  }
  const FitLine fit = linear_fit(xs, ys);
  CHECK(-fit.slope >= 1.8);
  CHECK(-fit.slope <= 2.2);
}

TEST_CASE("manufactured solution order d=1 and d=2") {
  SUBCASE("d=1, levels 3..7") {
    const ProblemSpec spec = make_problem("manufactured-sine", 1, 1);
    const std::vector<double> y{0.0};
    std::vector<double> xs, ys;
    for (int l = 3; l <= 7; ++l) {
      const GridSolution sol = solve(spec, MultiIndex({l}), y);
      const double err = std::abs(functional_value(spec, sol) - spec.exact_functional);
      xs.push_back(l);
      ys.push_back(std::log2(err));
    }
    const FitLine fit = linear_fit(xs, ys);
    CHECK(-fit.slope >= 1.8);
    CHECK(-fit.slope <= 2.2);
  }
  SUBCASE("d=2, isotropic levels 2..6") {
    const ProblemSpec spec = make_problem("manufactured-sine", 2, 1);
    const std::vector<double> y{0.0};
    std::vector<double> xs, ys;
    for (int l = 2; l <= 6; ++l) {
      const GridSolution sol = solve(spec, MultiIndex::isotropic(2, l), y);
      const double err = std::abs(functional_value(spec, sol) - spec.exact_functional);
      xs.push_back(l);
      ys.push_back(std::log2(err));
    }
    const FitLine fit = linear_fit(xs, ys);
    CHECK(-fit.slope >= 1.8);
    CHECK(-fit.slope <= 2.2);
  }
}

TEST_CASE("d=2 manufactured nodal error decays at order 2") {
  const ProblemSpec spec = make_problem("manufactured-sine", 2, 1);
  const std::vector<double> y{0.0};
  double prev = 0;
  for (int l = 3; l <= 5; ++l) {
    const GridSolution sol = solve(spec, MultiIndex::isotropic(2, l), y);
    const int n = (1 << l) - 1;
    double emax = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double x1 = (i + 1.0) / (1 << l);
        const double x2 = (j + 1.0) / (1 << l);
        const double exact = std::sin(M_PI * x1) * std::sin(M_PI * x2);
        emax = std::max(emax, std::abs(sol.nodal_values[j * n + i] - exact));
      }
    if (l > 3) CHECK(prev / emax > 3.0);  // ~4x per level
    prev = emax;
  }
}

TEST_CASE("level-0 grids are empty and the functional is zero") {
  const ProblemSpec spec = make_problem("constant", 2, 1);
  const std::vector<double> y{0.0};
  const GridSolution sol = solve(spec, MultiIndex({0, 3}), y);
  CHECK(functional_value(spec, sol) == 0.0);
  CHECK(sol.nodal_values.empty());
}

TEST_CASE("discrete maximum principle: nonnegative forcing gives nonnegative solution") {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  const RngKey key = make_key(3, Stream::test, 0);
  std::vector<double> y(4);
  for (int j = 0; j < 4; ++j) y[j] = key.uniform_sym(j);
  const GridSolution sol = solve(spec, MultiIndex({3, 4}), y);
  for (double v : sol.nodal_values) CHECK(v >= 0.0);
}

TEST_CASE("determinism: identical inputs give bitwise-identical output") {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  std::vector<double> y{0.1, -0.2, 0.3, -0.4};
  const GridSolution a = solve(spec, MultiIndex({4, 3}), y);
  const GridSolution b = solve(spec, MultiIndex({4, 3}), y);
  CHECK(a.nodal_values == b.nodal_values);
  CHECK(functional_value(spec, a) == functional_value(spec, b));
}

TEST_CASE("solver kinds agree on the same problem") {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  std::vector<double> y{0.2, 0.1, -0.3, 0.4};
  SolverConfig mg;
  mg.kind = SolverKind::multigrid;
  SolverConfig bd;
  bd.kind = SolverKind::banded;
  const GridSolution a = solve(spec, MultiIndex({4, 4}), y, mg);
  const GridSolution b = solve(spec, MultiIndex({4, 4}), y, bd);
  const double pa = functional_value(spec, a);
  const double pb = functional_value(spec, b);
  CHECK(pa == doctest::Approx(pb).epsilon(1e-8));
}

TEST_CASE("anisotropic grids solve correctly") {
  const ProblemSpec spec = make_problem("manufactured-sine", 2, 1);
  const std::vector<double> y{0.0};
  // strongly anisotropic index: error controlled by the coarse direction
  const GridSolution sol = solve(spec, MultiIndex({6, 2}), y);
  const double p = functional_value(spec, sol);
  const GridSolution iso = solve(spec, MultiIndex({2, 2}), y);
  const double piso = functional_value(spec, iso);
  // both are second order in the h=2^-2 direction; same magnitude of error
  CHECK(std::abs(p - spec.exact_functional) <
        2.0 * std::abs(piso - spec.exact_functional) + 1e-12);
  CHECK(sol.solver_residual <= 1e-9);
}

TEST_CASE("cost model hand examples") {
  CHECK(cost_model(MultiIndex({2, 3}), CostMode::per_index) == 32.0);
  CHECK(cost_model(MultiIndex::isotropic(2, 3), CostMode::full_grid) == 64.0);
  CHECK(cost_model(MultiIndex({0, 0, 0}), CostMode::per_index) == 1.0);
}

TEST_CASE("measured cost grows about linearly in the unknown count") {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  std::vector<double> y{0.1, 0.1, 0.1, 0.1};
  // both levels are large enough that the multigrid path is selected
  const GridSolution a = solve(spec, MultiIndex::isotropic(2, 5), y);
  const GridSolution b = solve(spec, MultiIndex::isotropic(2, 6), y);
  const double unknowns_a = ((1 << 5) - 1) * ((1 << 5) - 1);
  const double unknowns_b = ((1 << 6) - 1) * ((1 << 6) - 1);
  const double per_a = a.cost_units / unknowns_a;
  const double per_b = b.cost_units / unknowns_b;
  CHECK(per_b <= 2.0 * per_a);
  CHECK(per_a <= 2.0 * per_b);
}

TEST_CASE("solver reports convergence within tolerance") {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  std::vector<double> y{-0.4, 0.4, -0.4, 0.4};
  SolverConfig cfg;
  cfg.kind = SolverKind::multigrid;
  const GridSolution sol = solve(spec, MultiIndex::isotropic(2, 6), y, cfg);
  CHECK(sol.solver_residual <= cfg.rel_tol);
}
