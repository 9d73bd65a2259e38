#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mluq/parallel.hpp"
#include "mluq/problem.hpp"
#include "mluq/rates.hpp"
#include "mluq/sampler.hpp"
#include "mluq/solver.hpp"

namespace mluq {

class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DriverParams {
  std::uint64_t seed = 1;
  int max_level = 12;
  int screening_level = 4;         // screen keys with ||l||_1 <= this
  std::int64_t n_screen = 200;     // MC pilot samples per key
  int r = 32;                      // randomization steps, QMC drivers
  int screen_r = 16;               // pilot shifts
  std::int64_t n_screen_points = 32;  // pilot lattice points per shift
  int fixed_level = -1;            // >= 0 forces the finest level
  int allocation_rounds = 4;       // reallocation passes if variance misses
  SolverConfig solver;
  std::optional<LatticeRule> lattice;  // required by QMC drivers
  ExecutionPolicy exec = ExecutionPolicy::openmp;
};

struct VarianceBudget {
  double bias_sq = 0;
  double variance = 0;
};

struct EstimatorReport {
  DriverKind driver = DriverKind::mlmc;
  double epsilon = 0;
  double estimate = 0;
  std::vector<LevelRecord> levels;
  int finest_level = 0;
  double bias_estimate = 0;
  VarianceBudget budget;
  double total_cost = 0;    // measured cost units, screening included
  double modeled_cost = 0;  // sum over keys of N * R * cost_per_sample
  std::optional<RateFit> fitted_rates;
  bool success = true;
  std::string failure_reason;
};

// Sample-count optimization: minimizes sum(N_l c_l) subject to
// sum(v_l N_l^{-p}) = eps^2 / 2 via the closed-form Lagrange solution
// N_l = (lambda p v_l / c_l)^{1/(p+1)}, then rounds up (to the next power of
// two when pow2 is set).
struct Allocation {
  std::vector<double> real_n;
  std::vector<std::int64_t> n;
};
Allocation allocate_samples(std::span<const double> v, std::span<const double> c,
                            double eps, double p, bool pow2 = false);

// Geometric bias-tail model |shell sum at level l| ~ 2^{log2_c - alpha l}.
struct BiasFit {
  double alpha = 0;
  double log2_c = 0;
};

// Smallest L with the extrapolated tail sum_{l > L} magnitude <= eps/sqrt(2).
// Throws EstimatorError when alpha <= 0.
int select_finest_level(const BiasFit& fit, double eps, int max_level);

EstimatorReport mc_run(const ProblemSpec& spec, double eps, const DriverParams& params);
EstimatorReport mlmc_run(const ProblemSpec& spec, double eps, const DriverParams& params);
EstimatorReport mimc_run(const ProblemSpec& spec, double eps, const DriverParams& params);
EstimatorReport mlqmc_run(const ProblemSpec& spec, double eps, const DriverParams& params);
EstimatorReport miqmc_run(const ProblemSpec& spec, double eps, const DriverParams& params);
EstimatorReport mlmc_combination_run(const ProblemSpec& spec, double eps,
                                     const DriverParams& params);

EstimatorReport run_driver(DriverKind driver, const ProblemSpec& spec, double eps,
                           const DriverParams& params);

// Pilot phase only: per-key statistics over the screening simplex plus the
// rate fit they support (and the variance-vs-N exponent for QMC drivers).
struct ScreenResult {
  std::vector<LevelRecord> records;
  std::optional<RateFit> fit;
  std::string fit_note;  // set when the rate fit could not be produced
  double total_cost = 0;
};
ScreenResult screen_driver(DriverKind driver, const ProblemSpec& spec,
                           const DriverParams& params);

// --- building blocks shared with the test and verification suites ---

// Coupled level-difference sample at a stochastic point:
//   scalar MLMC:  P_l(y) - P_{l-1}(y) on isotropic grids
//   combination:  sum over the shell ||l||_1 = l of mixed differences, all at
//                 the same y (equals the combination-value backward difference)
//   multi-index:  mixed first difference at the multi-index
double mlmc_difference(const ProblemSpec& spec, int level, std::span<const double> y,
                       const SolverConfig& solver, double* cost = nullptr);
double combination_difference(const ProblemSpec& spec, int level,
                              std::span<const double> y, const SolverConfig& solver,
                              double* cost = nullptr);
double mimc_difference(const ProblemSpec& spec, const MultiIndex& ell,
                       std::span<const double> y, const SolverConfig& solver,
                       double* cost = nullptr);
// Combination-technique value of the scalar-level functional at y.
double combination_level_value(const ProblemSpec& spec, int level,
                               std::span<const double> y, const SolverConfig& solver);

}  // namespace mluq
