#pragma once

#include <span>
#include <vector>

#include "mluq/multi_index.hpp"
#include "mluq/problem.hpp"

namespace mluq {

enum class SolverKind { automatic, multigrid, banded, tridiagonal };

struct SolverConfig {
  SolverKind kind = SolverKind::automatic;
  int smoother_sweeps = 2;     // pre and post sweeps per V-cycle
  double rel_tol = 1e-10;      // relative residual target
  int cycle_cap = 100;         // V-cycle cap before direct fallback / failure
  int direct_threshold = 64;   // unknowns at or below this solve directly
};

// Discrete solution on the anisotropic tensor grid with spacing 2^{-l_j} in
// direction j, interior nodes only (homogeneous Dirichlet boundary excluded).
struct GridSolution {
  MultiIndex multi_index;
  std::vector<int> extents;          // 2^{l_j} - 1 per direction
  std::vector<double> nodal_values;  // lexicographic, direction 0 fastest
  double cost_units = 0;             // interior unknowns x solver sweeps
  double solver_residual = 0;        // relative residual at return
};

// Second order conservation-form finite differences, flux coefficient at cell
// faces a(x + h_j e_j / 2, y). d=1 uses direct tridiagonal elimination, d>=2
// geometric multigrid with semi-coarsening and a banded direct fallback.
GridSolution solve(const ProblemSpec& spec, const MultiIndex& ell,
                   std::span<const double> y, const SolverConfig& config = {});

// Tensor-product trapezoid quadrature of g*u over the grid (boundary terms
// vanish under the Dirichlet condition). Returns P_ell(y).
double functional_value(const ProblemSpec& spec, const GridSolution& sol);

enum class CostMode { full_grid, per_index };

// Idealized theorem-facing cost: 2^{||ell||_1} (per_index) or 2^{d l} for the
// isotropic scalar level (full_grid).
double cost_model(const MultiIndex& ell, CostMode mode);

}  // namespace mluq
