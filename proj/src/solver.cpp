#include "mluq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <lapacke.h>

namespace mluq {

namespace {

// One tensor grid in the multigrid hierarchy: interior unknowns only,
// lexicographic storage with direction 0 fastest.
struct Grid {
  std::vector<int> ell;       // refinement level per direction
  std::vector<int> n;         // interior extent 2^l - 1 (directions with l>=1)
  std::vector<double> h;      // spacing 2^-l
  std::vector<std::int64_t> stride;
  std::int64_t m = 0;         // total unknowns

  // face[j][...] : coefficient at the cell face below node in direction j;
  // extent in direction j is n_j + 1 (faces), n_k in other directions.
  std::vector<std::vector<double>> face;
  std::vector<double> rhs;
  std::vector<double> u;
  std::vector<double> res;

  std::vector<double> inv_h2;
};

std::int64_t face_count(const Grid& g, int j) {
  std::int64_t c = 1;
  for (std::size_t k = 0; k < g.n.size(); ++k)
    c *= (static_cast<int>(k) == j) ? g.n[k] + 1 : g.n[k];
  return c;
}

// odometer-style coordinate iteration helper
struct Coords {
  std::vector<int> c;
  explicit Coords(std::size_t d) : c(d, 0) {}
  bool advance(const std::vector<int>& extent) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (++c[j] < extent[j]) return true;
      c[j] = 0;
    }
    return false;
  }
};

Grid make_grid(const ProblemSpec& spec, const std::vector<int>& ell,
               std::span<const double> y) {
  Grid g;
  g.ell = ell;
  const int d = static_cast<int>(ell.size());
  g.n.resize(ell.size());
  g.h.resize(ell.size());
  g.stride.resize(ell.size());
  g.m = 1;
  for (int j = 0; j < d; ++j) {
    g.n[j] = (1 << ell[j]) - 1;
    g.h[j] = 1.0 / static_cast<double>(1 << ell[j]);
    g.stride[j] = g.m;
    g.m *= g.n[j];
  }
  g.inv_h2.resize(ell.size());
  for (int j = 0; j < d; ++j) g.inv_h2[j] = 1.0 / (g.h[j] * g.h[j]);
  if (g.m == 0) return g;

  std::vector<double> x(ell.size());
  g.face.resize(ell.size());
  for (int j = 0; j < d; ++j) {
    g.face[j].assign(face_count(g, j), 0.0);
    std::vector<int> ext = g.n;
    ext[j] += 1;
    Coords co(ell.size());
    std::int64_t idx = 0;
    do {
      for (int k = 0; k < d; ++k)
        x[k] = (static_cast<double>(co.c[k]) + (k == j ? 0.5 : 1.0)) * g.h[k];
      const double a = coefficient_eval(spec, x, y);
      if (a <= 0)
        throw std::domain_error("coefficient non-positive at a quadrature point");
      g.face[j][idx++] = a;
    } while (co.advance(ext));
  }

  g.rhs.resize(g.m);
  Coords co(ell.size());
  std::int64_t idx = 0;
  do {
    for (int k = 0; k < d; ++k) x[k] = (co.c[k] + 1.0) * g.h[k];
    g.rhs[idx++] = spec.f(x);
  } while (co.advance(g.n));

  g.u.assign(g.m, 0.0);
  g.res.assign(g.m, 0.0);
  return g;
}

// face array index for the lower face of node `c` in direction j, and the
// upper face (lower face of the next node in direction j)
struct FaceIndexer {
  std::vector<std::int64_t> stride;  // strides of the face array of dir j
  int j;
  explicit FaceIndexer(const Grid& g, int dir) : j(dir) {
    stride.resize(g.n.size());
    std::int64_t acc = 1;
    for (std::size_t k = 0; k < g.n.size(); ++k) {
      stride[k] = acc;
      acc *= (static_cast<int>(k) == dir) ? g.n[k] + 1 : g.n[k];
    }
  }
  std::int64_t lower(const std::vector<int>& c) const {
    std::int64_t idx = 0;
    for (std::size_t k = 0; k < c.size(); ++k) idx += stride[k] * c[k];
    return idx;
  }
};

// Gauss-Seidel sweep over one color (parity of coordinate sum)
void gs_color(Grid& g, int color) {
  const int d = static_cast<int>(g.n.size());
  std::vector<FaceIndexer> fi;
  fi.reserve(g.n.size());
  for (int j = 0; j < d; ++j) fi.emplace_back(g, j);
  Coords co(g.n.size());
  std::int64_t idx = 0;
  do {
    int parity = 0;
    for (int cj : co.c) parity += cj;
    if ((parity & 1) == color) {
      double diag = 0, off = 0;
      for (int j = 0; j < d; ++j) {
        const std::int64_t lf = fi[j].lower(co.c);
        const double aw = g.face[j][lf];
        const double ae = g.face[j][lf + fi[j].stride[j]];
        diag += (aw + ae) * g.inv_h2[j];
        if (co.c[j] > 0) off += aw * g.inv_h2[j] * g.u[idx - g.stride[j]];
        if (co.c[j] < g.n[j] - 1) off += ae * g.inv_h2[j] * g.u[idx + g.stride[j]];
      }
      g.u[idx] = (g.rhs[idx] + off) / diag;
    }
    ++idx;
  } while (co.advance(g.n));
}

void smooth(Grid& g, int sweeps, double& work) {
  for (int s = 0; s < sweeps; ++s) {
    gs_color(g, 0);
    gs_color(g, 1);
    work += static_cast<double>(g.m);
  }
}

// res = rhs - A u ; returns squared norm of res
double residual(Grid& g, double& work) {
  const int d = static_cast<int>(g.n.size());
  std::vector<FaceIndexer> fi;
  fi.reserve(g.n.size());
  for (int j = 0; j < d; ++j) fi.emplace_back(g, j);
  Coords co(g.n.size());
  std::int64_t idx = 0;
  double nrm2 = 0;
  do {
    double au = 0;
    for (int j = 0; j < d; ++j) {
      const std::int64_t lf = fi[j].lower(co.c);
      const double aw = g.face[j][lf];
      const double ae = g.face[j][lf + fi[j].stride[j]];
      au += (aw + ae) * g.inv_h2[j] * g.u[idx];
      if (co.c[j] > 0) au -= aw * g.inv_h2[j] * g.u[idx - g.stride[j]];
      if (co.c[j] < g.n[j] - 1) au -= ae * g.inv_h2[j] * g.u[idx + g.stride[j]];
    }
    g.res[idx] = g.rhs[idx] - au;
    nrm2 += g.res[idx] * g.res[idx];
    ++idx;
  } while (co.advance(g.n));
  work += static_cast<double>(g.m);
  return nrm2;
}

// Direct solve by banded Cholesky; dimensions permuted so the smallest
// extents vary fastest, minimizing the bandwidth.
void solve_banded(Grid& g, double& work) {
  const int d = static_cast<int>(g.n.size());
  std::vector<int> perm(g.n.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) { return g.n[a] < g.n[b]; });

  std::vector<std::int64_t> pstride(g.n.size());
  std::int64_t acc = 1;
  for (int k = 0; k < d; ++k) {
    pstride[perm[k]] = acc;
    acc *= g.n[perm[k]];
  }
  const std::int64_t m = g.m;
  std::int64_t kd = 0;
  for (int j = 0; j < d; ++j) kd = std::max(kd, pstride[j]);
  const int ldab = static_cast<int>(kd) + 1;

  std::vector<double> ab(static_cast<std::size_t>(ldab) * m, 0.0);
  std::vector<double> b(m, 0.0);

  std::vector<FaceIndexer> fi;
  fi.reserve(g.n.size());
  for (int j = 0; j < d; ++j) fi.emplace_back(g, j);
  Coords co(g.n.size());
  std::int64_t idx = 0;
  do {
    std::int64_t p = 0;
    for (int j = 0; j < d; ++j) p += pstride[j] * co.c[j];
    double diag = 0;
    for (int j = 0; j < d; ++j) {
      const std::int64_t lf = fi[j].lower(co.c);
      const double aw = g.face[j][lf];
      const double ae = g.face[j][lf + fi[j].stride[j]];
      diag += (aw + ae) * g.inv_h2[j];
      if (co.c[j] < g.n[j] - 1) {
        // neighbor above in permuted ordering
        ab[static_cast<std::size_t>(p) * ldab + pstride[j]] = -ae * g.inv_h2[j];
      }
    }
    ab[static_cast<std::size_t>(p) * ldab] = diag;
    b[p] = g.rhs[idx];
    ++idx;
  } while (co.advance(g.n));

  const int info = LAPACKE_dpbsv(LAPACK_COL_MAJOR, 'L', static_cast<int>(m),
                                 static_cast<int>(kd), 1, ab.data(), ldab,
                                 b.data(), static_cast<int>(m));
  if (info != 0)
    throw SolverError("banded Cholesky failed, info = " + std::to_string(info));

  Coords co2(g.n.size());
  idx = 0;
  do {
    std::int64_t p = 0;
    for (int j = 0; j < d; ++j) p += pstride[j] * co2.c[j];
    g.u[idx] = b[p];
    ++idx;
  } while (co2.advance(g.n));
  // Cholesky factorization costs ~kd^2 flops per unknown; expressed in
  // smoother-sweep equivalents (a sweep is ~10 flops per unknown).
  work += static_cast<double>(m) *
          (1.0 + static_cast<double>(kd) * static_cast<double>(kd) / 8.0);
}

// bandwidth of the banded formulation: product of all extents but the largest
std::int64_t banded_bandwidth(const Grid& g) {
  std::int64_t nmax = 1;
  for (int n : g.n) nmax = std::max<std::int64_t>(nmax, n);
  return nmax > 0 ? g.m / nmax : 0;
}

void solve_tridiagonal(Grid& g, double& work) {
  const std::int64_t n = g.m;
  const double inv_h2 = g.inv_h2[0];
  std::vector<double> diag(n), upper(n), rhs(g.rhs);
  for (std::int64_t i = 0; i < n; ++i) {
    const double aw = g.face[0][i];
    const double ae = g.face[0][i + 1];
    diag[i] = (aw + ae) * inv_h2;
    upper[i] = -ae * inv_h2;
  }
  // Thomas elimination; sub-diagonal at row i equals upper[i-1] by symmetry
  for (std::int64_t i = 1; i < n; ++i) {
    const double w = upper[i - 1] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  g.u[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::int64_t i = n - 2; i >= 0; --i)
    g.u[i] = (rhs[i] - upper[i] * g.u[i + 1]) / diag[i];
  work += static_cast<double>(n);
}

// Semi-coarsening: halve every direction currently at the maximal refinement
// (and above level 1), keeping V-cycle convergence bounded on anisotropic
// grids. Returns empty when no further coarsening is possible.
std::vector<int> coarsen_levels(const std::vector<int>& ell) {
  int lmax = 0;
  for (int l : ell) lmax = std::max(lmax, l);
  if (lmax <= 1) return {};
  std::vector<int> out = ell;
  for (int& l : out)
    if (l == lmax) --l;
  return out;
}

// tensor full weighting over coarsened directions, injection elsewhere
void restrict_residual(const Grid& fine, Grid& coarse, double& work) {
  const int d = static_cast<int>(fine.n.size());
  std::vector<int> coarsened;
  for (int j = 0; j < d; ++j)
    if (coarse.ell[j] < fine.ell[j]) coarsened.push_back(j);

  std::fill(coarse.rhs.begin(), coarse.rhs.end(), 0.0);
  Coords co(coarse.n.size());
  std::int64_t cidx = 0;
  std::vector<int> fc(fine.n.size());
  do {
    // base fine coordinates of this coarse node
    for (int j = 0; j < d; ++j)
      fc[j] = (coarse.ell[j] < fine.ell[j]) ? 2 * co.c[j] + 1 : co.c[j];
    // accumulate the tensor stencil over coarsened directions
    const std::size_t nterms = std::size_t{1} << (2 * coarsened.size());
    double acc = 0;
    // enumerate offsets in {-1,0,+1}^{coarsened} via base-3 counter
    std::vector<int> off(coarsened.size(), -1);
    for (;;) {
      double w = 1;
      std::int64_t fidx = 0;
      bool ok = true;
      for (int j = 0; j < d; ++j) {
        int c = fc[j];
        for (std::size_t t = 0; t < coarsened.size(); ++t)
          if (coarsened[t] == j) c += off[t];
        if (c < 0 || c >= fine.n[j]) { ok = false; break; }
        fidx += fine.stride[j] * c;
      }
      for (int o : off) w *= (o == 0) ? 0.5 : 0.25;
      if (ok) acc += w * fine.res[fidx];
      std::size_t t = 0;
      while (t < off.size()) {
        if (++off[t] <= 1) break;
        off[t] = -1;
        ++t;
      }
      if (t == off.size()) break;
      if (off.empty()) break;
    }
    if (coarsened.empty()) {
      std::int64_t fidx = 0;
      for (int j = 0; j < d; ++j) fidx += fine.stride[j] * fc[j];
      acc = fine.res[fidx];
    }
    coarse.rhs[cidx] = acc;
    ++cidx;
    (void)nterms;
  } while (co.advance(coarse.n));
  work += static_cast<double>(fine.m) / 2;
}

// linear interpolation in coarsened directions, identity elsewhere; adds the
// correction into the fine solution
void prolong_add(const Grid& coarse, Grid& fine, double& work) {
  const int d = static_cast<int>(fine.n.size());
  Coords co(fine.n.size());
  std::int64_t fidx = 0;
  do {
    // value of the coarse-grid correction at this fine node: product of
    // 1D interpolations; enumerate contributing coarse nodes
    double val = 0;
    // per-direction candidate (coarse coordinate, weight) pairs
    static thread_local std::vector<std::vector<std::pair<int, double>>> cand;
    cand.resize(static_cast<std::size_t>(d));
    bool any = true;
    for (int j = 0; j < d && any; ++j) {
      auto& cj = cand[j];
      cj.clear();
      if (coarse.ell[j] == fine.ell[j]) {
        cj.emplace_back(co.c[j], 1.0);
      } else {
        const int p = co.c[j] + 1;  // physical fine index
        if (p % 2 == 0) {
          cj.emplace_back(p / 2 - 1, 1.0);
        } else {
          const int lo = (p - 1) / 2 - 1;
          const int hi = (p + 1) / 2 - 1;
          if (lo >= 0) cj.emplace_back(lo, 0.5);
          if (hi < coarse.n[j]) cj.emplace_back(hi, 0.5);
          if (cj.empty()) any = false;
        }
      }
    }
    if (any) {
      // tensor sum over candidates
      std::vector<std::size_t> pick(static_cast<std::size_t>(d), 0);
      for (;;) {
        double w = 1;
        std::int64_t cidx = 0;
        for (int j = 0; j < d; ++j) {
          w *= cand[j][pick[j]].second;
          cidx += coarse.stride[j] * cand[j][pick[j]].first;
        }
        val += w * coarse.u[cidx];
        int j = 0;
        while (j < d) {
          if (++pick[j] < cand[j].size()) break;
          pick[j] = 0;
          ++j;
        }
        if (j == d) break;
      }
    }
    fine.u[fidx] += val;
    ++fidx;
  } while (co.advance(fine.n));
  work += static_cast<double>(fine.m) / 2;
}

void vcycle(std::vector<Grid>& levels, std::size_t lv, const SolverConfig& cfg,
            double& work) {
  Grid& g = levels[lv];
  if (lv + 1 == levels.size()) {
    std::fill(g.u.begin(), g.u.end(), 0.0);
    solve_banded(g, work);
    return;
  }
  smooth(g, cfg.smoother_sweeps, work);
  residual(g, work);
  restrict_residual(g, levels[lv + 1], work);
  vcycle(levels, lv + 1, cfg, work);
  prolong_add(levels[lv + 1], g, work);
  smooth(g, cfg.smoother_sweeps, work);
}

}  // namespace

GridSolution solve(const ProblemSpec& spec, const MultiIndex& ell,
                   std::span<const double> y, const SolverConfig& config) {
  if (ell.any_negative())
    throw std::invalid_argument(
        "solve: negative multi-index component (the P := 0 convention is the "
        "caller's responsibility)");
  if (ell.dim() != spec.d)
    throw std::invalid_argument("solve: multi-index dimension mismatch");

  GridSolution sol;
  sol.multi_index = ell;
  sol.extents.resize(ell.levels.size());
  for (std::size_t j = 0; j < ell.levels.size(); ++j)
    sol.extents[j] = (1 << ell.levels[j]) - 1;
  if (std::any_of(sol.extents.begin(), sol.extents.end(),
                  [](int n) { return n == 0; })) {
    sol.cost_units = 1;  // minimal accounting charge for the empty grid
    return sol;
  }

  Grid g = make_grid(spec, ell.levels, y);
  double work = 0;

  SolverKind kind = config.kind;
  if (kind == SolverKind::automatic) {
    if (spec.d == 1) {
      kind = SolverKind::tridiagonal;
    } else if (g.m <= config.direct_threshold || banded_bandwidth(g) <= 24) {
      // Thin anisotropic grids have a tiny bandwidth once dimensions are
      // permuted; the direct solve is then far cheaper than iterating.
      kind = SolverKind::banded;
    } else {
      kind = SolverKind::multigrid;
    }
  }

  double rel_res = 0;
  if (kind == SolverKind::tridiagonal) {
    if (spec.d != 1) throw ConfigError("tridiagonal solver requires d = 1");
    solve_tridiagonal(g, work);
  } else if (kind == SolverKind::banded) {
    solve_banded(g, work);
  } else {
    // geometric multigrid hierarchy
    std::vector<Grid> levels;
    levels.push_back(std::move(g));
    for (;;) {
      const Grid& top = levels.back();
      if (top.m <= config.direct_threshold) break;
      auto coarser = coarsen_levels(top.ell);
      if (coarser.empty()) break;
      levels.push_back(make_grid(spec, coarser, y));
    }
    Grid& fine = levels.front();
    double rhs_nrm2 = 0;
    for (double v : fine.rhs) rhs_nrm2 += v * v;
    const double tol2 = config.rel_tol * config.rel_tol * rhs_nrm2;
    bool converged = false;
    if (levels.size() == 1) {
      solve_banded(fine, work);
      converged = true;
    } else {
      for (int cycle = 0; cycle < config.cycle_cap; ++cycle) {
        vcycle(levels, 0, config, work);
        const double r2 = residual(fine, work);
        rel_res = rhs_nrm2 > 0 ? std::sqrt(r2 / rhs_nrm2) : 0.0;
        if (r2 <= tol2) {
          converged = true;
          break;
        }
      }
    }
    if (!converged) {
      if (fine.m < 10000) {
        std::fill(fine.u.begin(), fine.u.end(), 0.0);
        solve_banded(fine, work);
        rel_res = 0;
      } else {
        throw SolverError("multigrid failed to reach tolerance " +
                          std::to_string(config.rel_tol) + " within " +
                          std::to_string(config.cycle_cap) +
                          " cycles; last relative residual " +
                          std::to_string(rel_res));
      }
    }
    sol.nodal_values = std::move(fine.u);
    sol.cost_units = std::max(1.0, work);
    sol.solver_residual = rel_res;
    return sol;
  }

  sol.nodal_values = std::move(g.u);
  sol.cost_units = std::max(1.0, work);
  sol.solver_residual = 0;
  return sol;
}

double functional_value(const ProblemSpec& spec, const GridSolution& sol) {
  if (sol.nodal_values.empty()) return 0.0;
  const int d = static_cast<int>(sol.extents.size());
  std::vector<double> h(sol.extents.size());
  double cell = 1;
  for (int j = 0; j < d; ++j) {
    h[j] = 1.0 / static_cast<double>(sol.extents[j] + 1);
    cell *= h[j];
  }
  std::vector<int> c(sol.extents.size(), 0);
  std::vector<double> x(sol.extents.size());
  double acc = 0;
  std::int64_t idx = 0;
  for (;;) {
    for (int j = 0; j < d; ++j) x[j] = (c[j] + 1.0) * h[j];
    acc += spec.g(x) * sol.nodal_values[static_cast<std::size_t>(idx)];
    ++idx;
    int j = 0;
    while (j < d) {
      if (++c[j] < sol.extents[j]) break;
      c[j] = 0;
      ++j;
    }
    if (j == d) break;
  }
  return acc * cell;
}

double cost_model(const MultiIndex& ell, CostMode mode) {
  if (ell.any_negative())
    throw std::invalid_argument("cost_model: negative multi-index");
  if (mode == CostMode::per_index)
    return std::pow(2.0, ell.order1_norm());
  // full_grid: isotropic scalar level
  return std::pow(2.0, ell.dim() * ell.levels.at(0));
}

}  // namespace mluq
