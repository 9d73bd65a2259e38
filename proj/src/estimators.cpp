#include "mluq/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "mluq/combination.hpp"

namespace mluq {

namespace {

constexpr double kVarianceFloor = 1e-30;

std::uint64_t key_hash(const std::vector<int>& key) {
  std::uint64_t h = 0x9d7f3a21ULL;
  for (int k : key) h = mix64(h ^ static_cast<std::uint64_t>(k + 32));
  return h;
}

CostedEvaluator pde_evaluator(const ProblemSpec& spec, std::span<const double> y,
                              const SolverConfig& solver) {
  return [&spec, y, &solver](const MultiIndex& mi) -> CostedValue {
    GridSolution sol = solve(spec, mi, y, solver);
    return {functional_value(spec, sol), sol.cost_units};
  };
}

}  // namespace

double mimc_difference(const ProblemSpec& spec, const MultiIndex& ell,
                       std::span<const double> y, const SolverConfig& solver,
                       double* cost) {
  MemoEvaluator memo(pde_evaluator(spec, y, solver));
  const double v = mixed_difference([&memo](const MultiIndex& mi) { return memo(mi); }, ell);
  if (cost) *cost = memo.total_cost();
  return v;
}

double mlmc_difference(const ProblemSpec& spec, int level, std::span<const double> y,
                       const SolverConfig& solver, double* cost) {
  MemoEvaluator memo(pde_evaluator(spec, y, solver));
  const double fine = memo(MultiIndex::isotropic(spec.d, level));
  const double coarse = level > 0 ? memo(MultiIndex::isotropic(spec.d, level - 1)) : 0.0;
  if (cost) *cost = memo.total_cost();
  return fine - coarse;
}

double combination_difference(const ProblemSpec& spec, int level,
                              std::span<const double> y, const SolverConfig& solver,
                              double* cost) {
  // all shell members share the same stochastic sample and memo cache
  MemoEvaluator memo(pde_evaluator(spec, y, solver));
  const LevelEvaluator ev = [&memo](const MultiIndex& mi) { return memo(mi); };
  double sum = 0;
  for (const auto& mi : shell(level, spec.d)) sum += mixed_difference(ev, mi);
  if (cost) *cost = memo.total_cost();
  return sum;
}

double combination_level_value(const ProblemSpec& spec, int level,
                               std::span<const double> y, const SolverConfig& solver) {
  MemoEvaluator memo(pde_evaluator(spec, y, solver));
  return combination_value([&memo](const MultiIndex& mi) { return memo(mi); }, level,
                           spec.d);
}

Allocation allocate_samples(std::span<const double> v, std::span<const double> c,
                            double eps, double p, bool pow2) {
  if (v.empty() || c.size() != v.size())
    throw std::invalid_argument("allocate_samples: empty or mismatched level set");
  if (eps <= 0 || p < 1)
    throw std::invalid_argument("allocate_samples: need eps > 0 and p >= 1");
  const double target = 0.5 * eps * eps;
  double s = 0;
  for (std::size_t l = 0; l < v.size(); ++l) {
    const double vl = std::max(v[l], kVarianceFloor);
    s += std::pow(vl * std::pow(c[l], p), 1.0 / (p + 1.0));
  }
  // lambda from the variance constraint sum v_l N_l^{-p} = eps^2/2
  const double lambda_p = std::pow(s / target, (p + 1.0) / p);
  Allocation out;
  out.real_n.resize(v.size());
  out.n.resize(v.size());
  for (std::size_t l = 0; l < v.size(); ++l) {
    const double vl = std::max(v[l], kVarianceFloor);
    const double real = std::pow(lambda_p * vl / c[l], 1.0 / (p + 1.0));
    out.real_n[l] = real;
    std::int64_t n = static_cast<std::int64_t>(std::ceil(real - 1e-9));
    n = std::max<std::int64_t>(n, 1);
    if (pow2) {
      std::int64_t r = 1;
      while (r < n) r <<= 1;
      n = r;
    }
    out.n[l] = n;
  }
  return out;
}

int select_finest_level(const BiasFit& fit, double eps, int max_level) {
  if (!(fit.alpha > 0))
    throw EstimatorError("select_finest_level: non-positive fitted decay rate " +
                         std::to_string(fit.alpha) + "; cannot extrapolate the bias tail");
  const double budget = eps / std::sqrt(2.0);
  const double geom = 1.0 / (1.0 - std::pow(2.0, -fit.alpha));
  for (int L = 0; L <= max_level; ++L) {
    const double tail =
        std::pow(2.0, fit.log2_c - fit.alpha * (L + 1)) * geom;
    if (tail <= budget * (1.0 + 1e-12)) return L;
  }
  throw EstimatorError(
      "select_finest_level: bias target " + std::to_string(budget) +
      " not reachable within max level " + std::to_string(max_level));
}

namespace {

using DiffFn = std::function<double(const std::vector<int>& key,
                                    std::span<const double> y, double* cost)>;

struct Engine {
  DriverKind kind;
  bool qmc = false;
  bool multi_index = false;
  const ProblemSpec* spec = nullptr;
  const DriverParams* params = nullptr;
  DiffFn diff;

  std::vector<std::vector<int>> keys(int L) const {
    std::vector<std::vector<int>> out;
    if (multi_index) {
      for (const auto& mi : simplex(L, spec->d)) out.push_back(mi.levels);
    } else {
      for (int l = 0; l <= L; ++l) out.push_back({l});
    }
    return out;
  }
};

// evaluate a batch of work items, collecting values and costs; exceptions
// from workers are surfaced after the loop
template <class F>
void evaluate_batch(std::int64_t n, ExecutionPolicy exec, F&& eval) {
  std::string first_error;
  std::mutex err_mutex;
  for_each_index(n, exec, [&](std::int64_t i) {
    try {
      eval(i);
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(err_mutex);
      if (first_error.empty()) first_error = e.what();
    }
  });
  if (!first_error.empty()) throw EstimatorError(first_error);
}

LevelRecord finalize_mc(const std::vector<int>& key, const std::vector<double>& values,
                        const std::vector<double>& costs) {
  LevelRecord rec;
  rec.key = key;
  rec.n = static_cast<std::int64_t>(values.size());
  rec.r = 1;
  double mean = 0, cost = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mean += values[i];
    cost += costs[i];
  }
  mean /= static_cast<double>(values.size());
  rec.mean = mean;
  rec.cost_per_sample = cost / static_cast<double>(values.size());
  rec.total_cost = cost;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    rec.raw_variance = ss / static_cast<double>(values.size() - 1);
    rec.variance_of_mean = rec.raw_variance / static_cast<double>(values.size());
  }
  return rec;
}

LevelRecord sample_key_mc(const Engine& eng, const std::vector<int>& key,
                          std::int64_t n, Stream purpose, std::uint64_t round) {
  const std::uint64_t kh = mix64(key_hash(key) ^ round);
  const RngKey base = make_key(eng.params->seed, purpose, kh);
  std::vector<double> values(static_cast<std::size_t>(n));
  std::vector<double> costs(static_cast<std::size_t>(n));
  const int s = eng.spec->s;
  evaluate_batch(n, eng.params->exec, [&](std::int64_t i) {
    std::vector<double> y(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) y[static_cast<std::size_t>(j)] = mc_coordinate(base, i, j);
    double cost = 0;
    values[static_cast<std::size_t>(i)] = eng.diff(key, y, &cost);
    costs[static_cast<std::size_t>(i)] = cost;
  });
  return finalize_mc(key, values, costs);
}

LevelRecord sample_key_qmc(const Engine& eng, const std::vector<int>& key,
                           std::int64_t n_points, int r, Stream purpose,
                           std::uint64_t round) {
  const LatticeRule& rule = *eng.params->lattice;
  const std::uint64_t kh = mix64(key_hash(key) ^ round);
  const RngKey shift_key = make_key(eng.params->seed, Stream::qmc_shift, kh);
  (void)purpose;
  const int s = eng.spec->s;
  LatticeRule level_rule = rule;
  level_rule.n = static_cast<std::uint64_t>(n_points);
  for (auto& zj : level_rule.z) zj %= level_rule.n ? level_rule.n : 1;
  if (level_rule.n == 1) level_rule.z.assign(level_rule.z.size(), 0);

  std::vector<std::vector<double>> shifts;
  shifts.reserve(static_cast<std::size_t>(r));
  for (int k = 0; k < r; ++k)
    shifts.push_back(random_shift(s, shift_key, static_cast<std::uint64_t>(k)));

  const std::int64_t total = n_points * r;
  std::vector<double> values(static_cast<std::size_t>(total));
  std::vector<double> costs(static_cast<std::size_t>(total));
  evaluate_batch(total, eng.params->exec, [&](std::int64_t idx) {
    const std::int64_t k = idx / n_points;
    const std::uint64_t i = static_cast<std::uint64_t>(idx % n_points) + 1;
    std::vector<double> y(static_cast<std::size_t>(s));
    if (level_rule.n == 1) {
      // single-point rule: the point is just the shift
      for (int j = 0; j < s; ++j)
        y[static_cast<std::size_t>(j)] = shifts[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] - 0.5;
    } else {
      lattice_point(level_rule, i, shifts[static_cast<std::size_t>(k)], y);
    }
    double cost = 0;
    values[static_cast<std::size_t>(idx)] = eng.diff(key, y, &cost);
    costs[static_cast<std::size_t>(idx)] = cost;
  });

  std::vector<double> q(static_cast<std::size_t>(r), 0.0);
  double cost_total = 0;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    q[static_cast<std::size_t>(idx / n_points)] += values[static_cast<std::size_t>(idx)];
    cost_total += costs[static_cast<std::size_t>(idx)];
  }
  for (double& qk : q) qk /= static_cast<double>(n_points);

  LevelRecord rec;
  rec.key = key;
  rec.n = n_points;
  rec.r = r;
  rec.total_cost = cost_total;
  rec.cost_per_sample = cost_total / static_cast<double>(total);
  const ShiftStats stats = shift_statistics(q);
  rec.mean = stats.mean;
  rec.variance_of_mean = stats.variance_of_mean;
  double mean_all = 0;
  for (double v : values) mean_all += v;
  mean_all /= static_cast<double>(total);
  double ss = 0;
  for (double v : values) ss += (v - mean_all) * (v - mean_all);
  if (total > 1) rec.raw_variance = ss / static_cast<double>(total - 1);
  return rec;
}

LevelRecord sample_key(const Engine& eng, const std::vector<int>& key, std::int64_t n,
                       int r, Stream purpose, std::uint64_t round) {
  return eng.qmc ? sample_key_qmc(eng, key, n, r, purpose, round)
                 : sample_key_mc(eng, key, n, purpose, round);
}

// |shell sum of means| per order-1 norm, for the bias tail fit
std::vector<std::pair<int, double>> shell_magnitudes(
    const std::vector<LevelRecord>& records) {
  std::vector<std::pair<int, double>> out;
  for (const auto& rec : records) {
    const int l = rec.abscissa_norm();
    while (static_cast<int>(out.size()) <= l) out.emplace_back(static_cast<int>(out.size()), 0.0);
    out[static_cast<std::size_t>(l)].second += rec.mean;
  }
  for (auto& [l, v] : out) v = std::abs(v);
  return out;
}

// geometric fit over the last (up to) 3 informative shells
BiasFit fit_bias_tail(const std::vector<std::pair<int, double>>& mags) {
  std::vector<double> xs, ys;
  for (const auto& [l, v] : mags) {
    if (l >= 1 && v > 0) {
      xs.push_back(l);
      ys.push_back(std::log2(v));
    }
  }
  if (xs.size() < 2)
    throw EstimatorError("bias fit: fewer than 2 informative shells in screening");
  while (xs.size() > 3) {
    xs.erase(xs.begin());
    ys.erase(ys.begin());
  }
  const FitLine line = linear_fit(xs, ys);
  return {-line.slope, line.intercept};
}

EstimatorReport failure_report(const Engine& eng, double eps, const std::string& why,
                               std::vector<LevelRecord> records, double cost) {
  EstimatorReport rep;
  rep.driver = eng.kind;
  rep.epsilon = eps;
  rep.success = false;
  rep.failure_reason = why;
  rep.levels = std::move(records);
  rep.total_cost = cost;
  return rep;
}

EstimatorReport engine_run(Engine eng, double eps) {
  const DriverParams& params = *eng.params;
  EstimatorReport rep;
  rep.driver = eng.kind;
  rep.epsilon = eps;
  double total_cost = 0;

  // --- screening / pilot phase ---
  const int screen_l = std::min(params.screening_level, params.max_level);
  std::vector<LevelRecord> screen;
  for (const auto& key : eng.keys(screen_l)) {
    LevelRecord rec = eng.qmc
        ? sample_key(eng, key, params.n_screen_points, params.screen_r,
                     Stream::screening, 0)
        : sample_key(eng, key, params.n_screen, 1, Stream::screening, 0);
    total_cost += rec.total_cost;
    screen.push_back(std::move(rec));
  }

  // --- rate fits ---
  RateFit fit;
  bool have_fit = true;
  try {
    fit = fit_rates(screen, eng.multi_index ? Abscissa::order1_norm
                                            : Abscissa::scalar_level);
  } catch (const std::exception&) {
    // degenerate screening (e.g. zero variances): fall back to nominal rates;
    // allocation then lands on the minimum sample counts
    have_fit = false;
    fit.alpha = 2.0;
    fit.beta = 2.0;
    fit.gamma = eng.multi_index ? 1.0 : static_cast<double>(eng.spec->d);
  }

  double p_alloc = 1.0;
  if (eng.qmc) {
    // variance-vs-N study at the coarsest informative key
    const std::vector<int>* pkey = nullptr;
    int best_norm = std::numeric_limits<int>::max();
    for (const auto& rec : screen) {
      if (rec.variance_of_mean > kVarianceFloor && rec.abscissa_norm() < best_norm) {
        best_norm = rec.abscissa_norm();
        pkey = &rec.key;
      }
    }
    if (pkey) {
      std::vector<std::pair<double, double>> var_vs_n;
      for (std::int64_t n : {32, 64, 128, 256}) {
        LevelRecord rec = sample_key(eng, *pkey, n, params.screen_r,
                                     Stream::screening, 1 + static_cast<std::uint64_t>(n));
        total_cost += rec.total_cost;
        var_vs_n.emplace_back(static_cast<double>(n), rec.variance_of_mean);
      }
      try {
        double se = 0;
        bool inflated = false;
        fit.p = fit_qmc_exponent(var_vs_n, &se, &inflated);
        fit.p_se = se;
        fit.p_inflated_se = inflated;
        fit.has_p = true;
      } catch (const std::exception&) {
        fit.p = 1.0;
      }
      p_alloc = std::clamp(fit.p, 1.0, 2.0);
    }
  }
  if (have_fit) rep.fitted_rates = fit;

  // --- finest level from the bias constraint ---
  int finest;
  BiasFit bias_fit{};
  try {
    bias_fit = fit_bias_tail(shell_magnitudes(screen));
    finest = params.fixed_level >= 0
                 ? params.fixed_level
                 : select_finest_level(bias_fit, eps, params.max_level);
  } catch (const std::exception& e) {
    if (params.fixed_level >= 0) {
      finest = params.fixed_level;
      bias_fit = {1.0, 0.0};
    } else {
      return failure_report(eng, eps, e.what(), std::move(screen), total_cost);
    }
  }
  rep.finest_level = finest;

  // --- per-key variance and cost constants, extrapolated beyond screening ---
  auto all_keys = eng.keys(finest);
  std::vector<double> v(all_keys.size()), c(all_keys.size());
  auto find_screen = [&](const std::vector<int>& key) -> const LevelRecord* {
    for (const auto& rec : screen)
      if (rec.key == key) return &rec;
    return nullptr;
  };
  // anchor extrapolation at the deepest screened shell averages
  double v_anchor = kVarianceFloor, c_anchor = 1.0;
  int anchor_norm = 0;
  for (const auto& rec : screen) {
    if (rec.abscissa_norm() >= anchor_norm &&
        (eng.qmc ? rec.variance_of_mean : rec.raw_variance) > kVarianceFloor) {
      anchor_norm = rec.abscissa_norm();
      v_anchor = eng.qmc
                     ? rec.variance_of_mean *
                           std::pow(static_cast<double>(rec.n), p_alloc)
                     : rec.raw_variance;
      c_anchor = rec.cost_per_sample;
    }
  }
  for (std::size_t i = 0; i < all_keys.size(); ++i) {
    const auto* rec = find_screen(all_keys[i]);
    const int norm = [&] {
      int sum = 0;
      for (int k : all_keys[i]) sum += k;
      return sum;
    }();
    if (rec) {
      v[i] = eng.qmc ? rec->variance_of_mean * std::pow(static_cast<double>(rec->n), p_alloc)
                     : rec->raw_variance;
      c[i] = std::max(rec->cost_per_sample, 1.0);
    } else {
      v[i] = v_anchor * std::pow(2.0, -fit.beta * (norm - anchor_norm));
      c[i] = c_anchor * std::pow(2.0, fit.gamma * (norm - anchor_norm));
    }
    v[i] = std::max(v[i], kVarianceFloor);
    c[i] = std::max(c[i], 1e-12);
  }

  // --- allocate, sample, and re-check the variance budget ---
  std::vector<LevelRecord> final_records;
  double variance_sum = 0;
  bool variance_ok = false;
  for (int round = 0; round < params.allocation_rounds && !variance_ok; ++round) {
    Allocation alloc;
    if (eng.qmc) {
      std::vector<double> cr(c);
      for (double& x : cr) x *= params.r;
      alloc = allocate_samples(v, cr, eps, p_alloc, /*pow2=*/true);
    } else {
      alloc = allocate_samples(v, c, eps, 1.0, /*pow2=*/false);
      for (auto& n : alloc.n) n = std::max<std::int64_t>(n, 2);
    }
    final_records.clear();
    variance_sum = 0;
    for (std::size_t i = 0; i < all_keys.size(); ++i) {
      LevelRecord rec = sample_key(eng, all_keys[i], alloc.n[i],
                                   eng.qmc ? params.r : 1, Stream::final_pass,
                                   1000 + static_cast<std::uint64_t>(round));
      total_cost += rec.total_cost;
      variance_sum += rec.variance_of_mean;
      final_records.push_back(std::move(rec));
    }
    if (round == 0 && params.fixed_level < 0 && finest > 0) {
      // The screening fit only sees shallow, pre-asymptotic shells and tends
      // to under-estimate the decay rate, overshooting the finest level.
      // Re-fit the tail from the deepest measured shells and shrink if the
      // bias budget is already met at a lower level.
      try {
        const BiasFit refit = fit_bias_tail(shell_magnitudes(final_records));
        const int retuned = select_finest_level(refit, eps, finest);
        if (retuned < finest) {
          finest = retuned;
          bias_fit = refit;
          rep.finest_level = finest;
          std::vector<std::vector<int>> kk;
          std::vector<double> kv, kc;
          std::vector<LevelRecord> kr;
          variance_sum = 0;
          for (std::size_t i = 0; i < all_keys.size(); ++i) {
            int norm = 0;
            for (int k : all_keys[i]) norm += k;
            if (norm > finest) continue;
            kk.push_back(all_keys[i]);
            kv.push_back(v[i]);
            kc.push_back(c[i]);
            variance_sum += final_records[i].variance_of_mean;
            kr.push_back(std::move(final_records[i]));
          }
          all_keys = std::move(kk);
          v = std::move(kv);
          c = std::move(kc);
          final_records = std::move(kr);
        }
      } catch (const std::exception&) {
        // keep the screening-based level if the re-fit is not possible
      }
    }
    variance_ok = variance_sum <= 0.5 * eps * eps * 1.05;
    if (!variance_ok) {
      // refresh variance constants from what was just measured and retry
      for (std::size_t i = 0; i < all_keys.size(); ++i) {
        const auto& rec = final_records[i];
        const double measured =
            eng.qmc ? rec.variance_of_mean * std::pow(static_cast<double>(rec.n), p_alloc)
                    : rec.raw_variance;
        v[i] = std::max(v[i], measured) * 1.2;
        if (rec.cost_per_sample > 0) c[i] = rec.cost_per_sample;
      }
    }
  }

  // --- assemble the report ---
  rep.levels = final_records;
  double estimate = 0;
  for (const auto& rec : final_records) estimate += rec.mean;
  rep.estimate = estimate;

  const auto final_mags = shell_magnitudes(final_records);
  double tail_base = final_mags.empty() ? 0.0 : final_mags.back().second;
  const double geom = 1.0 / (1.0 - std::pow(2.0, -bias_fit.alpha));
  if (tail_base > 0) {
    rep.bias_estimate = tail_base * std::pow(2.0, -bias_fit.alpha) * geom;
  } else {
    rep.bias_estimate =
        std::pow(2.0, bias_fit.log2_c - bias_fit.alpha * (finest + 1)) * geom;
  }
  rep.budget = {rep.bias_estimate * rep.bias_estimate, variance_sum};
  rep.total_cost = total_cost;
  double modeled = 0;
  for (const auto& rec : final_records)
    modeled += static_cast<double>(rec.n) * rec.r * rec.cost_per_sample;
  rep.modeled_cost = modeled;
  rep.success = variance_ok;
  if (!variance_ok)
    rep.failure_reason = "variance budget not met after " +
                         std::to_string(params.allocation_rounds) + " allocation rounds";
  return rep;
}

Engine make_engine(DriverKind kind, const ProblemSpec& spec, const DriverParams& params) {
  Engine eng;
  eng.kind = kind;
  eng.spec = &spec;
  eng.params = &params;
  eng.qmc = kind == DriverKind::mlqmc || kind == DriverKind::miqmc;
  eng.multi_index = kind == DriverKind::mimc || kind == DriverKind::miqmc;
  const SolverConfig& solver = params.solver;
  switch (kind) {
    case DriverKind::mlmc:
    case DriverKind::mlqmc:
      eng.diff = [&spec, &solver](const std::vector<int>& key, std::span<const double> y,
                                  double* cost) {
        return mlmc_difference(spec, key[0], y, solver, cost);
      };
      break;
    case DriverKind::mimc:
    case DriverKind::miqmc:
      eng.diff = [&spec, &solver](const std::vector<int>& key, std::span<const double> y,
                                  double* cost) {
        return mimc_difference(spec, MultiIndex(key), y, solver, cost);
      };
      break;
    case DriverKind::mlmc_comb:
      eng.diff = [&spec, &solver](const std::vector<int>& key, std::span<const double> y,
                                  double* cost) {
        return combination_difference(spec, key[0], y, solver, cost);
      };
      break;
    case DriverKind::mc:
      eng.diff = [&spec, &solver](const std::vector<int>& key, std::span<const double> y,
                                  double* cost) {
        MemoEvaluator memo(pde_evaluator(spec, y, solver));
        const double val = memo(MultiIndex::isotropic(spec.d, key[0]));
        if (cost) *cost = memo.total_cost();
        return val;
      };
      break;
  }
  if (eng.qmc && !params.lattice)
    throw ConfigError(driver_name(kind) + " requires a lattice rule");
  return eng;
}

}  // namespace

EstimatorReport mlmc_run(const ProblemSpec& spec, double eps, const DriverParams& params) {
  return engine_run(make_engine(DriverKind::mlmc, spec, params), eps);
}

EstimatorReport mimc_run(const ProblemSpec& spec, double eps, const DriverParams& params) {
  return engine_run(make_engine(DriverKind::mimc, spec, params), eps);
}

EstimatorReport mlqmc_run(const ProblemSpec& spec, double eps, const DriverParams& params) {
  return engine_run(make_engine(DriverKind::mlqmc, spec, params), eps);
}

EstimatorReport miqmc_run(const ProblemSpec& spec, double eps, const DriverParams& params) {
  return engine_run(make_engine(DriverKind::miqmc, spec, params), eps);
}

EstimatorReport mlmc_combination_run(const ProblemSpec& spec, double eps,
                                     const DriverParams& params) {
  return engine_run(make_engine(DriverKind::mlmc_comb, spec, params), eps);
}

EstimatorReport mc_run(const ProblemSpec& spec, double eps, const DriverParams& params) {
  // single-level MC: screening over levels picks L, then N = 2 Var / eps^2
  Engine eng = make_engine(DriverKind::mc, spec, params);
  EstimatorReport rep;
  rep.driver = DriverKind::mc;
  rep.epsilon = eps;
  double total_cost = 0;

  const int screen_l = std::min(params.screening_level, params.max_level);
  std::vector<LevelRecord> screen;
  for (int l = 0; l <= screen_l; ++l) {
    LevelRecord rec = sample_key_mc(eng, {l}, params.n_screen, Stream::screening, 0);
    total_cost += rec.total_cost;
    screen.push_back(std::move(rec));
  }

  int finest = params.fixed_level;
  BiasFit bias_fit{1.0, 0.0};
  if (finest < 0) {
    // weak-error decay of consecutive level means
    std::vector<std::pair<int, double>> diffs;
    for (std::size_t l = 1; l < screen.size(); ++l)
      diffs.emplace_back(static_cast<int>(l),
                         std::abs(screen[l].mean - screen[l - 1].mean));
    try {
      bias_fit = fit_bias_tail(diffs);
      finest = select_finest_level(bias_fit, eps, params.max_level);
    } catch (const std::exception& e) {
      return failure_report(eng, eps, e.what(), std::move(screen), total_cost);
    }
  }
  rep.finest_level = finest;

  double variance = std::max(screen.back().raw_variance, kVarianceFloor);
  LevelRecord final_rec;
  bool ok = false;
  for (int round = 0; round < params.allocation_rounds && !ok; ++round) {
    const std::int64_t n = std::max<std::int64_t>(
        2, static_cast<std::int64_t>(std::ceil(2.0 * variance / (eps * eps))));
    final_rec = sample_key_mc(eng, {finest}, n, Stream::final_pass,
                              1000 + static_cast<std::uint64_t>(round));
    total_cost += final_rec.total_cost;
    ok = final_rec.variance_of_mean <= 0.5 * eps * eps * 1.05;
    variance = std::max(variance, final_rec.raw_variance) * 1.2;
  }

  rep.levels = {final_rec};
  rep.estimate = final_rec.mean;
  const double geom = 1.0 / (1.0 - std::pow(2.0, -bias_fit.alpha));
  rep.bias_estimate =
      std::pow(2.0, bias_fit.log2_c - bias_fit.alpha * (finest + 1)) * geom;
  rep.budget = {rep.bias_estimate * rep.bias_estimate, final_rec.variance_of_mean};
  rep.total_cost = total_cost;
  rep.modeled_cost = static_cast<double>(final_rec.n) * final_rec.cost_per_sample;
  rep.success = ok;
  if (!ok) rep.failure_reason = "variance budget not met";
  return rep;
}

ScreenResult screen_driver(DriverKind driver, const ProblemSpec& spec,
                           const DriverParams& params) {
  Engine eng = make_engine(driver, spec, params);
  ScreenResult out;
  const int screen_l = std::min(params.screening_level, params.max_level);
  for (const auto& key : eng.keys(screen_l)) {
    LevelRecord rec = eng.qmc
        ? sample_key(eng, key, params.n_screen_points, params.screen_r,
                     Stream::screening, 0)
        : sample_key(eng, key, params.n_screen, 1, Stream::screening, 0);
    out.total_cost += rec.total_cost;
    out.records.push_back(std::move(rec));
  }
  try {
    RateFit fit = fit_rates(out.records, eng.multi_index ? Abscissa::order1_norm
                                                         : Abscissa::scalar_level);
    if (eng.qmc) {
      std::vector<std::pair<double, double>> var_vs_n;
      const std::vector<int> key0 = eng.multi_index
          ? std::vector<int>(static_cast<std::size_t>(spec.d), 0)
          : std::vector<int>{0};
      for (std::int64_t n : {32, 64, 128, 256}) {
        LevelRecord rec = sample_key(eng, key0, n, params.screen_r, Stream::screening,
                                     1 + static_cast<std::uint64_t>(n));
        out.total_cost += rec.total_cost;
        var_vs_n.emplace_back(static_cast<double>(n), rec.variance_of_mean);
      }
      double se = 0;
      bool inflated = false;
      fit.p = fit_qmc_exponent(var_vs_n, &se, &inflated);
      fit.p_se = se;
      fit.p_inflated_se = inflated;
      fit.has_p = true;
    }
    out.fit = fit;
  } catch (const std::exception& e) {
    out.fit_note = e.what();
  }
  return out;
}

EstimatorReport run_driver(DriverKind driver, const ProblemSpec& spec, double eps,
                           const DriverParams& params) {
  switch (driver) {
    case DriverKind::mc: return mc_run(spec, eps, params);
    case DriverKind::mlmc: return mlmc_run(spec, eps, params);
    case DriverKind::mimc: return mimc_run(spec, eps, params);
    case DriverKind::mlqmc: return mlqmc_run(spec, eps, params);
    case DriverKind::miqmc: return miqmc_run(spec, eps, params);
    case DriverKind::mlmc_comb: return mlmc_combination_run(spec, eps, params);
  }
  throw std::invalid_argument("unknown driver");
}

}  // namespace mluq
