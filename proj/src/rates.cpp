#include "mluq/rates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace mluq {

std::string LevelRecord::key_string() const {
  if (key.size() == 1) return std::to_string(key[0]);
  std::string out = "(";
  for (std::size_t j = 0; j < key.size(); ++j) {
    if (j) out += ",";
    out += std::to_string(key[j]);
  }
  return out + ")";
}

FitLine linear_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n)
    throw std::invalid_argument("linear_fit: need >= 2 matching points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("linear_fit: degenerate abscissa");
  FitLine fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = static_cast<int>(n);
  if (n > 2) {
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.slope_se = std::sqrt(ss_res / (static_cast<double>(n) - 2.0) / sxx);
  }
  return fit;
}

namespace {

double log2_safe(double v) { return std::log2(v); }

int record_abscissa(const LevelRecord& rec, Abscissa mode) {
  if (mode == Abscissa::scalar_level && rec.key.size() == 1) return rec.key[0];
  return rec.abscissa_norm();
}

}  // namespace

RateFit fit_rates(const std::vector<LevelRecord>& records, Abscissa abscissa) {
  if (records.size() < 3)
    throw std::invalid_argument("fit_rates: need at least 3 records");

  RateFit fit;
  // default window: drop abscissa 0 (pre-asymptotic), use up to 6 levels
  int max_abs = 0;
  for (const auto& r : records) max_abs = std::max(max_abs, record_abscissa(r, abscissa));
  const int lo = max_abs >= 3 ? 1 : 0;
  const int hi = std::min(max_abs, lo + 6);

  bool positive = false, negative = false;
  std::vector<double> ax, am, bx, bv, cx, cc;
  std::map<int, bool> used;
  for (const auto& rec : records) {
    const int l = record_abscissa(rec, abscissa);
    if (l < lo || l > hi) continue;
    if (rec.mean > 0) positive = true;
    if (rec.mean < 0) negative = true;
    // means indistinguishable from zero carry no rate information
    const double mean_se =
        rec.n > 1 ? std::sqrt(std::max(rec.variance_of_mean, 0.0)) : 0.0;
    if (rec.mean != 0 && std::abs(rec.mean) >= 10.0 * mean_se) {
      ax.push_back(l);
      am.push_back(log2_safe(std::abs(rec.mean)));
      used[l] = true;
    }
    if (rec.raw_variance > 0) {
      bx.push_back(l);
      bv.push_back(log2_safe(rec.raw_variance));
    }
    if (rec.cost_per_sample > 0) {
      cx.push_back(l);
      cc.push_back(log2_safe(rec.cost_per_sample));
    }
  }
  if (ax.size() < 2 || bx.size() < 2 || cx.size() < 2)
    throw std::invalid_argument("fit_rates: too few usable records after filtering");

  fit.sign_alternating = positive && negative;
  const FitLine fa = linear_fit(ax, am);
  const FitLine fb = linear_fit(bx, bv);
  const FitLine fc = linear_fit(cx, cc);
  fit.alpha = -fa.slope;
  fit.alpha_se = fa.slope_se;
  fit.alpha_intercept = fa.intercept;
  fit.beta = -fb.slope;
  fit.beta_se = fb.slope_se;
  fit.gamma = fc.slope;
  fit.gamma_se = fc.slope_se;
  for (auto& [l, _] : used) fit.levels_used.push_back(l);
  return fit;
}

double fit_qmc_exponent(const std::vector<std::pair<double, double>>& variance_vs_n,
                        double* se, bool* inflated_se) {
  if (variance_vs_n.size() < 3)
    throw std::invalid_argument("fit_qmc_exponent: need >= 3 points");
  std::vector<double> x, y;
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& [n, v] : variance_vs_n) {
    if (v <= 0) continue;
    if (v > prev) monotone = false;
    prev = v;
    x.push_back(std::log2(n));
    y.push_back(std::log2(v));
  }
  if (x.size() < 3)
    throw std::invalid_argument("fit_qmc_exponent: too few positive variances");
  FitLine fit = linear_fit(x, y);
  double slope_se = fit.slope_se;
  if (!monotone) slope_se = std::max(slope_se * 2.0, 0.5);
  if (se) *se = slope_se;
  if (inflated_se) *inflated_se = !monotone;
  return -fit.slope;
}

std::string driver_name(DriverKind k) {
  switch (k) {
    case DriverKind::mc: return "mc";
    case DriverKind::mlmc: return "mlmc";
    case DriverKind::mimc: return "mimc";
    case DriverKind::mlqmc: return "mlqmc";
    case DriverKind::miqmc: return "miqmc";
    case DriverKind::mlmc_comb: return "mlmc-comb";
  }
  return "?";
}

std::optional<DriverKind> parse_driver(const std::string& name) {
  for (DriverKind k : {DriverKind::mc, DriverKind::mlmc, DriverKind::mimc,
                       DriverKind::mlqmc, DriverKind::miqmc, DriverKind::mlmc_comb}) {
    if (driver_name(k) == name) return k;
  }
  return std::nullopt;
}

Verdict theorem_verdict(const RateFit& fit, int d, DriverKind driver) {
  (void)d;
  const bool qmc = driver == DriverKind::mlqmc || driver == DriverKind::miqmc;
  const double p = qmc ? fit.p : 1.0;
  const double p_se = qmc ? fit.p_se : 0.0;

  Verdict v;
  v.boundary_band =
      2.0 * (fit.beta_se + p * fit.gamma_se + fit.gamma * p_se);
  const double gap = fit.beta - p * fit.gamma;

  if (std::abs(gap) <= v.boundary_band) {
    v.regime = qmc ? "beta = p*gamma" : "beta = gamma";
    v.near_boundary = true;
    v.predicted_cost_exponent = 2.0 / p;
    v.log_factor = qmc ? "|log eps|^{(p+1)/p}" : "|log eps|^2";
  } else if (gap > 0) {
    v.regime = qmc ? "beta > p*gamma" : "beta > gamma";
    v.predicted_cost_exponent = 2.0 / p;
  } else {
    v.regime = qmc ? "beta < p*gamma" : "beta < gamma";
    v.predicted_cost_exponent = 2.0 / p + (p * fit.gamma - fit.beta) / (p * fit.alpha);
  }
  return v;
}

}  // namespace mluq
