#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mluq {

// Per-(multi-)level statistics. `key` is a singleton {l} for scalar-level
// drivers and the full multi-index for MIMC/MIQMC.
struct LevelRecord {
  std::vector<int> key;
  double mean = 0;
  double raw_variance = 0;      // per-sample variance (MC) or per-evaluation
  double variance_of_mean = 0;  // estimator variance contribution
  double cost_per_sample = 0;   // measured cost units
  std::int64_t n = 1;
  int r = 1;                    // randomization steps; 1 for pure MC
  double total_cost = 0;

  int abscissa_norm() const {
    int sum = 0;
    for (int k : key) sum += k;
    return sum;
  }
  std::string key_string() const;
};

struct FitLine {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  int points = 0;
};

// Unweighted least squares y = slope*x + intercept.
FitLine linear_fit(std::span<const double> x, std::span<const double> y);

enum class Abscissa { scalar_level, order1_norm };

struct RateFit {
  double alpha = 0, beta = 0, gamma = 0;  // positive-rate conventions
  double p = 1;                           // QMC variance-vs-N exponent
  double alpha_se = 0, beta_se = 0, gamma_se = 0, p_se = 0;
  double alpha_intercept = 0;  // log2 scale of |mean| at abscissa 0
  std::vector<int> levels_used;
  bool sign_alternating = false;  // alpha fitted on |mean| with mixed signs
  bool p_inflated_se = false;     // non-monotone variance-vs-N data
  bool has_p = false;
};

// Log2 least-squares fits of |mean|, raw_variance and cost_per_sample against
// the abscissa. Requires >= 3 usable records; near-zero means (|mean| below
// 10x its standard error) are dropped from the alpha fit.
RateFit fit_rates(const std::vector<LevelRecord>& records, Abscissa abscissa);

// Negated slope of log2(variance_of_mean) vs log2(N); sets inflated_se when
// the variance sequence is non-monotone.
double fit_qmc_exponent(const std::vector<std::pair<double, double>>& variance_vs_n,
                        double* se = nullptr, bool* inflated_se = nullptr);

enum class DriverKind { mc, mlmc, mimc, mlqmc, miqmc, mlmc_comb };

std::string driver_name(DriverKind k);
std::optional<DriverKind> parse_driver(const std::string& name);

struct Verdict {
  std::string regime;              // "beta > p*gamma" etc.
  double predicted_cost_exponent;  // exponent r in cost ~ eps^{-r}
  std::string log_factor;          // extra |log eps| power, "" if none
  double boundary_band;            // |beta - p*gamma| tolerance used
  bool near_boundary = false;
};

// Classifies the meta-theorem cost regime for the driver and predicts the
// cost-vs-eps exponent. |beta - p*gamma| within 2 standard errors is treated
// as the equality regime.
Verdict theorem_verdict(const RateFit& fit, int d, DriverKind driver);

}  // namespace mluq
