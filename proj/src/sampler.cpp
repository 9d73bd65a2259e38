#include "mluq/sampler.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mluq/problem.hpp"

namespace mluq {

void LatticeRule::validate() const {
  if (s < 1 || n < 1 || z.size() != static_cast<std::size_t>(s))
    throw ConfigError("lattice rule: inconsistent dimensions");
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z[j] < 1 || z[j] >= n)
      throw ConfigError("lattice rule: z_" + std::to_string(j + 1) +
                        " outside [1, N)");
    if (std::gcd(z[j], n) != 1)
      throw ConfigError("lattice rule: gcd(z_" + std::to_string(j + 1) +
                        ", N) != 1");
  }
}

std::vector<std::vector<double>> mc_points(int s, std::int64_t n, const RngKey& key) {
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<double> pt(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) pt[static_cast<std::size_t>(j)] = mc_coordinate(key, i, j);
    out.push_back(std::move(pt));
  }
  return out;
}

void lattice_point(const LatticeRule& rule, std::uint64_t i,
                   std::span<const double> shift, std::span<double> out) {
  const double inv_n = 1.0 / static_cast<double>(rule.n);
  for (int j = 0; j < rule.s; ++j) {
    const std::uint64_t zj = rule.z[static_cast<std::size_t>(j)] % rule.n;
    const double frac_iz = static_cast<double>((i % rule.n) * zj % rule.n) * inv_n;
    double v = frac_iz + shift[static_cast<std::size_t>(j)];
    v -= std::floor(v);
    out[static_cast<std::size_t>(j)] = v - 0.5;
  }
}

std::vector<std::vector<double>> lattice_points(const LatticeRule& rule,
                                                std::span<const double> shift) {
  rule.validate();
  std::vector<std::vector<double>> out(static_cast<std::size_t>(rule.n),
                                       std::vector<double>(static_cast<std::size_t>(rule.s)));
  for (std::uint64_t i = 1; i <= rule.n; ++i)
    lattice_point(rule, i, shift, out[static_cast<std::size_t>(i - 1)]);
  return out;
}

std::vector<double> random_shift(int s, const RngKey& key, std::uint64_t k) {
  std::vector<double> shift(static_cast<std::size_t>(s));
  const RngKey kk = key.with_index(k);
  for (int j = 0; j < s; ++j)
    shift[static_cast<std::size_t>(j)] = kk.uniform_open(static_cast<std::uint64_t>(j));
  return shift;
}

ShiftStats shift_statistics(std::span<const double> q) {
  const std::size_t r = q.size();
  if (r < 2)
    throw std::invalid_argument("shift_statistics: need at least 2 shift estimates");
  double mean = 0;
  for (double v : q) mean += v;
  mean /= static_cast<double>(r);
  double ss = 0;
  for (double v : q) ss += (v - mean) * (v - mean);
  return {mean, ss / (static_cast<double>(r) * static_cast<double>(r - 1))};
}

double lattice_score(std::span<const std::uint64_t> z, std::uint64_t n, int s) {
  // squared worst-case error in the weighted space with gamma_j = j^-2;
  // kernel 2 pi^2 B_2(x) with B_2 the second Bernoulli polynomial
  constexpr double two_pi_sq = 2.0 * 9.869604401089358;
  const double inv_n = 1.0 / static_cast<double>(n);
  double acc = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    double prod = 1;
    for (int j = 0; j < s; ++j) {
      const double xj =
          static_cast<double>(i * (z[static_cast<std::size_t>(j)] % n) % n) * inv_n;
      const double b2 = xj * xj - xj + 1.0 / 6.0;
      const double gamma = 1.0 / (static_cast<double>(j + 1) * static_cast<double>(j + 1));
      prod *= 1.0 + gamma * two_pi_sq * b2;
    }
    acc += prod;
  }
  return acc * inv_n - 1.0;
}

LatticeRule korobov_search(int s, std::uint64_t n, std::uint64_t search_cap) {
  if (n < 2) throw ConfigError("korobov_search: N must be >= 2");
  LatticeRule best;
  best.s = s;
  best.n = n;
  best.source = LatticeSource::korobov_search;
  double best_score = std::numeric_limits<double>::infinity();
  std::uint64_t tried = 0;
  std::vector<std::uint64_t> z(static_cast<std::size_t>(s));
  for (std::uint64_t a = 1; a < n; a += 2) {
    if (tried >= search_cap) {
      best.search_exhausted = true;
      break;
    }
    ++tried;
    std::uint64_t pw = 1;
    for (int j = 0; j < s; ++j) {
      z[static_cast<std::size_t>(j)] = pw;
      pw = pw * a % n;
    }
    const double score = lattice_score(z, n, s);
    if (score < best_score) {
      best_score = score;
      best.z = z;
    }
  }
  if (best.z.empty()) throw ConfigError("korobov_search: no candidate found");
  best.validate();
  return best;
}

LatticeRule load_lattice_file(const std::string& path, int s, std::uint64_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("lattice file not readable: " + path);
  LatticeRule rule;
  rule.s = s;
  rule.n = n;
  rule.source = LatticeSource::file;
  std::string line;
  while (std::getline(in, line) && rule.z.size() < static_cast<std::size_t>(s)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::uint64_t v;
    if (!(ls >> v))
      throw ConfigError("lattice file: non-integer line in " + path);
    rule.z.push_back(v % n);  // reduce against this run's N; validate() rejects 0
  }
  if (rule.z.size() < static_cast<std::size_t>(s))
    throw ConfigError("lattice file: fewer than s = " + std::to_string(s) +
                      " entries in " + path);
  rule.validate();
  return rule;
}

}  // namespace mluq
