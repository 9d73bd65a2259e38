// Compares the serial reference sampling loop against the OpenMP-parallel
// one on identical work and checks that the reductions agree bitwise.
#include <chrono>
#include <cstdio>
#include <vector>

#include "mluq/estimators.hpp"
#include "mluq/parallel.hpp"

using namespace mluq;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// one batch of coupled level-difference samples; fixed reduction order makes
// the sum independent of the execution policy
std::pair<double, double> run_batch(const ProblemSpec& spec, int level,
                                    std::int64_t n, ExecutionPolicy exec) {
  const SolverConfig solver;
  const RngKey key = make_key(7, Stream::test, static_cast<std::uint64_t>(level));
  std::vector<double> values(static_cast<std::size_t>(n));
  const double t0 = now_seconds();
  for_each_index(n, exec, [&](std::int64_t i) {
    std::vector<double> y(static_cast<std::size_t>(spec.s));
    for (int j = 0; j < spec.s; ++j)
      y[static_cast<std::size_t>(j)] = mc_coordinate(key, i, j);
    values[static_cast<std::size_t>(i)] = mlmc_difference(spec, level, y, solver);
  });
  const double elapsed = now_seconds() - t0;
  double sum = 0;
  for (double v : values) sum += v;
  return {sum, elapsed};
}

}  // namespace

int main() {
  const ProblemSpec spec = make_problem("affine-sine", 2, 4);
  std::printf("%-8s %-8s %-10s %-12s %-12s %-8s\n", "level", "samples", "serial(s)",
              "openmp(s)", "speedup", "match");
  bool all_match = true;
  for (int level = 2; level <= 4; ++level) {
    const std::int64_t n = level == 4 ? 64 : 256;
    const auto [sum_s, t_s] = run_batch(spec, level, n, ExecutionPolicy::serial);
    const auto [sum_p, t_p] = run_batch(spec, level, n, ExecutionPolicy::openmp);
    const bool match = sum_s == sum_p;  // bitwise: same values, same order
    all_match = all_match && match;
    std::printf("%-8d %-8lld %-10.3f %-12.3f %-12.2f %-8s\n", level,
                static_cast<long long>(n), t_s, t_p, t_s / t_p,
                match ? "yes" : "NO");
  }
  std::printf("threads available: %d\n", max_threads());
  return all_match ? 0 : 1;
}
