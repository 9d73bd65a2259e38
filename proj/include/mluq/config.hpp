#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mluq/estimators.hpp"

namespace mluq {

// Run configuration: INI-style file with flat key sections, overridable by
// command-line flags. Seed is mandatory; there is no ambient entropy.
struct RunConfig {
  // [problem]
  std::string problem_name = "affine-sine";
  int d = 1;
  int s = 4;
  double kappa = 0.9;

  // [run]
  DriverKind driver = DriverKind::mlmc;
  std::vector<double> eps;
  std::optional<std::uint64_t> seed;
  int r = 32;
  int max_level = 12;
  int screening_level = 4;
  std::int64_t n_screen = 200;
  int screen_r = 16;
  std::int64_t n_screen_points = 32;
  int threads = 0;  // 0 = machine parallelism

  // [solver]
  SolverConfig solver;

  // [lattice]
  LatticeSource lattice_source = LatticeSource::korobov_search;
  std::string lattice_file;
  std::uint64_t lattice_n = 1 << 12;

  // [output]
  std::string out_dir = "out";
};

// Parses the file (empty path = defaults only) and applies key=value
// overrides. Throws ConfigError with key diagnostics on bad input.
RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>&
                           overrides = {});

// Validates cross-field invariants (driver present, eps in (0, 1/e), seed
// set, lattice availability for QMC drivers). Throws ConfigError.
void validate_config(const RunConfig& config);

// Canonical serialization of every field; hashed for reproducibility audits.
std::string canonical_config_string(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

DriverParams make_driver_params(const RunConfig& config);
ProblemSpec make_config_problem(const RunConfig& config);
LatticeRule make_config_lattice(const RunConfig& config);

}  // namespace mluq
