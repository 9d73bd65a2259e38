#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mluq/config.hpp"
#include "mluq/estimators.hpp"

namespace mluq {

struct ResultBundle {
  std::vector<EstimatorReport> reports;
  RunConfig config;
  std::uint64_t config_hash = 0;
  double wall_seconds = 0;
  std::string tool_version;
};

// One JSON object per line, one line per report.
void write_reports_jsonl(std::ostream& os, const ResultBundle& bundle);

// Flat table: key,mean,raw_variance,variance_of_mean,cost_per_sample,N,R,total_cost
void write_level_csv(std::ostream& os, const std::vector<LevelRecord>& records);
std::vector<LevelRecord> read_level_csv(std::istream& is);

// Human summary to stdout.
void write_summary(std::ostream& os, const ResultBundle& bundle);

std::string format_double(double v);  // shortest round-trip formatting

}  // namespace mluq
