#include "mluq/report_io.hpp"

#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace mluq {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::json record_json(const LevelRecord& rec) {
  return {
      {"key", rec.key},
      {"mean", rec.mean},
      {"raw_variance", rec.raw_variance},
      {"variance_of_mean", rec.variance_of_mean},
      {"cost_per_sample", rec.cost_per_sample},
      {"N", rec.n},
      {"R", rec.r},
      {"total_cost", rec.total_cost},
  };
}

nlohmann::json report_json(const EstimatorReport& rep) {
  nlohmann::json j = {
      {"driver", driver_name(rep.driver)},
      {"eps", rep.epsilon},
      {"estimate", rep.estimate},
      {"finest_level", rep.finest_level},
      {"bias_estimate", rep.bias_estimate},
      {"bias_sq", rep.budget.bias_sq},
      {"variance", rep.budget.variance},
      {"total_cost", rep.total_cost},
      {"modeled_cost", rep.modeled_cost},
      {"success", rep.success},
  };
  if (!rep.failure_reason.empty()) j["failure_reason"] = rep.failure_reason;
  if (rep.fitted_rates) {
    const RateFit& f = *rep.fitted_rates;
    j["rates"] = {{"alpha", f.alpha}, {"alpha_se", f.alpha_se},
                  {"beta", f.beta},   {"beta_se", f.beta_se},
                  {"gamma", f.gamma}, {"gamma_se", f.gamma_se},
                  {"p", f.p},         {"p_se", f.p_se}};
    const Verdict v = theorem_verdict(f, 0, rep.driver);
    j["verdict"] = {{"regime", v.regime},
                    {"predicted_cost_exponent", v.predicted_cost_exponent},
                    {"log_factor", v.log_factor},
                    {"near_boundary", v.near_boundary}};
  }
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& rec : rep.levels) levels.push_back(record_json(rec));
  j["levels"] = levels;
  return j;
}

}  // namespace

void write_reports_jsonl(std::ostream& os, const ResultBundle& bundle) {
  for (const auto& rep : bundle.reports) {
    nlohmann::json j = report_json(rep);
    j["config_hash"] = bundle.config_hash;
    os << j.dump() << "\n";
  }
}

void write_level_csv(std::ostream& os, const std::vector<LevelRecord>& records) {
  os << "key,mean,raw_variance,variance_of_mean,cost_per_sample,N,R,total_cost\n";
  for (const auto& rec : records) {
    os << "\"" << rec.key_string() << "\"," << format_double(rec.mean) << ","
       << format_double(rec.raw_variance) << ","
       << format_double(rec.variance_of_mean) << ","
       << format_double(rec.cost_per_sample) << "," << rec.n << "," << rec.r << ","
       << format_double(rec.total_cost) << "\n";
  }
}

std::vector<LevelRecord> read_level_csv(std::istream& is) {
  std::vector<LevelRecord> out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    LevelRecord rec;
    std::string key_part;
    std::size_t pos = 0;
    if (line[0] == '"') {
      const auto close = line.find('"', 1);
      if (close == std::string::npos) throw ConfigError("bad csv row: " + line);
      key_part = line.substr(1, close - 1);
      pos = close + 2;  // skip quote and comma
    } else {
      const auto comma = line.find(',');
      key_part = line.substr(0, comma);
      pos = comma + 1;
    }
    // parse "(a,b)" or plain integer keys
    std::string digits;
    for (char ch : key_part) {
      if (ch == '(' || ch == ')') continue;
      if (ch == ',') {
        rec.key.push_back(std::stoi(digits));
        digits.clear();
      } else {
        digits += ch;
      }
    }
    if (!digits.empty()) rec.key.push_back(std::stoi(digits));
    std::stringstream rest(line.substr(pos));
    std::string cell;
    std::vector<double> vals;
    while (std::getline(rest, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 7) throw ConfigError("bad csv row (need 8 columns): " + line);
    rec.mean = vals[0];
    rec.raw_variance = vals[1];
    rec.variance_of_mean = vals[2];
    rec.cost_per_sample = vals[3];
    rec.n = static_cast<std::int64_t>(vals[4]);
    rec.r = static_cast<int>(vals[5]);
    rec.total_cost = vals[6];
    out.push_back(std::move(rec));
  }
  return out;
}

void write_summary(std::ostream& os, const ResultBundle& bundle) {
  os << "driver " << driver_name(bundle.config.driver) << ", problem "
     << bundle.config.problem_name << " d=" << bundle.config.d
     << " s=" << bundle.config.s << ", seed "
     << (bundle.config.seed ? *bundle.config.seed : 0) << ", config hash "
     << std::hex << bundle.config_hash << std::dec << "\n";
  for (const auto& rep : bundle.reports) {
    os << "  eps " << format_double(rep.epsilon) << ": estimate "
       << format_double(rep.estimate) << ", L " << rep.finest_level << ", bias "
       << format_double(rep.bias_estimate) << ", variance "
       << format_double(rep.budget.variance) << ", cost "
       << format_double(rep.total_cost) << (rep.success ? "" : "  [FAILED]");
    if (!rep.failure_reason.empty()) os << " (" << rep.failure_reason << ")";
    os << "\n";
    for (const auto& rec : rep.levels) {
      os << "    " << rec.key_string() << ": mean " << format_double(rec.mean)
         << ", var " << format_double(rec.raw_variance) << ", N " << rec.n << ", R "
         << rec.r << ", cost/sample " << format_double(rec.cost_per_sample) << "\n";
    }
  }
}

}  // namespace mluq
