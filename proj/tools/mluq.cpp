// Command-line front end: screen / run / verify / rates over a configuration
// file with flag overrides. Exit codes: 0 success, 2 configuration error,
// 3 estimator failure, 4 verification failure.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mluq/config.hpp"
#include "mluq/report_io.hpp"
#include "mluq/verify.hpp"

namespace {

constexpr const char* kVersion = "mluq 1.0";

struct CommonFlags {
  std::string config_path;
  std::string driver;
  std::string eps;
  std::string seed;
  std::string dim;
  std::string sdim;
  std::string out;
  std::string lattice_file;
  std::string threads;
  std::string problem;
  std::string fixed_level;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "configuration file (INI-style sections)");
  cmd->add_option("--driver", f.driver, "estimator driver: mc|mlmc|mimc|mlqmc|miqmc|mlmc-comb");
  cmd->add_option("--eps", f.eps, "accuracy target(s), comma separated");
  cmd->add_option("--seed", f.seed, "run seed (mandatory; no ambient entropy)");
  cmd->add_option("--dim", f.dim, "spatial dimension d");
  cmd->add_option("--sdim", f.sdim, "stochastic dimension s");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--lattice-file", f.lattice_file, "generating-vector file (one integer per line)");
  cmd->add_option("--threads", f.threads, "worker count (1 = serial)");
  cmd->add_option("--problem", f.problem, "problem catalog name");
}

mluq::RunConfig load_config(const CommonFlags& f) {
  std::vector<std::pair<std::string, std::string>> overrides;
  if (!f.driver.empty()) overrides.emplace_back("run.driver", f.driver);
  if (!f.eps.empty()) overrides.emplace_back("run.eps", f.eps);
  if (!f.seed.empty()) overrides.emplace_back("run.seed", f.seed);
  if (!f.dim.empty()) overrides.emplace_back("problem.d", f.dim);
  if (!f.sdim.empty()) overrides.emplace_back("problem.s", f.sdim);
  if (!f.out.empty()) overrides.emplace_back("output.dir", f.out);
  if (!f.lattice_file.empty()) {
    overrides.emplace_back("lattice.file", f.lattice_file);
    overrides.emplace_back("lattice.source", "file");
  }
  if (!f.threads.empty()) overrides.emplace_back("run.threads", f.threads);
  if (!f.problem.empty()) overrides.emplace_back("problem.name", f.problem);
  return mluq::parse_config(f.config_path, overrides);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mluq::ConfigError("cannot write output file: " + path.string());
  out << content;
}

int cmd_run(const CommonFlags& flags) {
  mluq::RunConfig cfg = load_config(flags);
  mluq::validate_config(cfg);
  const mluq::ProblemSpec spec = mluq::make_config_problem(cfg);
  const mluq::DriverParams params = mluq::make_driver_params(cfg);

  mluq::ResultBundle bundle;
  bundle.config = cfg;
  bundle.config_hash = mluq::config_hash(cfg);
  bundle.tool_version = kVersion;
  const auto t0 = std::chrono::steady_clock::now();
  for (double eps : cfg.eps)
    bundle.reports.push_back(mluq::run_driver(cfg.driver, spec, eps, params));
  bundle.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ostringstream os;
    mluq::write_reports_jsonl(os, bundle);
    write_file(std::filesystem::path(cfg.out_dir) / "results.jsonl", os.str());
  }
  for (std::size_t i = 0; i < bundle.reports.size(); ++i) {
    std::ostringstream os;
    mluq::write_level_csv(os, bundle.reports[i].levels);
    write_file(std::filesystem::path(cfg.out_dir) /
                   ("levels_" + std::to_string(i) + ".csv"),
               os.str());
  }
  mluq::write_summary(std::cout, bundle);

  for (const auto& rep : bundle.reports)
    if (!rep.success) {
      std::cerr << "estimator failure: " << rep.failure_reason << "\n";
      return 3;
    }
  return 0;
}

int cmd_screen(const CommonFlags& flags) {
  mluq::RunConfig cfg = load_config(flags);
  if (cfg.eps.empty()) cfg.eps.push_back(1e-2);  // screening needs no target
  mluq::validate_config(cfg);
  const mluq::ProblemSpec spec = mluq::make_config_problem(cfg);
  const mluq::DriverParams params = mluq::make_driver_params(cfg);
  const mluq::ScreenResult res = mluq::screen_driver(cfg.driver, spec, params);

  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ostringstream os;
    mluq::write_level_csv(os, res.records);
    write_file(std::filesystem::path(cfg.out_dir) / "screen.csv", os.str());
  }

  std::cout << "screen: driver " << mluq::driver_name(cfg.driver) << ", "
            << res.records.size() << " keys, cost "
            << mluq::format_double(res.total_cost) << "\n";
  for (const auto& rec : res.records)
    std::cout << "  " << rec.key_string() << ": mean "
              << mluq::format_double(rec.mean) << ", var "
              << mluq::format_double(rec.raw_variance) << ", cost/sample "
              << mluq::format_double(rec.cost_per_sample) << ", N " << rec.n
              << ", R " << rec.r << "\n";
  if (res.fit) {
    const mluq::RateFit& f = *res.fit;
    std::cout << "rates: alpha " << mluq::format_double(f.alpha) << " (se "
              << mluq::format_double(f.alpha_se) << "), beta "
              << mluq::format_double(f.beta) << " (se "
              << mluq::format_double(f.beta_se) << "), gamma "
              << mluq::format_double(f.gamma) << " (se "
              << mluq::format_double(f.gamma_se) << ")";
    if (f.has_p)
      std::cout << ", p " << mluq::format_double(f.p) << " (se "
                << mluq::format_double(f.p_se) << ")";
    std::cout << "\n";
  } else {
    std::cout << "rates: unavailable (" << res.fit_note << ")\n";
  }
  return 0;
}

int cmd_verify(const CommonFlags& flags) {
  mluq::RunConfig cfg = load_config(flags);
  if (!cfg.seed) cfg.seed = 1;  // verification is deterministic regardless
  const mluq::VerifyReport rep = mluq::run_verification(cfg);
  for (const auto& item : rep.items) {
    std::cout << (item.passed ? "PASS" : "FAIL") << "  " << item.name;
    if (!item.detail.empty()) std::cout << "  (" << item.detail << ")";
    std::cout << "\n";
  }
  if (!rep.all_passed()) {
    std::cerr << "verification failed\n";
    return 4;
  }
  std::cout << "all checks passed\n";
  return 0;
}

int cmd_rates(const std::string& table_path, const std::string& abscissa) {
  std::ifstream in(table_path);
  if (!in) throw mluq::ConfigError("cannot open table: " + table_path);
  const auto records = mluq::read_level_csv(in);
  const mluq::Abscissa ab = abscissa == "norm" ? mluq::Abscissa::order1_norm
                                               : mluq::Abscissa::scalar_level;
  mluq::RateFit fit;
  try {
    fit = mluq::fit_rates(records, ab);
  } catch (const std::exception& e) {
    std::cerr << "estimator failure: " << e.what() << "\n";
    return 3;
  }
  std::cout << "alpha " << mluq::format_double(fit.alpha) << " (se "
            << mluq::format_double(fit.alpha_se) << ")\n"
            << "beta " << mluq::format_double(fit.beta) << " (se "
            << mluq::format_double(fit.beta_se) << ")\n"
            << "gamma " << mluq::format_double(fit.gamma) << " (se "
            << mluq::format_double(fit.gamma_se) << ")\n"
            << "levels used " << fit.levels_used.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilevel / multi-index estimator toolkit for elliptic PDEs "
               "with uniform random coefficients"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags screen_flags, run_flags, verify_flags;
  CLI::App* screen = app.add_subcommand("screen", "pilot phase only: per-key statistics and rate fits");
  add_common(screen, screen_flags);
  CLI::App* run = app.add_subcommand("run", "full estimator run over the accuracy targets");
  add_common(run, run_flags);
  CLI::App* verify = app.add_subcommand("verify", "deterministic identity suites and reduced statistical checks");
  add_common(verify, verify_flags);

  std::string table_path, abscissa = "scalar";
  CLI::App* rates = app.add_subcommand("rates", "re-fit rates from a saved level table");
  rates->add_option("--table", table_path, "level table in CSV form")->required();
  rates->add_option("--abscissa", abscissa, "scalar | norm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (screen->parsed()) return cmd_screen(screen_flags);
    if (run->parsed()) return cmd_run(run_flags);
    if (verify->parsed()) return cmd_verify(verify_flags);
    if (rates->parsed()) return cmd_rates(table_path, abscissa);
  } catch (const mluq::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "estimator failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
