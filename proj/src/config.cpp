#include "mluq/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mluq/parallel.hpp"

namespace mluq {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_eps_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad number '" + item + "'");
    }
  }
  return out;
}

template <class T>
T parse_num(const std::string& value, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) return std::stod(value);
    else if constexpr (std::is_same_v<T, std::uint64_t>) return std::stoull(value);
    else return static_cast<T>(std::stoll(value));
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + value + "'");
  }
}

void apply(RunConfig& cfg, const std::string& section, const std::string& raw_key,
           const std::string& value, int line_no) {
  const std::string key = section.empty() ? raw_key : section + "." + raw_key;
  auto fail = [&](const std::string& why) {
    throw ConfigError("config line " + std::to_string(line_no) + ", key '" + key +
                      "': " + why);
  };
  if (key == "problem.name") cfg.problem_name = value;
  else if (key == "problem.d") cfg.d = parse_num<int>(value, key);
  else if (key == "problem.s") cfg.s = parse_num<int>(value, key);
  else if (key == "problem.kappa") cfg.kappa = parse_num<double>(value, key);
  else if (key == "run.driver") {
    auto d = parse_driver(value);
    if (!d) fail("unknown driver '" + value + "'");
    cfg.driver = *d;
  } else if (key == "run.eps") cfg.eps = parse_eps_list(value, key);
  else if (key == "run.seed") cfg.seed = parse_num<std::uint64_t>(value, key);
  else if (key == "run.r") cfg.r = parse_num<int>(value, key);
  else if (key == "run.max_level") cfg.max_level = parse_num<int>(value, key);
  else if (key == "run.screening_level") cfg.screening_level = parse_num<int>(value, key);
  else if (key == "run.n_screen") cfg.n_screen = parse_num<std::int64_t>(value, key);
  else if (key == "run.screen_r") cfg.screen_r = parse_num<int>(value, key);
  else if (key == "run.n_screen_points")
    cfg.n_screen_points = parse_num<std::int64_t>(value, key);
  else if (key == "run.threads") cfg.threads = parse_num<int>(value, key);
  else if (key == "solver.kind") {
    if (value == "auto") cfg.solver.kind = SolverKind::automatic;
    else if (value == "multigrid") cfg.solver.kind = SolverKind::multigrid;
    else if (value == "banded") cfg.solver.kind = SolverKind::banded;
    else if (value == "tridiagonal") cfg.solver.kind = SolverKind::tridiagonal;
    else fail("unknown solver kind '" + value + "'");
  } else if (key == "solver.smoother_sweeps")
    cfg.solver.smoother_sweeps = parse_num<int>(value, key);
  else if (key == "solver.tolerance") cfg.solver.rel_tol = parse_num<double>(value, key);
  else if (key == "solver.cycle_cap") cfg.solver.cycle_cap = parse_num<int>(value, key);
  else if (key == "lattice.source") {
    if (value == "file") cfg.lattice_source = LatticeSource::file;
    else if (value == "korobov") cfg.lattice_source = LatticeSource::korobov_search;
    else fail("unknown lattice source '" + value + "'");
  } else if (key == "lattice.file") cfg.lattice_file = value;
  else if (key == "lattice.n") cfg.lattice_n = parse_num<std::uint64_t>(value, key);
  else if (key == "output.dir") cfg.out_dir = value;
  else fail("unknown configuration key");
}

}  // namespace

RunConfig parse_config(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      apply(cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
    }
  }
  for (const auto& [key, value] : overrides) apply(cfg, "", key, value, 0);
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("run.seed is mandatory (no ambient entropy)");
  if (cfg.eps.empty()) throw ConfigError("run.eps: at least one accuracy target required");
  const double eps_cap = std::exp(-1.0);
  for (double e : cfg.eps)
    if (!(e > 0) || e >= eps_cap)
      throw ConfigError("run.eps: values must lie in (0, 1/e)");
  if (cfg.d < 1 || cfg.d > 3)
    throw ConfigError("problem.d: supported spatial dimensions are 1..3");
  if (cfg.s < 1) throw ConfigError("problem.s must be >= 1");
  if (cfg.r < 2) throw ConfigError("run.r must be >= 2 for shift-based variance estimates");
  const bool qmc = cfg.driver == DriverKind::mlqmc || cfg.driver == DriverKind::miqmc;
  if (qmc && cfg.lattice_source == LatticeSource::file && cfg.lattice_file.empty())
    throw ConfigError("lattice.source = file requires lattice.file "
                      "(or enable the korobov fallback with lattice.source = korobov)");
}

std::string canonical_config_string(const RunConfig& cfg) {
  std::ostringstream os;
  os << "problem.name=" << cfg.problem_name << "\nproblem.d=" << cfg.d
     << "\nproblem.s=" << cfg.s << "\nproblem.kappa=" << cfg.kappa
     << "\nrun.driver=" << driver_name(cfg.driver) << "\nrun.eps=";
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) os << (i ? "," : "") << cfg.eps[i];
  os << "\nrun.seed=" << (cfg.seed ? *cfg.seed : 0) << "\nrun.r=" << cfg.r
     << "\nrun.max_level=" << cfg.max_level
     << "\nrun.screening_level=" << cfg.screening_level
     << "\nrun.n_screen=" << cfg.n_screen << "\nrun.screen_r=" << cfg.screen_r
     << "\nrun.n_screen_points=" << cfg.n_screen_points
     << "\nsolver.kind=" << static_cast<int>(cfg.solver.kind)
     << "\nsolver.smoother_sweeps=" << cfg.solver.smoother_sweeps
     << "\nsolver.tolerance=" << cfg.solver.rel_tol
     << "\nsolver.cycle_cap=" << cfg.solver.cycle_cap
     << "\nlattice.source=" << static_cast<int>(cfg.lattice_source)
     << "\nlattice.file=" << cfg.lattice_file << "\nlattice.n=" << cfg.lattice_n
     << "\n";
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = canonical_config_string(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

DriverParams make_driver_params(const RunConfig& cfg) {
  DriverParams p;
  p.seed = cfg.seed ? *cfg.seed : 0;
  p.max_level = cfg.max_level;
  p.screening_level = cfg.screening_level;
  p.n_screen = cfg.n_screen;
  p.r = cfg.r;
  p.screen_r = cfg.screen_r;
  p.n_screen_points = cfg.n_screen_points;
  p.solver = cfg.solver;
  p.exec = cfg.threads == 1 ? ExecutionPolicy::serial : ExecutionPolicy::openmp;
  const bool qmc = cfg.driver == DriverKind::mlqmc || cfg.driver == DriverKind::miqmc;
  if (qmc) p.lattice = make_config_lattice(cfg);
  return p;
}

ProblemSpec make_config_problem(const RunConfig& cfg) {
  return make_problem(cfg.problem_name, cfg.d, cfg.s, cfg.kappa);
}

LatticeRule make_config_lattice(const RunConfig& cfg) {
  if (cfg.lattice_source == LatticeSource::file) {
    if (cfg.lattice_file.empty())
      throw ConfigError("lattice.file required when lattice.source = file");
    return load_lattice_file(cfg.lattice_file, cfg.s, cfg.lattice_n);
  }
  return korobov_search(cfg.s, cfg.lattice_n);
}

}  // namespace mluq
