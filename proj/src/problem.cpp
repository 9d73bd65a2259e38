#include "mluq/problem.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mluq {

double coefficient_eval(const ProblemSpec& spec, std::span<const double> x,
                        std::span<const double> y) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (std::abs(y[j]) > 0.5) {
      std::ostringstream msg;
      msg << "stochastic component y_" << (j + 1) << " = " << y[j]
          << " outside [-1/2, 1/2]";
      throw std::domain_error(msg.str());
    }
  }
  double a = spec.a0(x);
  for (std::size_t j = 0; j < spec.a_modes.size() && j < y.size(); ++j) {
    a += y[j] * spec.a_modes[j](x);
  }
  return a;
}

std::pair<double, double> validate_ellipticity(const ProblemSpec& spec,
                                               int grid_resolution) {
  if (grid_resolution < 2)
    throw std::invalid_argument("validate_ellipticity: grid_resolution must be >= 2");
  const int d = spec.d;
  std::vector<double> x(static_cast<std::size_t>(d), 0.0);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  double amin = std::numeric_limits<double>::infinity();
  double amax = -std::numeric_limits<double>::infinity();
  std::vector<double> amin_x;
  for (;;) {
    for (int j = 0; j < d; ++j)
      x[static_cast<std::size_t>(j)] =
          static_cast<double>(idx[static_cast<std::size_t>(j)]) /
          static_cast<double>(grid_resolution - 1);
    // worst-case signs y_j = +-1/2 sign(a_j(x))
    double spread = 0;
    for (const auto& mode : spec.a_modes) spread += std::abs(mode(x));
    const double base = spec.a0(x);
    const double lo = base - 0.5 * spread;
    const double hi = base + 0.5 * spread;
    if (lo < amin) {
      amin = lo;
      amin_x = x;
    }
    amax = std::max(amax, hi);
    int j = 0;
    while (j < d) {
      if (++idx[static_cast<std::size_t>(j)] < grid_resolution) break;
      idx[static_cast<std::size_t>(j)] = 0;
      ++j;
    }
    if (j == d) break;
  }
  if (amin <= 0) {
    std::ostringstream msg;
    msg << "coefficient not elliptic: worst-case minimum " << amin << " at x = (";
    for (std::size_t j = 0; j < amin_x.size(); ++j)
      msg << (j ? "," : "") << amin_x[j];
    msg << ")";
    throw ConfigError(msg.str());
  }
  return {amin, amax};
}

namespace {

constexpr double kPi = std::numbers::pi;

double prod_sin(std::span<const double> x, double freq) {
  double p = 1;
  for (double xi : x) p *= std::sin(freq * kPi * xi);
  return p;
}

}  // namespace

ProblemSpec make_problem(const std::string& name, int d, int s, double kappa) {
  if (d < 1) throw ConfigError("problem: spatial dimension d must be >= 1");
  if (s < 1) throw ConfigError("problem: stochastic dimension s must be >= 1");
  ProblemSpec spec;
  spec.name = name;
  spec.d = d;
  spec.s = s;
  spec.g = [](std::span<const double>) { return 1.0; };
  spec.f = [](std::span<const double>) { return 1.0; };
  spec.a0 = [](std::span<const double>) { return 1.0; };

  if (name == "affine-sine") {
    double spread = 0;
    for (int j = 1; j <= s; ++j) {
      const double amp = kappa / static_cast<double>(j * j);
      spread += amp;
      spec.a_modes.push_back([amp, j](std::span<const double> x) {
        return amp * prod_sin(x, static_cast<double>(j));
      });
    }
    spec.a_min = 1.0 - 0.5 * spread;
    spec.a_max = 1.0 + 0.5 * spread;
    if (spec.a_min <= 0)
      throw ConfigError("affine-sine: kappa too large, coefficient not elliptic");
  } else if (name == "constant") {
    spec.a_modes.push_back([](std::span<const double>) { return 0.0; });
    spec.a_min = 1.0;
    spec.a_max = 1.0;
    if (d == 1) {
      // -u'' = 1, u = x(1-x)/2, P = 1/12
      spec.exact_functional = 1.0 / 12.0;
      spec.has_exact_functional = true;
    }
  } else if (name == "manufactured-sine") {
    spec.a_modes.push_back([](std::span<const double>) { return 0.0; });
    spec.a_min = 1.0;
    spec.a_max = 1.0;
    const double scale = static_cast<double>(d) * kPi * kPi;
    if (d == 1) {
      // u = sin(pi x) + x (1-x)^2. The pure sine eigenfunction superconverges
      // in 1d (the discrete amplitude error cancels the trapezoid quadrature
      // error exactly), so a polynomial term is added to keep the functional
      // error genuinely second order.
      spec.f = [scale](std::span<const double> x) {
        return scale * prod_sin(x, 1.0) + 4.0 - 6.0 * x[0];
      };
      spec.exact_functional = 2.0 / kPi + 1.0 / 12.0;
    } else {
      // u = prod_k sin(pi x_k)
      spec.f = [scale](std::span<const double> x) { return scale * prod_sin(x, 1.0); };
      spec.exact_functional = std::pow(2.0 / kPi, d);
    }
    spec.has_exact_functional = true;
  } else {
    throw ConfigError("unknown problem name: " + name);
  }
  return spec;
}

}  // namespace mluq
