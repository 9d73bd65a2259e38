#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mluq {

using Field = std::function<double(std::span<const double>)>;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Elliptic model problem on [0,1]^d with affine-in-y coefficient
//   a(x,y) = a0(x) + sum_j y_j a_j(x),   y_j uniform on [-1/2,1/2],
// forcing f and output functional P(u) = integral of g*u.
// Immutable after construction; all operations on it are pure.
struct ProblemSpec {
  std::string name;
  int d = 1;
  int s = 1;
  Field a0;
  std::vector<Field> a_modes;
  Field f;
  Field g;
  double a_min = 0;
  double a_max = 0;
  // set for manufactured problems with a known exact functional value
  double exact_functional = 0;
  bool has_exact_functional = false;
};

// a0(x) + sum_j y_j a_j(x). Throws std::domain_error naming the offending
// component if some |y_j| > 1/2.
double coefficient_eval(const ProblemSpec& spec, std::span<const double> x,
                        std::span<const double> y);

// Scans a uniform grid with `grid_resolution` points per direction using the
// worst-case signs y_j = +-1/2 sign(a_j(x)); returns the observed coefficient
// envelope (min, max). Throws ConfigError naming the violating x if the
// observed minimum is not positive.
std::pair<double, double> validate_ellipticity(const ProblemSpec& spec,
                                               int grid_resolution);

// Built-in problem catalog, selected by name:
//   "affine-sine"       a0 = 1, a_j = kappa j^-2 prod_k sin(j pi x_k),
//                       f = 1, g = 1  (the default family)
//   "constant"          a = 1, f = 1, g = 1, a single zero mode
//   "manufactured-sine" a = 1, g = 1, exact solution prod_k sin(pi x_k) for
//                       d >= 2 (P = (2/pi)^d); in d = 1 the solution is
//                       sin(pi x) + x(1-x)^2 (P = 2/pi + 1/12) because the
//                       pure eigenfunction superconverges under the scheme
ProblemSpec make_problem(const std::string& name, int d, int s,
                         double kappa = 0.9);

}  // namespace mluq
