/*
 Copyright 2026 The limco Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef LIMCO_PROBLEM_HPP
#define LIMCO_PROBLEM_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "limco/types.hpp"

namespace limco {

using VectorField = std::function<Vec(const Vec& x, const Vec& u, double t)>;
using ScalarField = std::function<double(const Vec& x, const Vec& u, double t)>;
using MatrixField = std::function<Mat(const Vec& x, const Vec& u, double t)>;
using CovectorField = std::function<RowVec(const Vec& x, const Vec& u, double t)>;
using SubdifferentialOracle = std::function<std::vector<RowVec>(const Vec& b)>;

/// Infinite-horizon Bolza problem
///
///   minimize  l(b) + int_0^inf f0(x, u, t) dt
///   s.t.      x' = f(x, u, t),  u(t) in U(t),  x(0) = b in C,
///
/// with exact state partials of f and f0. Treated as immutable once built.
struct ControlProblem {
  std::string name;
  int state_dim = 1;
  int control_dim = 1;
  VectorField dynamics;                     // f
  ScalarField running_cost;                 // f0
  std::function<double(const Vec&)> initial_cost;  // l
  MatrixField dynamics_jacobian;            // df/dx, m x m
  CovectorField cost_gradient;              // df0/dx, 1 x m
  std::function<Box(double)> control_set;   // U(t)
  Box initial_set;                          // C
  /// Optional; when empty the subdifferential of l is taken to be the
  /// central-difference gradient of l.
  SubdifferentialOracle l_subdifferential;
  /// Optional. Components change sign where f, f0 or their x-derivatives
  /// are not smooth; fixed-step integration lands on those crossings.
  std::function<Vec(const Vec& x, double t)> switching;

  /// Throws InvalidArgument if a field is missing or dimensions disagree.
  void validate() const;

  double hamiltonian(const Vec& x, const Vec& u, const RowVec& psi, double lambda,
                     double t) const;
  /// Finite set of row vectors standing in for the limiting subdifferential
  /// of l at b (see `l_subdifferential`).
  std::vector<RowVec> initial_cost_subdifferential(const Vec& b) const;
  bool has_subdifferential_oracle() const { return static_cast<bool>(l_subdifferential); }
};

/// Piecewise-constant admissible control. Cell i is [grid[i], grid[i+1]);
/// `tail` applies from the last grid point on.
class ControlSignal {
 public:
  ControlSignal() = default;
  ControlSignal(std::vector<double> grid, std::vector<Vec> values, Vec tail);

  static ControlSignal constant(Vec u);

  const Vec& at(double t) const;
  int dim() const { return static_cast<int>(tail_.size()); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Vec>& values() const { return values_; }
  const Vec& tail() const { return tail_; }

  /// Cell boundaries strictly inside (a, b), ascending.
  std::vector<double> breakpoints_between(double a, double b) const;

  /// True when every value lies in U(t) over its cell. Cells are checked at
  /// start, midpoint and end; the tail at its start and at a few later times.
  bool is_admissible(const ControlProblem& p, double tol = 1e-12) const;

  bool operator==(const ControlSignal& other) const;

 private:
  std::vector<double> grid_{0.0};
  std::vector<Vec> values_;
  Vec tail_;
};

struct DerivativeCheck {
  double max_dynamics_error = 0.0;
  double max_cost_error = 0.0;
  bool ok = true;
};

/// Compares df/dx and df0/dx against central differences at `probes` random
/// points of the box [-1, 1]^m, controls drawn from U(t), t in [0, 2].
DerivativeCheck check_derivatives(const ControlProblem& p, int probes, std::uint64_t seed,
                                  double tol = 1e-5);

/// External problem description: either a registry name or inline
/// expressions over x1..xm, u1..uk, t and the named parameters.
/// Control bounds may be numbers or expressions in t.
struct ProblemSpec {
  std::optional<std::string> name;
  int state_dim = 0;
  int control_dim = 0;
  std::vector<std::string> f;
  std::string f0 = "0";
  std::string l = "0";
  std::vector<std::string> u_lo;
  std::vector<std::string> u_hi;
  std::vector<double> c_lo;
  std::vector<double> c_hi;
  std::map<std::string, double> params;

  static ProblemSpec named(std::string name, std::map<std::string, double> params = {});
  /// Parses the JSON problem file format. Throws InvalidArgument.
  static ProblemSpec from_json_text(std::string_view text);
  static ProblemSpec from_file(const std::filesystem::path& path);
};

/// Builds a problem from a registry entry or inline expressions. DSL problems
/// get symbolic Jacobians. Throws InvalidArgument or expr::ParseError.
ControlProblem load_problem(const ProblemSpec& spec);

std::vector<std::string> registry_names();

/// The convex nondecreasing C^1 function 0 (x<0), x^2/2 (0<=x<=1),
/// x-1/2 (x>1) driving the worked example.
double piecewise_f_example(double x);
double piecewise_f_example_derivative(double x);

}  // namespace limco

#endif  // LIMCO_PROBLEM_HPP
