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

#ifndef LIMCO_BOLZA_HPP
#define LIMCO_BOLZA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "limco/pmp.hpp"

// The scalar worked example: x' = f(x) + u, f0 = e^{-2t} g(x), g(z) = z(z^4 - 5),
// u in [0, 1], b in [-1, 2], l = 0. Optimal process (b*, u*) = (0, 0).
namespace limco::bolza {

ControlProblem problem();

double g(double z);

struct GValue {
  double g = 0.0;
  bool growth_holds = true;  // g(z) > z^4 when z >= 2
  bool lower_holds = true;   // g(z) >= -5z when z >= 0
};

GValue g_and_inequalities(double z);

/// x(s) under u = 0 from the start that reaches 1 at time theta:
/// 2 / (theta + 2 - s) before theta, (e^{s - theta} + 1) / 2 after.
double closed_form_trajectory(double theta, double s);

/// ln(-1 + 80^{1/4}): time after the crossing at which g(x) returns to 0.
double eta_constant();

/// I(0; T) = -(5/2)(1 - e^{-2T}) and its limit -5/2.
double sensitivity_closed_form(double T);
/// psi*(t) = (5 lambda / 2)(e^{-2t} - 1).
double costate_closed_form(double t, double lambda = 1.0);

struct Check {
  std::string name;
  double computed = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  bool pass = false;
};

Check make_check(std::string name, double computed, double expected, double tol);

// ---------------------------------------------------------------------------
// Overtaking gap probe

/// u = 0, u = 1, single-switch bang-bang signals, then seeded random signals
/// with at most `max_switches` switch times in (0, horizon); `size` in total.
std::vector<ControlSignal> control_library(int size, int max_switches, double horizon,
                                           std::uint64_t seed);

/// n equally spaced points of [-1, 2].
std::vector<double> initial_grid(int n = 61);

struct GapRow {
  double T = 0.0;
  double min_J = 0.0;
  double argmin_b = 0.0;
  int argmin_control = -1;
  double reference_J = 0.0;            // J(0, 0; T)
  std::optional<double> theta_hat;     // crossing time of the argmin trajectory
  std::optional<double> theta_bound;   // -12 / (theta_hat + 2)
  bool worst_case_ok = false;          // min_J >= -6
  bool reference_ok = false;           // J(0, 0; T) == 0
  bool theta_bound_ok = true;          // min_J >= theta_bound - slack (vacuous without a crossing)
};

struct GapProbe {
  std::vector<GapRow> rows;
  long evaluations = 0;
  bool monotone = true;  // every probed trajectory nondecreasing
  bool pass = false;
};

struct GapOptions {
  double step = 1.0 / 128;
  double theta_slack = 1e-3;
};

/// Minimizes J(b, u; T) over b_grid x library for every T, one integration
/// per pair up to max(T). Parallel over pairs; results are schedule-free.
GapProbe overtaking_gap_probe(const std::vector<double>& horizons, const std::vector<double>& b_grid,
                              const std::vector<ControlSignal>& library,
                              const GapOptions& opts = {}, const Parallelism& par = {});

/// J(b, u; t) at each of `times` (ascending) with the scalar RK4 used by the probe.
/// When `crossing` is set, it receives the first time x reaches 1 (linear
/// interpolation on the step grid) or stays empty.
std::vector<double> probe_cost(double b, const ControlSignal& u, const std::vector<double>& times,
                               double step, bool* monotone = nullptr,
                               std::optional<double>* crossing = nullptr);

// ---------------------------------------------------------------------------
// Reports

struct SeriesRow {
  double t = 0.0;
  double psi_true = 0.0;   // computed, candidate (1, 0)
  double psi_exact = 0.0;  // closed form
  double psi_ak = 0.0;     // computed, candidate (1, 5/2)
  double ak_residual = 0.0;
  double true_residual = 0.0;
};

struct ExampleReport {
  std::vector<Check> I_table;
  double I_star = 0.0;
  LimitClass classification = LimitClass::kInconclusive;
  std::vector<Check> psi_true;
  std::vector<Check> ak_candidate;  // psi_AK and its max-condition residual profile
  PmpReport ak_pmp;
  PmpReport true_pmp;
  std::vector<Check> uniqueness;
  std::vector<Check> bound_checks;  // g inequalities, eta, trajectory formulas
  std::optional<GapProbe> gap;
  std::vector<SeriesRow> series;
  bool ak_fails = false;
  bool true_passes = false;
  bool pass = false;
};

/// I_* from a horizon sweep, the AK candidate (1, +5/2) and the true candidate
/// (1, 0) checked over [0, T]; closed-form comparisons on both.
ExampleReport ak_failure_demo(double T = 10.0, const IntegratorOptions& opts = {},
                              const Parallelism& par = {});

/// Closed-form trajectory against integration from closed_form_trajectory(theta, 0)
/// under u = 0, on the output grid of [0, theta + 3]. Returns the max error.
double trajectory_oracle_error(double theta, const IntegratorOptions& opts = {});

struct ExampleOptions {
  double T = 10.0;
  bool with_gap = true;
  std::vector<double> gap_horizons{5.0, 10.0, 20.0};
  int b_points = 61;
  int library_size = 200;
  int max_switches = 4;
  std::uint64_t seed = 1;
  GapOptions gap;
  IntegratorOptions integrator;
};

ExampleReport example_report(const ExampleOptions& opts = {}, const Parallelism& par = {});

}  // namespace limco::bolza

#endif  // LIMCO_BOLZA_HPP
