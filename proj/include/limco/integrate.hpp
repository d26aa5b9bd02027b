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

#ifndef LIMCO_INTEGRATE_HPP
#define LIMCO_INTEGRATE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "limco/problem.hpp"

namespace limco {

struct IntegratorOptions {
  enum class Method { kRk4, kDormandPrince };
  Method method = Method::kRk4;
  double step = 1.0 / 256;  // RK4 step; initial trial step in adaptive mode
  double rtol = 1e-10;
  double atol = 1e-12;
  double min_step = 1e-12;
  long max_steps = 20'000'000;
  double output_step = 1.0 / 64;  // spacing of stored grid points

  IntegratorOptions refined() const;  // step and output_step halved
};

namespace ode {

using Rhs = std::function<void(double t, const Vec& z, const Vec& u, Vec& dz)>;
using Observer = std::function<void(double t, const Vec& z)>;
/// Switching functions of the state; a sign change inside an RK4 step splits
/// the step at the crossing (bisection on the step length).
using Event = std::function<Vec(double t, const Vec& z)>;

/// Integrates z' = rhs(t, z, u(t)) from t0 to t1 (t1 < t0 runs backward).
/// Integration is split at control breakpoints and at `stops`, so every
/// step sees a constant control. `observer` fires at t0, at each stop
/// strictly between t0 and t1 (in travel order), and at t1.
void integrate(const Rhs& rhs, Vec& z, double t0, double t1, const ControlSignal& u,
               const std::vector<double>& stops, const IntegratorOptions& opts,
               const Observer& observer = {}, const Event& event = {});

/// Uniform grid from 0 to T with the given spacing; T is always included.
std::vector<double> uniform_grid(double T, double spacing);

}  // namespace ode

struct Trajectory {
  std::vector<double> grid;
  std::vector<Vec> states;
  std::vector<double> running_cost;  // J(b, u; t_k)
};

struct SensitivityPath {
  std::vector<double> grid;
  std::vector<Vec> states;
  std::vector<double> running_cost;
  std::vector<Mat> A;
  std::vector<Mat> A_inv;
  std::vector<RowVec> I;
};

/// Sensitivity quantities at one time.
struct SensitivitySnapshot {
  double t = 0.0;
  Vec x;
  double J = 0.0;
  Mat A;
  Mat A_inv;
  RowVec I;
};

struct AdjointPath {
  std::vector<double> grid;
  std::vector<Vec> states;
  std::vector<RowVec> psi;
  double lambda = 0.0;
};

Trajectory integrate_state(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                           double T, const IntegratorOptions& opts = {});

/// Final state and J(b, u; T) only; no grid is stored.
std::pair<Vec, double> integrate_endpoint(const ControlProblem& p, const Vec& b,
                                          const ControlSignal& u, double T,
                                          const IntegratorOptions& opts = {});

/// A' = f_x A, A_inv' = -A_inv f_x, I' = f0_x A along x(xi, u; .), all
/// starting from identity / zero and integrated jointly with x and J.
SensitivityPath integrate_sensitivity(const ControlProblem& p, const Vec& xi,
                                      const ControlSignal& u, double T,
                                      const IntegratorOptions& opts = {});

/// One pass to max(times); snapshots at each requested time (any order,
/// all >= 0). Results follow the order of `times`.
std::vector<SensitivitySnapshot> sensitivity_at(const ControlProblem& p, const Vec& xi,
                                                const ControlSignal& u,
                                                const std::vector<double>& times,
                                                const IntegratorOptions& opts = {});

/// Solves -psi' = psi f_x - lambda f0_x along x(b, u; .) on [0, T] with
/// psi(anchor_t) = anchor_psi. The state is carried jointly: forward to the
/// anchor, then backward to 0 and forward to T from the anchor.
AdjointPath integrate_adjoint(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                              double lambda, double anchor_t, const RowVec& anchor_psi, double T,
                              const IntegratorOptions& opts = {});

/// Same, on the grid and initial point of an existing trajectory.
AdjointPath integrate_adjoint(const ControlProblem& p, const Trajectory& x,
                              const ControlSignal& u, double lambda, double anchor_t,
                              const RowVec& anchor_psi, const IntegratorOptions& opts = {});

/// Five-point central-difference gradient of b -> J(b, u; T), step h.
RowVec fd_cost_gradient(const ControlProblem& p, const Vec& b, const ControlSignal& u, double T,
                        const IntegratorOptions& opts = {}, double h = 1e-5);

/// CSV columns: t, x1..xm, J.
void write_csv(std::ostream& os, const Trajectory& x);
/// CSV columns: t, x1..xm, J, A11..Amm (row-major), I1..Im.
void write_csv(std::ostream& os, const SensitivityPath& s);

}  // namespace limco

#endif  // LIMCO_INTEGRATE_HPP
