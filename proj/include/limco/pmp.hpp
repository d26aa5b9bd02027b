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

#ifndef LIMCO_PMP_HPP
#define LIMCO_PMP_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "limco/costate.hpp"
#include "limco/expression.hpp"

namespace limco {

/// H = psi f - lambda f0.
double hamiltonian(const ControlProblem& p, const Vec& x, const Vec& u, const RowVec& psi,
                   double lambda, double t);

struct MaxSearchOptions {
  int grid_points = 65;          // per control coordinate
  int refine_rounds = 2;         // coordinate golden-section passes
  int golden_iterations = 60;
  long max_grid_size = 20000;    // beyond this, coordinate sweeps replace the tensor grid
};

struct MaxCondition {
  double sup = 0.0;       // sup over U(t) of H
  double at_u = 0.0;      // H at the given control
  double residual = 0.0;  // sup - at_u, clamped at 0
  Vec argmax;
};

MaxCondition max_condition(const ControlProblem& p, const Vec& x, const Vec& u, const RowVec& psi,
                           double lambda, double t, const MaxSearchOptions& opts = {});

double max_condition_residual(const ControlProblem& p, const Vec& x, const Vec& u,
                              const RowVec& psi, double lambda, double t,
                              const MaxSearchOptions& opts = {});

struct PmpTolerances {
  double adjoint = 1e-6;         // scaled by (1 + max |psi|)
  double normalization = 1e-6;
  double max_residual = 1e-4;
  double transversality = 1e-6;
};

struct PmpReport {
  std::vector<double> grid;
  AdjointPath path;
  std::vector<double> adjoint_residuals;   // per grid point
  double adjoint_residual = 0.0;           // sup over the grid
  std::vector<double> max_residuals;       // r(t) per grid point
  double max_residual = 0.0;               // ess-sup on the grid
  double max_residual_time = 0.0;
  double normalization_error = 0.0;
  bool normalization_deferred = false;     // unnormalized candidate: checked after scaling
  TransversalityResult transversality;
  bool adjoint_pass = false;
  bool max_pass = false;
  bool normalization_pass = false;
  bool transversality_pass = false;
  bool pass = false;
  PmpTolerances tolerances;
};

/// Integrates x and psi on [0, T] from (b, candidate), evaluates every PMP
/// relation on the shared grid. psi' is taken from finite differences of the
/// computed path inside each control cell.
PmpReport check_pmp(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                    const CostateCandidate& candidate, double T, const PmpTolerances& tol = {},
                    const IntegratorOptions& opts = {}, const MaxSearchOptions& search = {});

/// Finite-difference weights for the first derivative at x0 over `nodes`.
std::vector<double> fd_weights(double x0, const std::vector<double>& nodes);

// ---------------------------------------------------------------------------
// Applicability probes. Evidence only; verdicts hold "at budget".

struct ContinuityRow {
  double tau = 0.0;
  Vec b;
  double dI = 0.0;  // |I(b_n; tau_n) - I(b*; tau_n)|
  double dJ = 0.0;  // |J(b_n, u*; tau_n) - J(b*, u*; tau_n)|
  bool failed = false;
};

struct ContinuityProbe {
  std::vector<ContinuityRow> rows;
  bool consistent = false;
  std::string verdict;
};

/// Whether dI shrinks as dJ shrinks along b_n -> b*.
ContinuityProbe sensitivity_continuity_probe(const ControlProblem& p, const Vec& b_star,
                                             const ControlSignal& u, const HorizonSequence& tau,
                                             const std::vector<Vec>& b_sequence,
                                             const IntegratorOptions& opts = {},
                                             const Parallelism& par = {});

struct EquicontinuityProbe {
  std::vector<double> scales;               // pair distances delta_j
  std::vector<double> taus;
  std::vector<std::vector<double>> moduli;  // [n][j]
  std::vector<double> envelope;             // max over n, per scale
  bool holds = false;
  std::string verdict;
  std::optional<double> limit_gradient_gap;  // |I(b*; tau_N) + grad l(b*)| when holds
};

EquicontinuityProbe equicontinuity_probe(const ControlProblem& p, const Vec& b_star,
                                         const ControlSignal& u, const HorizonSequence& tau,
                                         double radius, int samples, std::uint64_t seed,
                                         const IntegratorOptions& opts = {},
                                         const Parallelism& par = {});

struct OmegaViolation {
  Vec b;
  double tau_n = 0.0;
  double tau_k = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// omega is an expression over slot 0 = s (takes 1/tau_k) and slot 1 = j
/// (takes |J(b; tau_n) - J(b; tau_k)|); omega(0, 0) must be 0.
std::vector<OmegaViolation> omega_modulus_check(const ControlProblem& p, const Vec& b_star,
                                                const ControlSignal& u,
                                                const HorizonSequence& tau,
                                                const expr::Expression& omega, double radius,
                                                int samples, std::uint64_t seed,
                                                const IntegratorOptions& opts = {},
                                                const Parallelism& par = {});

/// Symbol table for omega expressions: s -> slot 0, j -> slot 1.
expr::SymbolTable omega_symbols();

}  // namespace limco

#endif  // LIMCO_PMP_HPP
