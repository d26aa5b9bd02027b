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

#ifndef LIMCO_COSTATE_HPP
#define LIMCO_COSTATE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "limco/batch.hpp"
#include "limco/cone.hpp"
#include "limco/integrate.hpp"

namespace limco {

/// Finite prefix of an unbounded increasing horizon sequence.
struct HorizonSequence {
  std::vector<double> values;
  std::string tag;

  /// tau0 * ratio^n for n = 0..count-1.
  static HorizonSequence geometric(double tau0, double ratio, int count);
  static HorizonSequence list(std::vector<double> values);
  /// "geometric:tau0:r:N" or "list:t1,t2,...". Throws InvalidArgument.
  static HorizonSequence parse(std::string_view text);
  /// T + 2^n for n = 0..count-1; tail horizons for the explicit formula.
  static HorizonSequence tail_after(double T, int count = 7);
};

enum class Provenance { kBackwardShot, kAkFormula, kJointLimit, kUser };
std::string to_string(Provenance p);

struct CostateCandidate {
  double lambda = 0.0;
  RowVec psi0;
  Provenance provenance = Provenance::kUser;
  int shot_index = -1;  // horizon index for backward shots
  bool normalized = false;

  /// Throws InvalidArgument if lambda < 0 or (lambda, psi0) == (0, 0).
  static CostateCandidate user(double lambda, RowVec psi0);
  /// Scaled so that ||psi0|| + lambda = 1.
  CostateCandidate normalized_copy() const;
};

enum class LimitClass { kNormalFinite, kAbnormalUnbounded, kInconclusive };
std::string to_string(LimitClass c);

struct LimitCriteria {
  double eps_lim = 1e-6;                 // Cauchy tolerance, scaled by (1 + |value|)
  double divergence_threshold = 1e6;
};

struct HorizonRow {
  double tau = 0.0;
  Vec xi;
  RowVec I;
  double norm_I = 0.0;
  double j_gap = 0.0;                     // J(xi; tau) - J(b*; tau)
  std::optional<double> relative_gap;     // |I(xi;tau) - I(b*;tau)| / |I(b*;tau)|
  bool failed = false;
  std::string error;
};

struct LimitReport {
  LimitClass classification = LimitClass::kInconclusive;
  RowVec limit_vector;                    // I_* or a unit direction
  std::vector<HorizonRow> table;
  std::vector<double> residuals;          // |I_n - I_{n-1}|
  std::vector<double> direction_residuals;  // same for I_n / |I_n|
  std::vector<LimitClass> prefix_history;   // verdicts on prefixes of length 4..N
  std::optional<std::string> subsequence_hint;
  bool partial = false;                   // an integration failed
  std::string error;
};

/// Verdict on a finite sequence of I values (at least 4).
LimitClass classify_sequence(const std::vector<RowVec>& values, const LimitCriteria& c,
                             RowVec* limit = nullptr);

struct ShotResult {
  CostateCandidate candidate;  // raw (unnormalized)
  AdjointPath path;            // psi(tau) = 0 exactly
  double terminal_residual = 0.0;  // |psi(tau)| after forward re-integration from psi(0)
  bool degenerate = false;         // lambda == 0 gives psi == 0
};

ShotResult backward_shot(const ControlProblem& p, const Vec& xi, const ControlSignal& u,
                         double lambda, double tau, const IntegratorOptions& opts = {});

/// xi_n == b* for every horizon.
std::vector<Vec> constant_schedule(const Vec& b_star, std::size_t count);
/// xi_n = b* + r0 2^-n d.
std::vector<Vec> perturbed_schedule(const Vec& b_star, std::size_t count, double r0,
                                    const Vec& direction);
/// +-e_i followed by `random_count` seeded random unit vectors.
std::vector<Vec> direction_dictionary(int dim, int random_count, std::uint64_t seed);

LimitReport horizon_sweep(const ControlProblem& p, const Vec& b_star, const ControlSignal& u,
                          const HorizonSequence& tau, const std::vector<Vec>& xi_schedule,
                          const LimitCriteria& criteria = {},
                          const IntegratorOptions& opts = {}, const Parallelism& par = {});

struct ClassifiedCandidate {
  CostateCandidate raw;
  CostateCandidate candidate;  // normalized
  TransversalityResult transversality;
};

/// Throws InvalidArgument on an Inconclusive report.
ClassifiedCandidate classify_candidate(const ControlProblem& p, const Vec& b_star,
                                       const LimitReport& report, double tol = 1e-6);

enum class TailVerdict { kConverged, kDivergent, kOscillatory };
std::string to_string(TailVerdict v);

struct AkResult {
  RowVec psi_T;
  TailVerdict verdict = TailVerdict::kOscillatory;
  std::vector<double> horizons;
  std::vector<RowVec> partials;   // int_T^tau_k f0_x A dt
  std::vector<double> residuals;
  RowVec I_star;                  // I(b*; last horizon)
  Mat A_inv_T;
};

/// psi(T) = -int_T^inf f0_x A dt A^-1(T), the improper integral taken
/// along the tail horizons (all > T, at least 3).
AkResult ak_costate(const ControlProblem& p, const Vec& b_star, const ControlSignal& u, double T,
                    const HorizonSequence& tail, const LimitCriteria& criteria = {},
                    const IntegratorOptions& opts = {});

/// (-I_* + I(b*; T)) A^-1(b*; T).
RowVec shifted_limit_costate(const ControlProblem& p, const Vec& b_star,
                             const ControlSignal& u, const RowVec& I_star, double T,
                             const IntegratorOptions& opts = {});

struct ProbeStage {
  double tau = 0.0;
  double radius = 0.0;
  std::vector<Vec> xi;
  std::vector<RowVec> I;       // empty row when the sample failed
  std::vector<bool> failed;
};

struct JointLimitResult {
  bool holds = false;
  RowVec I_star;       // centroid of the last stage when it holds
  double spread = 0.0;  // diameter of the last-stage cloud
  std::vector<ProbeStage> stages;
  int failures = 0;
};

/// Stage k pairs tau_k with radii[min(k, end)]; each stage samples b* itself
/// plus `samples_per_radius` seeded points of the ball around b*.
JointLimitResult joint_limit_probe(const ControlProblem& p, const Vec& b_star,
                                   const ControlSignal& u, const HorizonSequence& tau,
                                   const std::vector<double>& radii, int samples_per_radius,
                                   std::uint64_t seed, const LimitCriteria& criteria = {},
                                   const IntegratorOptions& opts = {},
                                   const Parallelism& par = {});

struct Cluster {
  RowVec centroid;
  int count = 0;
  double spread = 0.0;  // largest distance from the centroid
};

struct PointCloud {
  std::vector<RowVec> points;
  std::vector<Cluster> clusters;
  bool empty_at_budget() const { return points.empty(); }
};

/// Single-linkage clusters; points closer than eps (1 + max norm) link.
std::vector<Cluster> single_linkage(const std::vector<RowVec>& points, double eps);

struct CrossCheck {
  bool consistent = false;
  double distance = 0.0;
  std::string note;
};

struct GradientsAtInfinity {
  PointCloud d1;  // accumulation points of -I over bounded samples
  PointCloud d0;  // accumulation directions of -I over divergent samples
  JointLimitResult probe;
  double eps = 1e-6;

  /// Normal candidates: psi0 / lambda must sit in the d1 cloud.
  /// Abnormal candidates: the direction of psi0 must sit in d0 minus 0.
  CrossCheck cross_check(const CostateCandidate& c) const;
};

GradientsAtInfinity gradients_at_infinity(const ControlProblem& p, const Vec& b_star,
                                          const ControlSignal& u, const HorizonSequence& tau,
                                          const std::vector<double>& radii, int samples,
                                          std::uint64_t seed, const LimitCriteria& criteria = {},
                                          const IntegratorOptions& opts = {},
                                          const Parallelism& par = {});

}  // namespace limco

#endif  // LIMCO_COSTATE_HPP
