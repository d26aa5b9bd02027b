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

#ifndef LIMCO_METRIC_HPP
#define LIMCO_METRIC_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "limco/integrate.hpp"

namespace limco {

/// y' = a(y, u, t) on a space E of dimension `dim`.
struct FieldSystem {
  int dim = 1;
  int control_dim = 1;
  std::function<Vec(const Vec& y, const Vec& u, double t)> a;
  ode::Event switching;  // optional, see ControlProblem::switching

  /// y = (x, psi, lambda): a = (f, -psi f_x + lambda f0_x, 0).
  static FieldSystem extended(const ControlProblem& p);
  /// y = x: a = f.
  static FieldSystem state(const ControlProblem& p);
};

/// Closed ball or box of initial values in E.
struct InitialRegion {
  enum class Kind { kBall, kBox };
  Kind kind = Kind::kBall;
  Vec center;
  double radius = 0.0;
  Box box;

  static InitialRegion ball(Vec center, double radius);
  static InitialRegion from_box(Box box);
  int dim() const;
  bool contains(const Vec& y, double tol = 0.0) const;
  double distance_to_boundary(const Vec& y) const;
};

enum class WeightForm {
  kIntegral,     // M(t) = int_0^t L
  kExponential,  // M(t) = exp(int_0^t L), M(0) = 1
};

enum class ClassRule {
  kMax,  // w = ceil(R(max(class u, class v), t)): an ultrametric
  kMin,  // class of the smaller-norm control, ties to the first argument
};

struct MetricOptions {
  int slices_per_unit = 64;
  int funnel_samples = 32;   // random interior/boundary points besides the axis points
  int box_samples = 16;      // Latin-hypercube points per funnel box
  int control_directions = 8;
  double inflation = 1.25;
  WeightForm weight = WeightForm::kIntegral;
  ClassRule class_rule = ClassRule::kMax;
  std::uint64_t seed = 1;
  int k_max = 0;  // 0: from the reference values and `control_set`
  std::function<Box(double)> control_set;
  IntegratorOptions integrator;
};

/// Immutable once built; all queries are safe to call concurrently.
class MetricContext {
 public:
  static MetricContext build(FieldSystem field, ControlSignal u_star, InitialRegion S,
                             double T_max, const MetricOptions& opts = {});

  double T_max() const { return T_max_; }
  int k_max() const { return k_max_; }
  const std::vector<Box>& funnel() const { return funnel_; }  // G_1..G_N
  const std::vector<double>& slice_times() const { return slice_times_; }
  const std::vector<double>& lipschitz() const { return lipschitz_; }  // per slice
  const FieldSystem& field() const { return field_; }
  const ControlSignal& reference() const { return u_star_; }
  const InitialRegion& initial_region() const { return S_; }
  const MetricOptions& options() const { return opts_; }

  /// M(t), exact for the piecewise-constant L.
  double weight(double t) const;
  /// R^a(k, t); throws InvalidArgument when k > k_max.
  double r_a(int k, double t) const;
  static int control_class(const Vec& u);
  double w(const Vec& u, const Vec& v, double t) const;

  /// Pullback: y(0) for y' = a(y, u*, t), y(theta) = z.
  Vec kappa(const Vec& z, double theta) const;

 private:
  std::size_t slice_index(double t) const;

  FieldSystem field_;
  ControlSignal u_star_;
  InitialRegion S_;
  MetricOptions opts_;
  double T_max_ = 0.0;
  int k_max_ = 1;
  std::vector<Box> funnel_;
  std::vector<double> slice_times_;         // boundaries, size slices + 1
  std::vector<double> lipschitz_;           // per slice
  std::vector<double> cumulative_;          // int_0^{slice_times[i]} L
  std::vector<std::vector<double>> r_table_;  // [k - 1][slice]
};

struct RhoValue {
  double value = 0.0;
  double T = 0.0;
  double disagreement = 0.0;  // Delta_T: measure of {t <= T : u(t) != v(t)}
};

RhoValue rho(const MetricContext& ctx, const ControlSignal& u, const ControlSignal& v, double T);

struct DivergencePoint {
  double t = 0.0;
  double lhs = 0.0;  // |kappa(y(t), t) - y(0)|
  double rho = 0.0;  // rho(u*, u, t)
  double margin = 0.0;
};

struct DivergenceCheck {
  bool guard_passed = false;
  double guard_rho = 0.0;
  double guard_distance = 0.0;
  bool holds = false;
  double min_margin = 0.0;
  std::vector<DivergencePoint> points;
};

/// Checks |kappa(y(t), t) - y0| <= rho(u*, u, t) on a grid of [0, T] after
/// the guard rho(u*, u, T) < dist(y0, bd S); skipped when the guard fails.
DivergenceCheck verify_divergence_bound(const MetricContext& ctx, const ControlSignal& u,
                                        const Vec& y0, double T, double grid_step = 1.0 / 16,
                                        double tol = 1e-9);

/// Reads "t,u1..uk" rows (header optional). Row i holds on [t_i, t_{i+1});
/// the last row is the tail. The first time must be 0.
ControlSignal read_control_csv(std::istream& in);

}  // namespace limco

#endif  // LIMCO_METRIC_HPP
