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

#ifndef LIMCO_CONE_HPP
#define LIMCO_CONE_HPP

#include <string>
#include <vector>

#include "limco/problem.hpp"

namespace limco {

enum class Activity { kInterior, kAtLower, kAtUpper, kDegenerate };
std::string to_string(Activity a);

/// Normal cone of a box at a point: the product of {0} (interior),
/// (-inf, 0] (at the lower bound), [0, inf) (at the upper bound) and R
/// (degenerate coordinate with lo == hi). Proximal and limiting cones agree.
class NormalCone {
 public:
  /// `face_tol` decides when a coordinate counts as sitting on a face.
  static NormalCone at(const Box& box, const Vec& b, double face_tol = 1e-12);

  const std::vector<Activity>& activity() const { return activity_; }
  int dim() const { return static_cast<int>(activity_.size()); }

  RowVec project(const RowVec& v) const;
  double distance(const RowVec& v) const { return (v - project(v)).norm(); }
  bool contains(const RowVec& v, double tol = 0.0) const { return distance(v) <= tol; }

 private:
  std::vector<Activity> activity_;
};

struct TransversalityResult {
  bool holds = false;
  double distance = 0.0;  // to lambda * d l(b) + N_C(b)
  bool approximate = false;  // true when a finite oracle set was used
  std::vector<Activity> activity;
};

/// Tests psi0 in lambda * d_L l(b) + N_C(b). The distance is the minimum over
/// the available subgradients of the exact cone distance.
TransversalityResult transversality(const ControlProblem& p, const Vec& b, const RowVec& psi0,
                                    double lambda, double tol = 1e-6);

}  // namespace limco

#endif  // LIMCO_CONE_HPP
