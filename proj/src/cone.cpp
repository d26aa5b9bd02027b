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

#include "limco/cone.hpp"

#include <cmath>
#include <limits>

namespace limco {

std::string to_string(Activity a) {
  switch (a) {
    case Activity::kInterior: return "interior";
    case Activity::kAtLower: return "at-lower";
    case Activity::kAtUpper: return "at-upper";
    case Activity::kDegenerate: return "degenerate-point";
  }
  return "unknown";
}

NormalCone NormalCone::at(const Box& box, const Vec& b, double face_tol) {
  if (b.size() != box.dim()) throw InvalidArgument("point and box differ in dimension");
  if (!box.contains(b, face_tol)) throw InvalidArgument("normal cone requested outside the box");
  NormalCone cone;
  for (int i = 0; i < box.dim(); ++i) {
    const bool lower = std::abs(b[i] - box.lo[i]) <= face_tol;
    const bool upper = std::abs(b[i] - box.hi[i]) <= face_tol;
    if (lower && upper) {
      cone.activity_.push_back(Activity::kDegenerate);
    } else if (lower) {
      cone.activity_.push_back(Activity::kAtLower);
    } else if (upper) {
      cone.activity_.push_back(Activity::kAtUpper);
    } else {
      cone.activity_.push_back(Activity::kInterior);
    }
  }
  return cone;
}

RowVec NormalCone::project(const RowVec& v) const {
  if (v.size() != dim()) throw InvalidArgument("covector and cone differ in dimension");
  RowVec out(v.size());
  for (int i = 0; i < dim(); ++i) {
    switch (activity_[i]) {
      case Activity::kInterior: out[i] = 0.0; break;
      case Activity::kAtLower: out[i] = std::min(v[i], 0.0); break;
      case Activity::kAtUpper: out[i] = std::max(v[i], 0.0); break;
      case Activity::kDegenerate: out[i] = v[i]; break;
    }
  }
  return out;
}

TransversalityResult transversality(const ControlProblem& p, const Vec& b, const RowVec& psi0,
                                    double lambda, double tol) {
  const NormalCone cone = NormalCone::at(p.initial_set, b);
  TransversalityResult r;
  r.activity = cone.activity();
  r.approximate = p.has_subdifferential_oracle();
  r.distance = std::numeric_limits<double>::infinity();
  for (const RowVec& g : p.initial_cost_subdifferential(b))
    r.distance = std::min(r.distance, cone.distance(psi0 - lambda * g));
  r.holds = r.distance <= tol;
  return r;
}

}  // namespace limco
