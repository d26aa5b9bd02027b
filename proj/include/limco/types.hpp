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

#ifndef LIMCO_TYPES_HPP
#define LIMCO_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace limco {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;  // covectors (adjoint values, gradients)
using Mat = Eigen::MatrixXd;

/// Axis-aligned box {z : lo <= z <= hi}, one closed interval per coordinate.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lower, Vec upper);

  static Box uniform(int dim, double lower, double upper);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& z, double tol = 0.0) const;
  Vec clamp(const Vec& z) const;
  Vec center() const { return 0.5 * (lo + hi); }
  /// Euclidean distance from an interior point to the boundary of the box.
  double distance_to_boundary(const Vec& z) const;
};

/// Thrown when the inputs of an operation violate its preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by the integrators: step-size underflow, non-finite values, or a
/// step budget exhausted. `time()` is where integration stopped.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace limco

#endif  // LIMCO_TYPES_HPP
