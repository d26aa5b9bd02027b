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

#ifndef LIMCO_TESTS_SUPPORT_HPP
#define LIMCO_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "limco/problem.hpp"

namespace limco::testing {

// Seeded generator for property tests. Every test owns its seed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Vec vec(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  RowVec row(int n, double lo, double hi) { return vec(n, lo, hi).transpose(); }
  Vec in_box(const Box& b) {
    Vec v(b.dim());
    for (int i = 0; i < b.dim(); ++i) v[i] = uniform(b.lo[i], b.hi[i]);
    return v;
  }

  // Piecewise-constant signal with `cells` cells on [0, horizon), values in `box`.
  ControlSignal signal(const Box& box, int cells, double horizon) {
    std::vector<double> grid{0.0};
    std::vector<double> cuts;
    for (int i = 1; i < cells; ++i) cuts.push_back(uniform(0.0, horizon));
    std::sort(cuts.begin(), cuts.end());
    for (double c : cuts)
      if (c > grid.back() + 1e-9) grid.push_back(c);
    std::vector<Vec> values;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) values.push_back(in_box(box));
    return ControlSignal(grid, values, in_box(box));
  }

  // Random smooth expression over the given names. Depth-limited, only
  // functions that stay finite on a unit box.
  std::string expression(const std::vector<std::string>& names, int depth) {
    if (depth == 0 || integer(0, 3) == 0) {
      if (coin()) return names[static_cast<std::size_t>(integer(0, static_cast<int>(names.size()) - 1))];
      return std::to_string(integer(1, 9)) + "." + std::to_string(integer(0, 9));
    }
    switch (integer(0, 7)) {
      case 0: return "(" + expression(names, depth - 1) + " + " + expression(names, depth - 1) + ")";
      case 1: return "(" + expression(names, depth - 1) + " - " + expression(names, depth - 1) + ")";
      case 2: return "(" + expression(names, depth - 1) + " * " + expression(names, depth - 1) + ")";
      case 3: return "sin(" + expression(names, depth - 1) + ")";
      case 4: return "cos(" + expression(names, depth - 1) + ")";
      case 5: return "tanh(" + expression(names, depth - 1) + ")";
      case 6: return "exp(0.3*tanh(" + expression(names, depth - 1) + "))";
      default: return "(" + expression(names, depth - 1) + ")^2";
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace limco::testing

#endif  // LIMCO_TESTS_SUPPORT_HPP
