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

#include "limco/batch.hpp"

#include <omp.h>

namespace limco {

bool Parallelism::serial() const { return jobs == 1; }

int Parallelism::threads() const { return jobs > 0 ? jobs : omp_get_max_threads(); }

namespace detail {

void run_parallel(std::size_t n, int threads, void (*fn)(std::size_t, void*), void* ctx) {
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < count; ++i) fn(static_cast<std::size_t>(i), ctx);
}

}  // namespace detail

std::vector<std::vector<SensitivitySnapshot>> sensitivity_batch(
    const ControlProblem& p, const ControlSignal& u, const std::vector<Vec>& points,
    const std::vector<double>& times, const IntegratorOptions& opts, const Parallelism& par) {
  std::vector<std::vector<SensitivitySnapshot>> out(points.size());
  parallel_for(points.size(), par,
               [&](std::size_t i) { out[i] = sensitivity_at(p, points[i], u, times, opts); });
  return out;
}

std::vector<std::vector<SensitivitySnapshot>> sensitivity_batch_serial(
    const ControlProblem& p, const ControlSignal& u, const std::vector<Vec>& points,
    const std::vector<double>& times, const IntegratorOptions& opts) {
  std::vector<std::vector<SensitivitySnapshot>> out;
  out.reserve(points.size());
  for (const auto& b : points) out.push_back(sensitivity_at(p, b, u, times, opts));
  return out;
}

std::vector<double> cost_batch(const ControlProblem& p, const std::vector<Vec>& points,
                               const std::vector<ControlSignal>& controls, double T,
                               const IntegratorOptions& opts, const Parallelism& par) {
  if (points.size() != controls.size()) throw InvalidArgument("points and controls differ in size");
  std::vector<double> out(points.size());
  parallel_for(points.size(), par, [&](std::size_t i) {
    out[i] = integrate_endpoint(p, points[i], controls[i], T, opts).second;
  });
  return out;
}

std::vector<double> cost_batch_serial(const ControlProblem& p, const std::vector<Vec>& points,
                                      const std::vector<ControlSignal>& controls, double T,
                                      const IntegratorOptions& opts) {
  if (points.size() != controls.size()) throw InvalidArgument("points and controls differ in size");
  std::vector<double> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out.push_back(integrate_endpoint(p, points[i], controls[i], T, opts).second);
  return out;
}

}  // namespace limco
