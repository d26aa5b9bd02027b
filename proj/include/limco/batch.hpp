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

#ifndef LIMCO_BATCH_HPP
#define LIMCO_BATCH_HPP

#include <cstddef>
#include <exception>
#include <vector>

#include "limco/integrate.hpp"

namespace limco {

/// jobs == 1 runs serially; jobs == 0 uses the OpenMP default team size.
struct Parallelism {
  int jobs = 0;
  bool serial() const;
  int threads() const;
};

namespace detail {
void run_parallel(std::size_t n, int threads, void (*fn)(std::size_t, void*), void* ctx);
}

/// Calls body(i) for i in [0, n). Every index runs even if another throws;
/// afterwards the exception of the lowest failing index is rethrown.
/// Results must be written by index so output never depends on scheduling.
template <class Body>
void parallel_for(std::size_t n, const Parallelism& par, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  struct Ctx {
    Body* body;
    std::vector<std::exception_ptr>* errors;
  } ctx{&body, &errors};
  auto call = [](std::size_t i, void* c) {
    auto* cx = static_cast<Ctx*>(c);
    try {
      (*cx->body)(i);
    } catch (...) {
      (*cx->errors)[i] = std::current_exception();
    }
  };
  if (par.serial()) {
    for (std::size_t i = 0; i < n; ++i) call(i, &ctx);
  } else {
    detail::run_parallel(n, par.threads(), call, &ctx);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Snapshots of the sensitivity system at `times` for each starting point,
/// one integration per point. Parallel over points.
std::vector<std::vector<SensitivitySnapshot>> sensitivity_batch(
    const ControlProblem& p, const ControlSignal& u, const std::vector<Vec>& points,
    const std::vector<double>& times, const IntegratorOptions& opts, const Parallelism& par);

/// Serial reference for `sensitivity_batch`; results are bitwise equal.
std::vector<std::vector<SensitivitySnapshot>> sensitivity_batch_serial(
    const ControlProblem& p, const ControlSignal& u, const std::vector<Vec>& points,
    const std::vector<double>& times, const IntegratorOptions& opts);

/// J(b_i, u_i; T) for paired inputs. Parallel over pairs.
std::vector<double> cost_batch(const ControlProblem& p, const std::vector<Vec>& points,
                               const std::vector<ControlSignal>& controls, double T,
                               const IntegratorOptions& opts, const Parallelism& par);

std::vector<double> cost_batch_serial(const ControlProblem& p, const std::vector<Vec>& points,
                                      const std::vector<ControlSignal>& controls, double T,
                                      const IntegratorOptions& opts);

}  // namespace limco

#endif  // LIMCO_BATCH_HPP
