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

#ifndef LIMCO_REPORT_IO_HPP
#define LIMCO_REPORT_IO_HPP

#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "limco/bolza.hpp"
#include "limco/metric.hpp"

// JSON field order is fixed (ordered_json), non-finite numbers become null.
namespace limco::io {

using Json = nlohmann::ordered_json;

Json to_json(const Vec& v);
Json to_json(const RowVec& v);
Json to_json(const Mat& m);  // rows
Json to_json(const Box& b);

Json to_json(const HorizonRow& r);
Json to_json(const LimitReport& r);
Json to_json(const CostateCandidate& c);
Json to_json(const TransversalityResult& t);
Json to_json(const ClassifiedCandidate& c);
Json to_json(const AkResult& r);
Json to_json(const PmpReport& r, bool with_series = false);
Json to_json(const ContinuityProbe& p);
Json to_json(const EquicontinuityProbe& p);
Json to_json(const std::vector<OmegaViolation>& v);
Json to_json(const JointLimitResult& r);
Json to_json(const PointCloud& c);
Json to_json(const CrossCheck& c);
Json to_json(const GradientsAtInfinity& g);

Json to_json(const MetricContext& ctx, int m_samples_per_unit = 4);
Json to_json(const RhoValue& r);
Json to_json(const DivergenceCheck& d);

Json to_json(const bolza::Check& c);
Json to_json(const bolza::GapProbe& g);
Json to_json(const bolza::ExampleReport& r);

/// tau, xi..., I..., norm_I, j_gap, relative_gap, failed
void write_horizon_csv(std::ostream& os, const LimitReport& r);
/// t, x..., psi..., adjoint_residual, max_residual
void write_pmp_csv(std::ostream& os, const PmpReport& r);
/// t, psi_true, psi_exact, psi_ak, ak_residual, true_residual
void write_series_csv(std::ostream& os, const std::vector<bolza::SeriesRow>& rows);

}  // namespace limco::io

#endif  // LIMCO_REPORT_IO_HPP
