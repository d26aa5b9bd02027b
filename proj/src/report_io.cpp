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

#include "limco/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace limco::io {

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

template <class T>
Json list(const std::vector<T>& items) {
  Json a = Json::array();
  for (const auto& x : items) a.push_back(to_json(x));
  return a;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json activities(const std::vector<Activity>& v) {
  Json a = Json::array();
  for (Activity x : v) a.push_back(to_string(x));
  return a;
}

void csv_number(std::ostream& os, double v) { os << ',' << v; }

}  // namespace

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const RowVec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(RowVec(m.row(i))));
  return a;
}

Json to_json(const Box& b) {
  Json j;
  j["lo"] = to_json(b.lo);
  j["hi"] = to_json(b.hi);
  return j;
}

// ---------------------------------------------------------------------------
// costate

Json to_json(const HorizonRow& r) {
  Json j;
  j["tau"] = r.tau;
  j["xi"] = to_json(r.xi);
  j["I"] = to_json(r.I);
  j["norm_I"] = r.norm_I;
  j["j_gap"] = r.j_gap;
  j["relative_gap"] = opt(r.relative_gap);
  j["failed"] = r.failed;
  j["error"] = r.error;
  return j;
}

Json to_json(const LimitReport& r) {
  Json j;
  j["classification"] = to_string(r.classification);
  j["limit_vector"] = to_json(r.limit_vector);
  j["table"] = list(r.table);
  j["residuals"] = numbers(r.residuals);
  j["direction_residuals"] = numbers(r.direction_residuals);
  Json h = Json::array();
  for (LimitClass c : r.prefix_history) h.push_back(to_string(c));
  j["prefix_history"] = h;
  j["subsequence_hint"] = r.subsequence_hint ? Json(*r.subsequence_hint) : Json(nullptr);
  j["partial"] = r.partial;
  j["error"] = r.error;
  return j;
}

Json to_json(const CostateCandidate& c) {
  Json j;
  j["lambda"] = c.lambda;
  j["psi0"] = to_json(c.psi0);
  j["provenance"] = to_string(c.provenance);
  j["shot_index"] = c.shot_index;
  j["normalized"] = c.normalized;
  return j;
}

Json to_json(const TransversalityResult& t) {
  Json j;
  j["holds"] = t.holds;
  j["distance"] = t.distance;
  j["approximate"] = t.approximate;
  j["activity"] = activities(t.activity);
  return j;
}

Json to_json(const ClassifiedCandidate& c) {
  Json j;
  j["raw"] = to_json(c.raw);
  j["candidate"] = to_json(c.candidate);
  j["transversality"] = to_json(c.transversality);
  return j;
}

Json to_json(const AkResult& r) {
  Json j;
  j["psi_T"] = to_json(r.psi_T);
  j["verdict"] = to_string(r.verdict);
  j["horizons"] = numbers(r.horizons);
  j["partials"] = list(r.partials);
  j["residuals"] = numbers(r.residuals);
  j["I_star"] = to_json(r.I_star);
  j["A_inv_T"] = to_json(r.A_inv_T);
  return j;
}

// ---------------------------------------------------------------------------
// pmp

Json to_json(const PmpReport& r, bool with_series) {
  Json j;
  j["pass"] = r.pass;
  j["adjoint_pass"] = r.adjoint_pass;
  j["max_pass"] = r.max_pass;
  j["normalization_pass"] = r.normalization_pass;
  j["transversality_pass"] = r.transversality_pass;
  j["adjoint_residual"] = r.adjoint_residual;
  j["max_residual"] = r.max_residual;
  j["max_residual_time"] = r.max_residual_time;
  j["normalization_error"] = r.normalization_error;
  j["normalization_deferred"] = r.normalization_deferred;
  j["transversality"] = to_json(r.transversality);
  Json tol;
  tol["adjoint"] = r.tolerances.adjoint;
  tol["normalization"] = r.tolerances.normalization;
  tol["max_residual"] = r.tolerances.max_residual;
  tol["transversality"] = r.tolerances.transversality;
  j["tolerances"] = tol;
  j["lambda"] = r.path.lambda;
  j["grid_size"] = r.grid.size();
  if (with_series) {
    j["grid"] = numbers(r.grid);
    j["psi"] = list(r.path.psi);
    j["adjoint_residuals"] = numbers(r.adjoint_residuals);
    j["max_residuals"] = numbers(r.max_residuals);
  }
  return j;
}

Json to_json(const ContinuityProbe& p) {
  Json j;
  Json rows = Json::array();
  for (const ContinuityRow& r : p.rows) {
    Json x;
    x["tau"] = r.tau;
    x["b"] = to_json(r.b);
    x["dI"] = r.dI;
    x["dJ"] = r.dJ;
    x["failed"] = r.failed;
    rows.push_back(x);
  }
  j["rows"] = rows;
  j["consistent"] = p.consistent;
  j["verdict"] = p.verdict;
  return j;
}

Json to_json(const EquicontinuityProbe& p) {
  Json j;
  j["scales"] = numbers(p.scales);
  j["taus"] = numbers(p.taus);
  Json m = Json::array();
  for (const auto& row : p.moduli) m.push_back(numbers(row));
  j["moduli"] = m;
  j["envelope"] = numbers(p.envelope);
  j["holds"] = p.holds;
  j["verdict"] = p.verdict;
  j["limit_gradient_gap"] = opt(p.limit_gradient_gap);
  return j;
}

Json to_json(const std::vector<OmegaViolation>& v) {
  Json a = Json::array();
  for (const OmegaViolation& o : v) {
    Json x;
    x["b"] = to_json(o.b);
    x["tau_n"] = o.tau_n;
    x["tau_k"] = o.tau_k;
    x["lhs"] = o.lhs;
    x["rhs"] = o.rhs;
    a.push_back(x);
  }
  return a;
}

Json to_json(const JointLimitResult& r) {
  Json j;
  j["holds"] = r.holds;
  j["I_star"] = to_json(r.I_star);
  j["spread"] = r.spread;
  j["failures"] = r.failures;
  Json stages = Json::array();
  for (const ProbeStage& s : r.stages) {
    Json x;
    x["tau"] = s.tau;
    x["radius"] = s.radius;
    x["samples"] = s.xi.size();
    int failed = 0;
    for (bool f : s.failed) failed += f ? 1 : 0;
    x["failed"] = failed;
    stages.push_back(x);
  }
  j["stages"] = stages;
  return j;
}

Json to_json(const PointCloud& c) {
  Json j;
  j["points"] = c.points.size();
  Json cl = Json::array();
  for (const Cluster& k : c.clusters) {
    Json x;
    x["centroid"] = to_json(k.centroid);
    x["count"] = k.count;
    x["spread"] = k.spread;
    cl.push_back(x);
  }
  j["clusters"] = cl;
  j["empty_at_budget"] = c.empty_at_budget();
  return j;
}

Json to_json(const CrossCheck& c) {
  Json j;
  j["consistent"] = c.consistent;
  j["distance"] = c.distance;
  j["note"] = c.note;
  return j;
}

Json to_json(const GradientsAtInfinity& g) {
  Json j;
  j["d1"] = to_json(g.d1);
  j["d0"] = to_json(g.d0);
  j["probe"] = to_json(g.probe);
  j["eps"] = g.eps;
  return j;
}

// ---------------------------------------------------------------------------
// metric

Json to_json(const MetricContext& ctx, int m_samples_per_unit) {
  Json j;
  j["T_max"] = ctx.T_max();
  j["k_max"] = ctx.k_max();
  j["weight_form"] =
      ctx.options().weight == WeightForm::kIntegral ? "integral" : "exponential";
  j["class_rule"] = ctx.options().class_rule == ClassRule::kMax ? "max" : "min";
  j["slices_per_unit"] = ctx.options().slices_per_unit;
  j["inflation"] = ctx.options().inflation;
  Json boxes = Json::array();
  for (std::size_t n = 0; n < ctx.funnel().size(); ++n) {
    Json b = to_json(ctx.funnel()[n]);
    b["n"] = n + 1;
    boxes.push_back(b);
  }
  j["funnel"] = boxes;
  Json L = Json::array();
  const auto& st = ctx.slice_times();
  for (std::size_t i = 0; i < ctx.lipschitz().size(); ++i) {
    Json x;
    x["t0"] = st[i];
    x["t1"] = st[i + 1];
    x["L"] = ctx.lipschitz()[i];
    L.push_back(x);
  }
  j["lipschitz"] = L;
  Json M = Json::array();
  const int per = std::max(1, m_samples_per_unit);
  const long count = static_cast<long>(std::ceil(ctx.T_max() * per - 1e-9));
  for (long i = 0; i <= count; ++i) {
    const double t = std::min(ctx.T_max(), static_cast<double>(i) / per);
    Json x;
    x["t"] = t;
    x["M"] = ctx.weight(t);
    M.push_back(x);
  }
  j["M"] = M;
  return j;
}

Json to_json(const RhoValue& r) {
  Json j;
  j["value"] = r.value;
  j["T"] = r.T;
  j["disagreement"] = r.disagreement;
  return j;
}

Json to_json(const DivergenceCheck& d) {
  Json j;
  j["guard_passed"] = d.guard_passed;
  j["guard_rho"] = d.guard_rho;
  j["guard_distance"] = d.guard_distance;
  j["holds"] = d.holds;
  j["min_margin"] = d.min_margin;
  Json pts = Json::array();
  for (const DivergencePoint& p : d.points) {
    Json x;
    x["t"] = p.t;
    x["lhs"] = p.lhs;
    x["rho"] = p.rho;
    x["margin"] = p.margin;
    pts.push_back(x);
  }
  j["points"] = pts;
  return j;
}

// ---------------------------------------------------------------------------
// example

Json to_json(const bolza::Check& c) {
  Json j;
  j["name"] = c.name;
  j["computed"] = c.computed;
  j["expected"] = c.expected;
  j["tol"] = c.tol;
  j["pass"] = c.pass;
  return j;
}

Json to_json(const bolza::GapProbe& g) {
  Json j;
  Json rows = Json::array();
  for (const bolza::GapRow& r : g.rows) {
    Json x;
    x["T"] = r.T;
    x["min_J"] = r.min_J;
    x["argmin_b"] = r.argmin_b;
    x["argmin_control"] = r.argmin_control;
    x["reference_J"] = r.reference_J;
    x["theta_hat"] = opt(r.theta_hat);
    x["theta_bound"] = opt(r.theta_bound);
    x["worst_case_ok"] = r.worst_case_ok;
    x["reference_ok"] = r.reference_ok;
    x["theta_bound_ok"] = r.theta_bound_ok;
    rows.push_back(x);
  }
  j["rows"] = rows;
  j["evaluations"] = g.evaluations;
  j["monotone"] = g.monotone;
  j["pass"] = g.pass;
  return j;
}

Json to_json(const bolza::ExampleReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["classification"] = to_string(r.classification);
  j["I_star"] = r.I_star;
  j["I_table"] = list(r.I_table);
  j["psi_true"] = list(r.psi_true);
  j["ak_candidate"] = list(r.ak_candidate);
  j["pmp_verdicts"] = {{"ak", to_json(r.ak_pmp)}, {"true", to_json(r.true_pmp)}};
  j["ak_fails"] = r.ak_fails;
  j["true_passes"] = r.true_passes;
  j["uniqueness"] = list(r.uniqueness);
  j["bound_checks"] = list(r.bound_checks);
  j["gap_table"] = r.gap ? to_json(*r.gap) : Json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// CSV

void write_horizon_csv(std::ostream& os, const LimitReport& r) {
  const int m = r.table.empty() ? 0 : static_cast<int>(r.table.front().xi.size());
  os << "tau";
  for (int i = 1; i <= m; ++i) os << ",xi" << i;
  for (int i = 1; i <= m; ++i) os << ",I" << i;
  os << ",norm_I,j_gap,relative_gap,failed\n";
  os << std::setprecision(17);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const HorizonRow& h : r.table) {
    os << h.tau;
    for (int i = 0; i < m; ++i) csv_number(os, h.xi[i]);
    for (int i = 0; i < m; ++i) csv_number(os, h.I.size() == m ? h.I[i] : nan);
    csv_number(os, h.norm_I);
    csv_number(os, h.j_gap);
    csv_number(os, h.relative_gap.value_or(nan));
    os << ',' << (h.failed ? 1 : 0) << '\n';
  }
}

void write_pmp_csv(std::ostream& os, const PmpReport& r) {
  const int m = r.path.states.empty() ? 0 : static_cast<int>(r.path.states.front().size());
  os << "t";
  for (int i = 1; i <= m; ++i) os << ",x" << i;
  for (int i = 1; i <= m; ++i) os << ",psi" << i;
  os << ",adjoint_residual,max_residual\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    os << r.grid[k];
    for (int i = 0; i < m; ++i) csv_number(os, r.path.states[k][i]);
    for (int i = 0; i < m; ++i) csv_number(os, r.path.psi[k][i]);
    csv_number(os, r.adjoint_residuals[k]);
    csv_number(os, r.max_residuals[k]);
    os << '\n';
  }
}

void write_series_csv(std::ostream& os, const std::vector<bolza::SeriesRow>& rows) {
  os << "t,psi_true,psi_exact,psi_ak,ak_residual,true_residual\n";
  os << std::setprecision(17);
  for (const bolza::SeriesRow& s : rows) {
    os << s.t;
    csv_number(os, s.psi_true);
    csv_number(os, s.psi_exact);
    csv_number(os, s.psi_ak);
    csv_number(os, s.ak_residual);
    csv_number(os, s.true_residual);
    os << '\n';
  }
}

}  // namespace limco::io
