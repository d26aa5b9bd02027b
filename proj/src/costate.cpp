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

#include "limco/costate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace limco {

// ---------------------------------------------------------------------------
// Horizons

namespace {

void check_horizons(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("horizon sequence is empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw InvalidArgument("horizons must be positive");
    if (i > 0 && !(v[i] > v[i - 1])) throw InvalidArgument("horizons must be strictly increasing");
  }
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw InvalidArgument("bad number '" + std::string(s) + "' in " + std::string(what));
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

HorizonSequence HorizonSequence::geometric(double tau0, double ratio, int count) {
  if (!(tau0 > 0.0) || !(ratio > 1.0) || count < 1)
    throw InvalidArgument("geometric horizons need tau0 > 0, ratio > 1, count >= 1");
  HorizonSequence h;
  for (int n = 0; n < count; ++n) h.values.push_back(tau0 * std::pow(ratio, n));
  check_horizons(h.values);
  h.tag = "geometric:" + format_number(tau0) + ":" + format_number(ratio) + ":" +
          std::to_string(count);
  return h;
}

HorizonSequence HorizonSequence::list(std::vector<double> values) {
  check_horizons(values);
  HorizonSequence h;
  h.values = std::move(values);
  h.tag = "list:";
  for (std::size_t i = 0; i < h.values.size(); ++i)
    h.tag += (i ? "," : "") + format_number(h.values[i]);
  return h;
}

HorizonSequence HorizonSequence::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw InvalidArgument("horizon spec must be geometric:tau0:r:N or list:t1,t2,...");
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  if (kind == "geometric") {
    const auto parts = split(rest, ':');
    if (parts.size() != 3) throw InvalidArgument("geometric horizon spec needs tau0:r:N");
    const double n = parse_double(parts[2], "horizon count");
    if (n != std::floor(n) || n < 1 || n > 1e6) throw InvalidArgument("horizon count must be a positive integer");
    return geometric(parse_double(parts[0], "tau0"), parse_double(parts[1], "ratio"),
                     static_cast<int>(n));
  }
  if (kind == "list") {
    std::vector<double> values;
    for (auto part : split(rest, ',')) values.push_back(parse_double(part, "horizon list"));
    return list(std::move(values));
  }
  throw InvalidArgument("unknown horizon generator '" + std::string(kind) + "'");
}

HorizonSequence HorizonSequence::tail_after(double T, int count) {
  if (!(T >= 0.0)) throw InvalidArgument("tail start must be >= 0");
  std::vector<double> values;
  for (int n = 0; n < count; ++n) values.push_back(T + std::pow(2.0, n));
  HorizonSequence h = list(std::move(values));
  return h;
}

// ---------------------------------------------------------------------------
// Candidates

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kBackwardShot: return "backward-shot";
    case Provenance::kAkFormula: return "ak-formula";
    case Provenance::kJointLimit: return "joint-limit";
    case Provenance::kUser: return "user";
  }
  return "unknown";
}

CostateCandidate CostateCandidate::user(double lambda, RowVec psi0) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  if (lambda == 0.0 && psi0.norm() == 0.0)
    throw InvalidArgument("multipliers (lambda, psi0) must not both vanish");
  CostateCandidate c;
  c.lambda = lambda;
  c.psi0 = std::move(psi0);
  c.provenance = Provenance::kUser;
  return c;
}

CostateCandidate CostateCandidate::normalized_copy() const {
  const double s = psi0.norm() + lambda;
  if (!(s > 0.0)) throw InvalidArgument("cannot normalize vanishing multipliers");
  CostateCandidate c = *this;
  c.lambda = lambda / s;
  c.psi0 = psi0 / s;
  c.normalized = true;
  return c;
}

std::string to_string(LimitClass c) {
  switch (c) {
    case LimitClass::kNormalFinite: return "NormalFinite";
    case LimitClass::kAbnormalUnbounded: return "AbnormalUnbounded";
    case LimitClass::kInconclusive: return "Inconclusive";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Classification

namespace {

LimitClass classify_impl(const std::vector<RowVec>& v, const LimitCriteria& c,
                         std::size_t min_len, RowVec* limit) {
  const std::size_t n = v.size();
  if (n < min_len || n < 3) return LimitClass::kInconclusive;
  const RowVec& last = v[n - 1];
  const double norm = last.norm();
  if (!std::isfinite(norm)) return LimitClass::kInconclusive;
  const double d1 = (v[n - 1] - v[n - 2]).norm();
  const double d2 = (v[n - 2] - v[n - 3]).norm();
  if (norm < c.divergence_threshold) {
    const double tol = c.eps_lim * (1.0 + norm);
    if (d1 <= tol && d2 <= tol) {
      if (limit) *limit = last;
      return LimitClass::kNormalFinite;
    }
    return LimitClass::kInconclusive;
  }
  const double n2 = v[n - 2].norm(), n3 = v[n - 3].norm();
  if (!(n2 > 0.0 && n3 > 0.0)) return LimitClass::kInconclusive;
  const double e1 = (last / norm - v[n - 2] / n2).norm();
  const double e2 = (v[n - 2] / n2 - v[n - 3] / n3).norm();
  const double tol = 2.0 * c.eps_lim;  // unit vectors: eps (1 + 1)
  if (e1 <= tol && e2 <= tol) {
    if (limit) *limit = last / norm;
    return LimitClass::kAbnormalUnbounded;
  }
  return LimitClass::kInconclusive;
}

std::optional<std::string> subsequence_hint(const std::vector<RowVec>& v, const LimitCriteria& c) {
  if (v.size() < 6) return std::nullopt;
  std::vector<RowVec> even, odd;
  for (std::size_t i = 0; i < v.size(); ++i) (i % 2 == 0 ? even : odd).push_back(v[i]);
  const LimitClass ce = classify_impl(even, c, 3, nullptr);
  const LimitClass co = classify_impl(odd, c, 3, nullptr);
  if (ce == LimitClass::kInconclusive && co == LimitClass::kInconclusive) return std::nullopt;
  return "even-indexed subsequence: " + to_string(ce) + "; odd-indexed subsequence: " +
         to_string(co) + " (pattern hint only, no subsequence search)";
}

std::vector<SensitivitySnapshot> snapshots(const ControlProblem& p, const Vec& xi,
                                           const ControlSignal& u,
                                           const std::vector<double>& times,
                                           const IntegratorOptions& opts) {
  return sensitivity_at(p, xi, u, times, opts);
}

}  // namespace

LimitClass classify_sequence(const std::vector<RowVec>& values, const LimitCriteria& c,
                             RowVec* limit) {
  return classify_impl(values, c, 4, limit);
}

// ---------------------------------------------------------------------------
// Backward shot

ShotResult backward_shot(const ControlProblem& p, const Vec& xi, const ControlSignal& u,
                         double lambda, double tau, const IntegratorOptions& opts) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  if (!(tau > 0.0)) throw InvalidArgument("shot horizon must be positive");
  const auto snap = snapshots(p, xi, u, {tau}, opts).front();
  ShotResult r;
  r.candidate.lambda = lambda;
  r.candidate.psi0 = -lambda * snap.I;
  r.candidate.provenance = Provenance::kBackwardShot;
  r.degenerate = lambda == 0.0;
  r.path = integrate_adjoint(p, xi, u, lambda, tau, RowVec::Zero(p.state_dim), tau, opts);
  const auto forward = integrate_adjoint(p, xi, u, lambda, 0.0, r.candidate.psi0, tau, opts);
  r.terminal_residual = forward.psi.back().norm();
  return r;
}

std::vector<Vec> constant_schedule(const Vec& b_star, std::size_t count) {
  return std::vector<Vec>(count, b_star);
}

std::vector<Vec> perturbed_schedule(const Vec& b_star, std::size_t count, double r0,
                                    const Vec& direction) {
  if (direction.size() != b_star.size()) throw InvalidArgument("direction has wrong dimension");
  std::vector<Vec> out;
  for (std::size_t n = 0; n < count; ++n)
    out.push_back(b_star + r0 * std::ldexp(1.0, -static_cast<int>(n)) * direction);
  return out;
}

std::vector<Vec> direction_dictionary(int dim, int random_count, std::uint64_t seed) {
  std::vector<Vec> out;
  for (int i = 0; i < dim; ++i) {
    out.push_back(Vec::Unit(dim, i));
    out.push_back(-Vec::Unit(dim, i));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < random_count; ++k) {
    Vec d(dim);
    do {
      for (int i = 0; i < dim; ++i) d[i] = normal(rng);
    } while (d.norm() == 0.0);
    out.push_back(d / d.norm());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Horizon sweep

LimitReport horizon_sweep(const ControlProblem& p, const Vec& b_star, const ControlSignal& u,
                          const HorizonSequence& tau, const std::vector<Vec>& xi_schedule_in,
                          const LimitCriteria& criteria, const IntegratorOptions& opts,
                          const Parallelism& par) {
  const auto& taus = tau.values;
  check_horizons(taus);
  if (taus.size() < 4) throw InvalidArgument("horizon sweep needs at least 4 horizons");
  const std::vector<Vec> xi_schedule =
      xi_schedule_in.empty() ? constant_schedule(b_star, taus.size()) : xi_schedule_in;
  if (xi_schedule.size() != taus.size())
    throw InvalidArgument("xi schedule and horizon sequence differ in length");
  for (const auto& xi : xi_schedule)
    if (xi.size() != p.state_dim) throw InvalidArgument("xi schedule has wrong dimension");
  if (b_star.size() != p.state_dim) throw InvalidArgument("b* has wrong dimension");

  const std::size_t n = taus.size();
  // Reference values at b*: one pass when possible, per horizon otherwise.
  std::vector<std::optional<SensitivitySnapshot>> base(n);
  try {
    auto all = snapshots(p, b_star, u, taus, opts);
    for (std::size_t i = 0; i < n; ++i) base[i] = std::move(all[i]);
  } catch (const IntegrationError&) {
    parallel_for(n, par, [&](std::size_t i) {
      try {
        base[i] = snapshots(p, b_star, u, {taus[i]}, opts).front();
      } catch (const IntegrationError&) {
      }
    });
  }

  LimitReport report;
  report.table.resize(n);
  parallel_for(n, par, [&](std::size_t i) {
    HorizonRow& row = report.table[i];
    row.tau = taus[i];
    row.xi = xi_schedule[i];
    try {
      SensitivitySnapshot s;
      if (xi_schedule[i] == b_star) {
        if (!base[i]) throw IntegrationError("integration failed at b*", taus[i]);
        s = *base[i];
      } else {
        s = snapshots(p, xi_schedule[i], u, {taus[i]}, opts).front();
      }
      row.I = s.I;
      row.norm_I = s.I.norm();
      if (base[i]) {
        row.j_gap = s.J - base[i]->J;
        const double ref = base[i]->I.norm();
        if (ref > 0.0) row.relative_gap = (s.I - base[i]->I).norm() / ref;
      }
    } catch (const IntegrationError& e) {
      row.failed = true;
      row.error = e.what();
    }
  });

  std::vector<RowVec> values;
  for (const auto& row : report.table) {
    if (row.failed) {
      report.partial = true;
      report.error = "integration failed at tau = " + format_number(row.tau) + ": " + row.error;
      break;
    }
    values.push_back(row.I);
  }
  for (std::size_t k = 1; k < values.size(); ++k) {
    report.residuals.push_back((values[k] - values[k - 1]).norm());
    const double a = values[k].norm(), b = values[k - 1].norm();
    report.direction_residuals.push_back(
        a > 0.0 && b > 0.0 ? (values[k] / a - values[k - 1] / b).norm()
                           : std::numeric_limits<double>::quiet_NaN());
  }
  for (std::size_t k = 4; k <= values.size(); ++k) {
    const std::vector<RowVec> prefix(values.begin(), values.begin() + static_cast<long>(k));
    report.prefix_history.push_back(classify_sequence(prefix, criteria));
  }
  report.limit_vector = RowVec::Zero(p.state_dim);
  report.classification = classify_sequence(values, criteria, &report.limit_vector);
  if (report.classification == LimitClass::kInconclusive)
    report.subsequence_hint = subsequence_hint(values, criteria);
  return report;
}

ClassifiedCandidate classify_candidate(const ControlProblem& p, const Vec& b_star,
                                       const LimitReport& report, double tol) {
  ClassifiedCandidate out;
  out.raw.provenance = Provenance::kBackwardShot;
  out.raw.shot_index = static_cast<int>(report.table.size()) - 1;
  switch (report.classification) {
    case LimitClass::kNormalFinite:
      out.raw.lambda = 1.0;
      out.raw.psi0 = -report.limit_vector;
      break;
    case LimitClass::kAbnormalUnbounded:
      out.raw.lambda = 0.0;
      out.raw.psi0 = -report.limit_vector / report.limit_vector.norm();
      break;
    case LimitClass::kInconclusive:
      throw InvalidArgument("cannot build a candidate from an Inconclusive report");
  }
  out.candidate = out.raw.normalized_copy();
  out.transversality = transversality(p, b_star, out.candidate.psi0, out.candidate.lambda, tol);
  return out;
}

// ---------------------------------------------------------------------------
// Explicit formulae

std::string to_string(TailVerdict v) {
  switch (v) {
    case TailVerdict::kConverged: return "converged";
    case TailVerdict::kDivergent: return "divergent";
    case TailVerdict::kOscillatory: return "oscillatory";
  }
  return "unknown";
}

AkResult ak_costate(const ControlProblem& p, const Vec& b_star, const ControlSignal& u, double T,
                    const HorizonSequence& tail, const LimitCriteria& criteria,
                    const IntegratorOptions& opts) {
  if (!(T >= 0.0)) throw InvalidArgument("T must be >= 0");
  check_horizons(tail.values);
  if (tail.values.size() < 3) throw InvalidArgument("need at least 3 tail horizons");
  if (!(tail.values.front() > T)) throw InvalidArgument("tail horizons must exceed T");
  std::vector<double> times{T};
  times.insert(times.end(), tail.values.begin(), tail.values.end());
  const auto snaps = snapshots(p, b_star, u, times, opts);

  AkResult r;
  r.A_inv_T = snaps.front().A_inv;
  r.horizons = tail.values;
  for (std::size_t k = 1; k < snaps.size(); ++k) r.partials.push_back(snaps[k].I - snaps[0].I);
  for (std::size_t k = 1; k < r.partials.size(); ++k)
    r.residuals.push_back((r.partials[k] - r.partials[k - 1]).norm());
  r.I_star = snaps.back().I;
  const RowVec& last = r.partials.back();
  const std::size_t nr = r.residuals.size();
  const double tol = criteria.eps_lim * (1.0 + last.norm());
  if (nr >= 2 && r.residuals[nr - 1] <= tol && r.residuals[nr - 2] <= tol) {
    r.verdict = TailVerdict::kConverged;
  } else {
    const std::size_t np = r.partials.size();
    const bool growing = r.partials[np - 1].norm() > r.partials[np - 2].norm() &&
                         r.partials[np - 2].norm() > r.partials[np - 3].norm();
    const bool not_shrinking = nr >= 2 && r.residuals[nr - 1] >= r.residuals[nr - 2];
    r.verdict = growing && not_shrinking ? TailVerdict::kDivergent : TailVerdict::kOscillatory;
  }
  r.psi_T = -last * r.A_inv_T;
  return r;
}

RowVec shifted_limit_costate(const ControlProblem& p, const Vec& b_star,
                             const ControlSignal& u, const RowVec& I_star, double T,
                             const IntegratorOptions& opts) {
  if (!(T >= 0.0)) throw InvalidArgument("T must be >= 0");
  if (I_star.size() != p.state_dim) throw InvalidArgument("I_* has wrong dimension");
  if (T == 0.0) return -I_star;
  const auto s = snapshots(p, b_star, u, {T}, opts).front();
  return (-I_star + s.I) * s.A_inv;
}

// ---------------------------------------------------------------------------
// Joint limits and subdifferentials at infinity

namespace {

Vec ball_sample(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec d(dim);
  do {
    for (int i = 0; i < dim; ++i) d[i] = normal(rng);
  } while (d.norm() == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / dim);
  return r * d / d.norm();
}

double diameter(const std::vector<RowVec>& pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

}  // namespace

JointLimitResult joint_limit_probe(const ControlProblem& p, const Vec& b_star,
                                   const ControlSignal& u, const HorizonSequence& tau,
                                   const std::vector<double>& radii, int samples_per_radius,
                                   std::uint64_t seed, const LimitCriteria& criteria,
                                   const IntegratorOptions& opts, const Parallelism& par) {
  check_horizons(tau.values);
  if (radii.empty()) throw InvalidArgument("radius sequence is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 0.0)) throw InvalidArgument("radii must be nonnegative");
    if (i > 0 && radii[i] > radii[i - 1]) throw InvalidArgument("radii must be nonincreasing");
  }
  if (samples_per_radius < 0) throw InvalidArgument("sample count must be nonnegative");

  JointLimitResult r;
  std::mt19937_64 rng(seed);
  struct Job {
    std::size_t stage, index;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < tau.values.size(); ++k) {
    ProbeStage st;
    st.tau = tau.values[k];
    st.radius = radii[std::min(k, radii.size() - 1)];
    st.xi.push_back(b_star);
    for (int s = 0; s < samples_per_radius; ++s)
      st.xi.push_back(b_star + ball_sample(rng, p.state_dim, st.radius));
    st.I.assign(st.xi.size(), RowVec());
    st.failed.assign(st.xi.size(), false);
    for (std::size_t i = 0; i < st.xi.size(); ++i) jobs.push_back({k, i});
    r.stages.push_back(std::move(st));
  }
  std::vector<char> failed(jobs.size(), 0);
  parallel_for(jobs.size(), par, [&](std::size_t j) {
    ProbeStage& st = r.stages[jobs[j].stage];
    try {
      st.I[jobs[j].index] = sensitivity_at(p, st.xi[jobs[j].index], u, {st.tau}, opts).front().I;
    } catch (const IntegrationError&) {
      failed[j] = 1;
    }
  });
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (failed[j]) {
      r.stages[jobs[j].stage].failed[jobs[j].index] = true;
      ++r.failures;
    }
  }

  const ProbeStage& last = r.stages.back();
  std::vector<RowVec> cloud;
  bool clean = true;
  for (std::size_t i = 0; i < last.xi.size(); ++i) {
    if (last.failed[i] || !last.I[i].allFinite() ||
        last.I[i].norm() >= criteria.divergence_threshold) {
      clean = false;
      if (!last.failed[i] && last.I[i].allFinite()) cloud.push_back(last.I[i]);
      continue;
    }
    cloud.push_back(last.I[i]);
  }
  r.spread = diameter(cloud);
  RowVec centroid = RowVec::Zero(p.state_dim);
  for (const auto& c : cloud) centroid += c;
  if (!cloud.empty()) centroid /= static_cast<double>(cloud.size());
  r.holds = clean && r.spread <= criteria.eps_lim * (1.0 + centroid.norm());
  if (r.holds) r.I_star = centroid;
  return r;
}

std::vector<Cluster> single_linkage(const std::vector<RowVec>& points, double eps) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double scale = 1.0 + std::max(points[i].norm(), points[j].norm());
      if ((points[i] - points[j]).norm() <= eps * scale) parent[find(i)] = find(j);
    }
  std::vector<std::size_t> order;  // roots in order of first appearance
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    auto it = std::find(order.begin(), order.end(), root);
    if (it == order.end()) {
      order.push_back(root);
      members.push_back({i});
    } else {
      members[static_cast<std::size_t>(it - order.begin())].push_back(i);
    }
  }
  std::vector<Cluster> out;
  for (const auto& group : members) {
    Cluster c;
    c.count = static_cast<int>(group.size());
    c.centroid = RowVec::Zero(points[group.front()].size());
    for (std::size_t i : group) c.centroid += points[i];
    c.centroid /= static_cast<double>(group.size());
    for (std::size_t i : group) c.spread = std::max(c.spread, (points[i] - c.centroid).norm());
    out.push_back(std::move(c));
  }
  return out;
}

CrossCheck GradientsAtInfinity::cross_check(const CostateCandidate& c) const {
  CrossCheck r;
  r.distance = std::numeric_limits<double>::infinity();
  if (c.lambda > 0.0) {
    const RowVec target = c.psi0 / c.lambda;
    if (d1.points.empty()) {
      r.note = "d1 cloud empty at budget";
      return r;
    }
    for (const auto& q : d1.points) r.distance = std::min(r.distance, (q - target).norm());
    r.consistent = r.distance <= eps * (1.0 + target.norm());
    r.note = r.consistent ? "psi0/lambda lies in the d1 cloud" : "psi0/lambda outside the d1 cloud";
    return r;
  }
  const double norm = c.psi0.norm();
  if (norm == 0.0) {
    r.note = "vanishing abnormal candidate";
    return r;
  }
  const RowVec target = c.psi0 / norm;
  for (const auto& q : d0.points)
    if (q.norm() > 0.5) r.distance = std::min(r.distance, (q - target).norm());
  if (!std::isfinite(r.distance)) {
    r.note = "no nonzero direction in the d0 cloud at budget";
    return r;
  }
  r.consistent = r.distance <= 2.0 * eps;
  r.note = r.consistent ? "direction of psi0 lies in the d0 cloud"
                        : "direction of psi0 outside the d0 cloud";
  return r;
}

GradientsAtInfinity gradients_at_infinity(const ControlProblem& p, const Vec& b_star,
                                          const ControlSignal& u, const HorizonSequence& tau,
                                          const std::vector<double>& radii, int samples,
                                          std::uint64_t seed, const LimitCriteria& criteria,
                                          const IntegratorOptions& opts, const Parallelism& par) {
  GradientsAtInfinity g;
  g.eps = criteria.eps_lim;
  g.probe = joint_limit_probe(p, b_star, u, tau, radii, samples, seed, criteria, opts, par);
  const std::size_t n = g.probe.stages.size();
  const std::size_t first = n >= 2 ? n - 2 : 0;
  bool bounded_seen = false;
  for (std::size_t k = first; k < n; ++k) {
    const ProbeStage& st = g.probe.stages[k];
    for (std::size_t i = 0; i < st.xi.size(); ++i) {
      if (st.failed[i] || !st.I[i].allFinite()) continue;
      const double norm = st.I[i].norm();
      if (norm < criteria.divergence_threshold) {
        g.d1.points.push_back(-st.I[i]);
        bounded_seen = true;
      } else {
        g.d0.points.push_back(-st.I[i] / norm);
      }
    }
  }
  if (bounded_seen) g.d0.points.push_back(RowVec::Zero(p.state_dim));
  g.d1.clusters = single_linkage(g.d1.points, criteria.eps_lim);
  g.d0.clusters = single_linkage(g.d0.points, criteria.eps_lim);
  return g;
}

}  // namespace limco
