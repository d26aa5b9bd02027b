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

#include "limco/pmp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace limco {

double hamiltonian(const ControlProblem& p, const Vec& x, const Vec& u, const RowVec& psi,
                   double lambda, double t) {
  return p.hamiltonian(x, u, psi, lambda, t);
}

// ---------------------------------------------------------------------------
// Maximum condition

namespace {

double golden_max(const std::function<double(double)>& h, double a, double b, int iters,
                  double& best_x) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = h(c), fd = h(d);
  for (int i = 0; i < iters && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = h(d);
    }
  }
  if (fc >= fd) {
    best_x = c;
    return fc;
  }
  best_x = d;
  return fd;
}

}  // namespace

MaxCondition max_condition(const ControlProblem& p, const Vec& x, const Vec& u, const RowVec& psi,
                           double lambda, double t, const MaxSearchOptions& opts) {
  const Box U = p.control_set(t);
  const int k = U.dim();
  if (!U.lo.allFinite() || !U.hi.allFinite())
    throw InvalidArgument("maximum condition needs a bounded control set");
  if (opts.grid_points < 2) throw InvalidArgument("need at least 2 grid points per coordinate");
  auto H = [&](const Vec& v) { return p.hamiltonian(x, v, psi, lambda, t); };

  MaxCondition r;
  r.at_u = H(u);
  r.sup = r.at_u;
  r.argmax = u;
  auto consider = [&](const Vec& v) {
    const double h = H(v);
    if (h > r.sup) {
      r.sup = h;
      r.argmax = v;
    }
  };
  const int G = opts.grid_points;
  auto node = [&](int i, int j) {
    return U.lo[i] + (U.hi[i] - U.lo[i]) * static_cast<double>(j) / (G - 1);
  };

  const double total = std::pow(static_cast<double>(G), k);
  if (total <= static_cast<double>(opts.max_grid_size)) {
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    Vec v(k);
    while (true) {
      for (int i = 0; i < k; ++i) v[i] = node(i, idx[i]);
      consider(v);
      int i = 0;
      while (i < k && ++idx[i] == G) idx[i++] = 0;
      if (i == k) break;
    }
  } else {
    for (int round = 0; round < 2; ++round)
      for (int i = 0; i < k; ++i) {
        Vec w = r.argmax;
        for (int j = 0; j < G; ++j) {
          w[i] = node(i, j);
          consider(w);
        }
      }
  }

  // Golden-section refinement of each coordinate around the best cell.
  for (int round = 0; round < opts.refine_rounds; ++round) {
    for (int i = 0; i < k; ++i) {
      const double cell = (U.hi[i] - U.lo[i]) / (G - 1);
      if (cell == 0.0) continue;
      const double a = std::max(U.lo[i], r.argmax[i] - cell);
      const double b = std::min(U.hi[i], r.argmax[i] + cell);
      Vec w = r.argmax;
      double xi = w[i];
      const double h = golden_max(
          [&](double s) {
            w[i] = s;
            return H(w);
          },
          a, b, opts.golden_iterations, xi);
      if (h > r.sup) {
        r.sup = h;
        r.argmax[i] = xi;
      }
    }
  }
  r.residual = std::max(0.0, r.sup - r.at_u);
  return r;
}

double max_condition_residual(const ControlProblem& p, const Vec& x, const Vec& u,
                              const RowVec& psi, double lambda, double t,
                              const MaxSearchOptions& opts) {
  return max_condition(p, x, u, psi, lambda, t, opts).residual;
}

// ---------------------------------------------------------------------------
// Finite differences

std::vector<double> fd_weights(double z, const std::vector<double>& x) {
  // Fornberg's recursion for derivative orders 0 and 1.
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("need at least two nodes");
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][1];
  return w;
}

// ---------------------------------------------------------------------------
// check_pmp

PmpReport check_pmp(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                    const CostateCandidate& candidate, double T, const PmpTolerances& tol,
                    const IntegratorOptions& opts, const MaxSearchOptions& search) {
  if (!(T > 0.0)) throw InvalidArgument("T must be positive");
  if (!(candidate.lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  if (candidate.psi0.size() != p.state_dim) throw InvalidArgument("psi0 has wrong dimension");

  PmpReport r;
  r.tolerances = tol;
  auto grid = ode::uniform_grid(T, opts.output_step);
  const auto breaks = u.breakpoints_between(0.0, T);
  grid.insert(grid.end(), breaks.begin(), breaks.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  Trajectory frame;
  frame.grid = grid;
  frame.states.assign(1, b);
  r.path = integrate_adjoint(p, frame, u, candidate.lambda, 0.0, candidate.psi0, opts);
  r.grid = grid;

  // Cells of constant control, closed on both sides for differencing.
  std::vector<double> cuts{0.0};
  cuts.insert(cuts.end(), breaks.begin(), breaks.end());
  cuts.push_back(T);
  const std::size_t n = grid.size();
  const double lambda = candidate.lambda;
  double psi_max = 0.0;
  for (const auto& psi : r.path.psi) psi_max = std::max(psi_max, psi.norm());

  r.adjoint_residuals.resize(n);
  r.max_residuals.resize(n);
  std::size_t cell = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid[i];
    while (cell + 2 < cuts.size() && t >= cuts[cell + 1]) ++cell;
    const auto lo = static_cast<std::size_t>(
        std::lower_bound(grid.begin(), grid.end(), cuts[cell]) - grid.begin());
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(grid.begin(), grid.end(), cuts[cell + 1]) - grid.begin()) - 1;
    const std::size_t count = hi - lo + 1;
    const std::size_t w = std::min<std::size_t>(7, count);
    std::size_t start = i >= 3 ? i - 3 : 0;
    start = std::clamp(start, lo, hi + 1 - w);
    std::vector<double> nodes(grid.begin() + static_cast<long>(start),
                              grid.begin() + static_cast<long>(start + w));
    const auto weights = fd_weights(t, nodes);
    RowVec dpsi = RowVec::Zero(p.state_dim);
    for (std::size_t j = 0; j < w; ++j) dpsi += weights[j] * r.path.psi[start + j];

    const Vec& x = r.path.states[i];
    const Vec& uc = u.at(t);
    const RowVec& psi = r.path.psi[i];
    const RowVec dH = psi * p.dynamics_jacobian(x, uc, t) - lambda * p.cost_gradient(x, uc, t);
    r.adjoint_residuals[i] = (-dpsi - dH).norm();
    r.max_residuals[i] = max_condition(p, x, uc, psi, lambda, t, search).residual;
  }
  const auto adj = std::max_element(r.adjoint_residuals.begin(), r.adjoint_residuals.end());
  r.adjoint_residual = *adj;
  const auto mx = std::max_element(r.max_residuals.begin(), r.max_residuals.end());
  r.max_residual = *mx;
  r.max_residual_time = grid[static_cast<std::size_t>(mx - r.max_residuals.begin())];

  r.normalization_error = std::abs(candidate.psi0.norm() + lambda - 1.0);
  r.normalization_deferred = !candidate.normalized && r.normalization_error > tol.normalization;
  r.transversality = transversality(p, b, candidate.psi0, lambda, tol.transversality);

  r.adjoint_pass = r.adjoint_residual <= tol.adjoint * (1.0 + psi_max);
  r.max_pass = r.max_residual <= tol.max_residual;
  r.normalization_pass = r.normalization_error <= tol.normalization || r.normalization_deferred;
  r.transversality_pass = r.transversality.holds;
  r.pass = r.adjoint_pass && r.max_pass && r.normalization_pass && r.transversality_pass;
  return r;
}

// ---------------------------------------------------------------------------
// Probes

namespace {

Vec ball_point(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec d(dim);
  do {
    for (int i = 0; i < dim; ++i) d[i] = normal(rng);
  } while (d.norm() == 0.0);
  return radius * std::pow(unit(rng), 1.0 / dim) * d / d.norm();
}

struct Series {
  std::vector<RowVec> I;
  std::vector<double> J;
  bool failed = false;
};

Series series_at(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                 const std::vector<double>& taus, const IntegratorOptions& opts) {
  Series s;
  try {
    for (auto& snap : sensitivity_at(p, b, u, taus, opts)) {
      s.I.push_back(std::move(snap.I));
      s.J.push_back(snap.J);
    }
  } catch (const IntegrationError&) {
    s.failed = true;
  }
  return s;
}

}  // namespace

ContinuityProbe sensitivity_continuity_probe(const ControlProblem& p, const Vec& b_star,
                                             const ControlSignal& u, const HorizonSequence& tau,
                                             const std::vector<Vec>& b_sequence,
                                             const IntegratorOptions& opts,
                                             const Parallelism& par) {
  if (b_sequence.size() != tau.values.size())
    throw InvalidArgument("b sequence and horizon sequence differ in length");
  const Series base = series_at(p, b_star, u, tau.values, opts);
  if (base.failed) throw IntegrationError("integration failed at b*", tau.values.back());
  ContinuityProbe r;
  r.rows.resize(b_sequence.size());
  parallel_for(b_sequence.size(), par, [&](std::size_t i) {
    ContinuityRow& row = r.rows[i];
    row.tau = tau.values[i];
    row.b = b_sequence[i];
    const Series s = series_at(p, b_sequence[i], u, {tau.values[i]}, opts);
    if (s.failed) {
      row.failed = true;
      return;
    }
    row.dI = (s.I[0] - base.I[i]).norm();
    row.dJ = std::abs(s.J[0] - base.J[i]);
  });

  constexpr double kFloor = 1e-8;
  double max_i = 0.0, max_j = 0.0;
  const ContinuityRow* last = nullptr;
  for (const auto& row : r.rows) {
    if (row.failed) continue;
    max_i = std::max(max_i, row.dI);
    max_j = std::max(max_j, row.dJ);
    last = &row;
  }
  if (!last) {
    r.verdict = "no data at budget: every row failed";
    return r;
  }
  if (max_j == 0.0) {
    r.consistent = max_i <= kFloor;
    r.verdict = r.consistent ? "consistent at budget (dJ and dI vanish; evidence only)"
                             : "inconsistent at budget: dI nonzero while dJ vanishes (evidence only)";
  } else if (last->dJ > 0.5 * max_j) {
    r.consistent = true;
    r.verdict = "vacuous at budget: dJ did not shrink (evidence only)";
  } else {
    r.consistent = last->dI <= std::max(kFloor, 0.5 * max_i);
    r.verdict = r.consistent ? "consistent at budget: dI shrinks with dJ (evidence only)"
                             : "inconsistent at budget: dI does not shrink while dJ does "
                               "(evidence only)";
  }
  return r;
}

EquicontinuityProbe equicontinuity_probe(const ControlProblem& p, const Vec& b_star,
                                         const ControlSignal& u, const HorizonSequence& tau,
                                         double radius, int samples, std::uint64_t seed,
                                         const IntegratorOptions& opts, const Parallelism& par) {
  if (!(radius > 0.0)) throw InvalidArgument("neighborhood radius must be positive");
  if (samples < 1) throw InvalidArgument("sample count must be positive");
  constexpr int kScales = 4;
  EquicontinuityProbe r;
  r.taus = tau.values;
  for (int j = 0; j < kScales; ++j) r.scales.push_back(radius * std::ldexp(1.0, -j));

  std::mt19937_64 rng(seed);
  std::vector<Vec> points;  // pairs stored consecutively, scale-major
  for (int j = 0; j < kScales; ++j)
    for (int s = 0; s < samples; ++s) {
      const Vec b = b_star + ball_point(rng, p.state_dim, radius);
      points.push_back(b);
      points.push_back(b + ball_point(rng, p.state_dim, r.scales[j]));
    }
  std::vector<Series> series(points.size());
  parallel_for(points.size(), par,
               [&](std::size_t i) { series[i] = series_at(p, points[i], u, tau.values, opts); });

  const std::size_t N = tau.values.size();
  r.moduli.assign(N, std::vector<double>(kScales, 0.0));
  bool finite = true;
  for (int j = 0; j < kScales; ++j)
    for (int s = 0; s < samples; ++s) {
      const std::size_t a = 2 * static_cast<std::size_t>(j * samples + s);
      if (series[a].failed || series[a + 1].failed) {
        finite = false;
        continue;
      }
      for (std::size_t n = 0; n < N; ++n) {
        const double d = (series[a].I[n] - series[a + 1].I[n]).norm();
        if (!std::isfinite(d)) finite = false;
        // a pair at distance <= delta_j also counts for every coarser scale
        for (int jj = 0; jj <= j; ++jj) r.moduli[n][jj] = std::max(r.moduli[n][jj], d);
      }
    }
  r.envelope.assign(kScales, 0.0);
  for (std::size_t n = 0; n < N; ++n)
    for (int j = 0; j < kScales; ++j) r.envelope[j] = std::max(r.envelope[j], r.moduli[n][j]);

  bool bounded = finite;
  for (double e : r.envelope) bounded = bounded && e < 1e6;
  bool steady = true;
  if (N >= 2)
    for (int j = 0; j < kScales; ++j)
      steady = steady && r.moduli[N - 1][j] <= 1.1 * r.moduli[N - 2][j] + 1e-12;
  r.holds = bounded && steady;
  r.verdict = r.holds ? "equicontinuous at budget (evidence only)"
                      : (bounded ? "not equicontinuous at budget: moduli still growing"
                                 : "not equicontinuous at budget: moduli unbounded or failed");
  if (r.holds && !p.has_subdifferential_oracle()) {
    const Series base = series_at(p, b_star, u, tau.values, opts);
    if (!base.failed)
      r.limit_gradient_gap =
          (base.I.back() + p.initial_cost_subdifferential(b_star).front()).norm();
  }
  return r;
}

expr::SymbolTable omega_symbols() {
  expr::SymbolTable s;
  s.add_variable("s", 0);
  s.add_variable("j", 1);
  return s;
}

std::vector<OmegaViolation> omega_modulus_check(const ControlProblem& p, const Vec& b_star,
                                                const ControlSignal& u,
                                                const HorizonSequence& tau,
                                                const expr::Expression& omega, double radius,
                                                int samples, std::uint64_t seed,
                                                const IntegratorOptions& opts,
                                                const Parallelism& par) {
  const double zero[2] = {0.0, 0.0};
  if (std::abs(omega.evaluate(zero)) > 1e-12) throw InvalidArgument("omega(0, 0) must be 0");
  if (samples < 0 || !(radius >= 0.0)) throw InvalidArgument("bad neighborhood budget");
  std::mt19937_64 rng(seed);
  std::vector<Vec> points{b_star};
  for (int s = 0; s < samples; ++s) points.push_back(b_star + ball_point(rng, p.state_dim, radius));
  std::vector<Series> series(points.size());
  parallel_for(points.size(), par,
               [&](std::size_t i) { series[i] = series_at(p, points[i], u, tau.values, opts); });

  std::vector<OmegaViolation> out;
  const auto& taus = tau.values;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (series[i].failed) continue;
    for (std::size_t n = 0; n < taus.size(); ++n)
      for (std::size_t k = 0; k < n; ++k) {
        const double lhs = (series[i].I[n] - series[i].I[k]).norm();
        const double arg[2] = {1.0 / taus[k], std::abs(series[i].J[n] - series[i].J[k])};
        const double rhs = omega.evaluate(arg);
        if (lhs > rhs + 1e-12 * (1.0 + std::abs(rhs)))
          out.push_back({points[i], taus[n], taus[k], lhs, rhs});
      }
  }
  return out;
}

}  // namespace limco
