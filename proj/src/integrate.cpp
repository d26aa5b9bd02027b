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

#include "limco/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace limco {

IntegratorOptions IntegratorOptions::refined() const {
  IntegratorOptions o = *this;
  o.step *= 0.5;
  o.output_step *= 0.5;
  return o;
}

namespace ode {
namespace {

struct Work {
  Vec k1, k2, k3, k4, k5, k6, k7, tmp, next;
  explicit Work(Eigen::Index n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), next(n) {}
};

void check_finite(const Vec& z, double t) {
  if (!z.allFinite())
    throw IntegrationError("non-finite state at t = " + std::to_string(t) + " (blow-up)", t);
}

// One classical RK4 step from (t, z); result in w.next.
void rk4_step(const Rhs& rhs, const Vec& z, double t, double h, const Vec& u, Work& w) {
  rhs(t, z, u, w.k1);
  w.tmp = z + 0.5 * h * w.k1;
  rhs(t + 0.5 * h, w.tmp, u, w.k2);
  w.tmp = z + 0.5 * h * w.k2;
  rhs(t + 0.5 * h, w.tmp, u, w.k3);
  w.tmp = z + h * w.k3;
  rhs(t + h, w.tmp, u, w.k4);
  w.next = z + (h / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

// True when some component that was nonzero at the start has changed sign.
bool crossed(const Vec& g0, const Vec& g1) {
  for (Eigen::Index i = 0; i < g0.size(); ++i)
    if ((g0[i] < 0.0 && g1[i] > 0.0) || (g0[i] > 0.0 && g1[i] < 0.0)) return true;
  return false;
}

// Step of length h that first lands on the earliest switching crossing, if any.
void rk4_step_events(const Rhs& rhs, Vec& z, double t, double h, const Vec& u,
                     const Event& event, Work& w) {
  for (int piece = 0;; ++piece) {
    rk4_step(rhs, z, t, h, u, w);
    if (!event || piece == 16) break;
    const Vec g0 = event(t, z);
    if (!crossed(g0, event(t + h, w.next))) break;
    double lo = 0.0, hi = 1.0;
    while ((hi - lo) * std::abs(h) > 1e-15 * std::max(1.0, std::abs(t)) && hi - lo > 1e-17) {
      const double mid = 0.5 * (lo + hi);
      rk4_step(rhs, z, t, mid * h, u, w);
      (crossed(g0, event(t + mid * h, w.next)) ? hi : lo) = mid;
    }
    if (hi >= 1.0) {
      rk4_step(rhs, z, t, h, u, w);
      break;
    }
    // land just past the crossing, then finish the step on the new side
    rk4_step(rhs, z, t, hi * h, u, w);
    z = w.next;
    check_finite(z, t + hi * h);
    t += hi * h;
    h *= 1.0 - hi;
  }
  z = w.next;
}

void rk4_segment(const Rhs& rhs, Vec& z, double a, double b, const Vec& u,
                 const IntegratorOptions& opts, Work& w, const Event& event) {
  const double len = b - a;
  const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(len) / opts.step - 1e-9)));
  if (n > opts.max_steps) throw IntegrationError("step budget exhausted", a);
  const double h = len / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const double t = a + static_cast<double>(i) * h;
    const double t_next = i + 1 == n ? b : a + static_cast<double>(i + 1) * h;
    rk4_step_events(rhs, z, t, t_next - t, u, event, w);
    check_finite(z, t_next);
  }
}

// Dormand-Prince 5(4) with local extrapolation. `h` carries the step size
// between segments (always positive).
void dopri_segment(const Rhs& rhs, Vec& z, double a, double b, const Vec& u,
                   const IntegratorOptions& opts, Work& w, double& h, long& steps) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double dir = b >= a ? 1.0 : -1.0;
  double t = a;
  while (dir * (b - t) > 0.0) {
    double hs = std::min(h, std::abs(b - t));
    const bool last = hs >= std::abs(b - t) * (1.0 - 1e-12);
    if (last) hs = std::abs(b - t);
    const double s = dir * hs;
    rhs(t, z, u, w.k1);
    w.tmp = z + s * a21 * w.k1;
    rhs(t + c2 * s, w.tmp, u, w.k2);
    w.tmp = z + s * (a31 * w.k1 + a32 * w.k2);
    rhs(t + c3 * s, w.tmp, u, w.k3);
    w.tmp = z + s * (a41 * w.k1 + a42 * w.k2 + a43 * w.k3);
    rhs(t + c4 * s, w.tmp, u, w.k4);
    w.tmp = z + s * (a51 * w.k1 + a52 * w.k2 + a53 * w.k3 + a54 * w.k4);
    rhs(t + c5 * s, w.tmp, u, w.k5);
    w.tmp = z + s * (a61 * w.k1 + a62 * w.k2 + a63 * w.k3 + a64 * w.k4 + a65 * w.k5);
    rhs(t + s, w.tmp, u, w.k6);
    w.next = z + s * (b1 * w.k1 + b3 * w.k3 + b4 * w.k4 + b5 * w.k5 + b6 * w.k6);
    rhs(t + s, w.next, u, w.k7);
    w.tmp = s * (e1 * w.k1 + e3 * w.k3 + e4 * w.k4 + e5 * w.k5 + e6 * w.k6 + e7 * w.k7);

    double err = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double scale = opts.atol + opts.rtol * std::max(std::abs(z[i]), std::abs(w.next[i]));
      err = std::max(err, std::abs(w.tmp[i]) / scale);
    }
    if (!std::isfinite(err)) err = 1e10;
    if (++steps > opts.max_steps) throw IntegrationError("step budget exhausted", t);

    if (err <= 1.0) {
      t = last ? b : t + s;
      z = w.next;
      check_finite(z, t);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    if (err <= 1.0 && last) {
      h = std::max(h, hs * factor);  // do not let a short final piece shrink the carried step
    } else {
      h = hs * factor;
    }
    if (h < opts.min_step)
      throw IntegrationError("step size underflow at t = " + std::to_string(t) + " (blow-up)", t);
  }
}

}  // namespace

void integrate(const Rhs& rhs, Vec& z, double t0, double t1, const ControlSignal& u,
               const std::vector<double>& stops, const IntegratorOptions& opts,
               const Observer& observer, const Event& event) {
  if (!(opts.step > 0.0)) throw InvalidArgument("integrator step must be positive");
  check_finite(z, t0);
  if (observer) observer(t0, z);
  if (t0 == t1) return;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double lo = std::min(t0, t1), hi = std::max(t0, t1);
  // Boundaries: (time, is_stop). Control breakpoints are not reported.
  std::vector<std::pair<double, bool>> marks;
  for (double s : stops)
    if (s > lo && s < hi) marks.emplace_back(s, true);
  for (double s : u.breakpoints_between(lo, hi)) marks.emplace_back(s, false);
  marks.emplace_back(t1, true);
  std::sort(marks.begin(), marks.end(), [dir](const auto& l, const auto& r) {
    return dir * l.first < dir * r.first || (l.first == r.first && l.second > r.second);
  });

  Work w(z.size());
  double h = opts.step;
  long steps = 0;
  double a = t0;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const double b = marks[i].first;
    if (b != a) {
      const Vec& uc = u.at(0.5 * (a + b));
      if (opts.method == IntegratorOptions::Method::kRk4) {
        rk4_segment(rhs, z, a, b, uc, opts, w, event);
      } else {
        dopri_segment(rhs, z, a, b, uc, opts, w, h, steps);
      }
      a = b;
    }
    // Fire once per distinct stop time.
    const bool duplicate = i > 0 && marks[i - 1].first == b && marks[i - 1].second;
    if (marks[i].second && !duplicate && observer) observer(b, z);
  }
}

std::vector<double> uniform_grid(double T, double spacing) {
  if (!(T > 0.0)) throw InvalidArgument("horizon must be positive");
  if (!(spacing > 0.0)) throw InvalidArgument("grid spacing must be positive");
  const long n = std::max(1L, static_cast<long>(std::ceil(T / spacing - 1e-9)));
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) grid[i] = T * static_cast<double>(i) / static_cast<double>(n);
  grid.back() = T;
  return grid;
}

}  // namespace ode

namespace {

void check_inputs(const ControlProblem& p, const Vec& b, const ControlSignal& u, double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("horizon T must be positive");
  if (b.size() != p.state_dim) throw InvalidArgument("initial point has wrong dimension");
  if (!b.allFinite()) throw InvalidArgument("initial point is not finite");
  if (u.dim() != p.control_dim) throw InvalidArgument("control signal has wrong dimension");
}

ode::Rhs state_rhs(const ControlProblem& p) {
  const int m = p.state_dim;
  return [&p, m](double t, const Vec& z, const Vec& u, Vec& dz) {
    const Vec x = z.head(m);
    dz.head(m) = p.dynamics(x, u, t);
    dz[m] = p.running_cost(x, u, t);
  };
}

ode::Rhs sensitivity_rhs(const ControlProblem& p) {
  const int m = p.state_dim;
  return [&p, m](double t, const Vec& z, const Vec& u, Vec& dz) {
    const Vec x = z.head(m);
    const Mat fx = p.dynamics_jacobian(x, u, t);
    const RowVec f0x = p.cost_gradient(x, u, t);
    Eigen::Map<const Mat> A(z.data() + m + 1, m, m);
    Eigen::Map<const Mat> Ai(z.data() + m + 1 + m * m, m, m);
    dz.head(m) = p.dynamics(x, u, t);
    dz[m] = p.running_cost(x, u, t);
    Eigen::Map<Mat>(dz.data() + m + 1, m, m).noalias() = fx * A;
    Eigen::Map<Mat>(dz.data() + m + 1 + m * m, m, m).noalias() = -(Ai * fx);
    Eigen::Map<RowVec>(dz.data() + m + 1 + 2 * m * m, m).noalias() = f0x * A;
  };
}

ode::Event switching_event(const ControlProblem& p) {
  if (!p.switching) return {};
  const int m = p.state_dim;
  return [&p, m](double t, const Vec& z) { return p.switching(z.head(m), t); };
}

Vec sensitivity_start(const Vec& xi) {
  const Eigen::Index m = xi.size();
  Vec z = Vec::Zero(m + 1 + 2 * m * m + m);
  z.head(m) = xi;
  Eigen::Map<Mat>(z.data() + m + 1, m, m).setIdentity();
  Eigen::Map<Mat>(z.data() + m + 1 + m * m, m, m).setIdentity();
  return z;
}

SensitivitySnapshot unpack_sensitivity(double t, const Vec& z, int m) {
  SensitivitySnapshot s;
  s.t = t;
  s.x = z.head(m);
  s.J = z[m];
  s.A = Eigen::Map<const Mat>(z.data() + m + 1, m, m);
  s.A_inv = Eigen::Map<const Mat>(z.data() + m + 1 + m * m, m, m);
  s.I = Eigen::Map<const RowVec>(z.data() + m + 1 + 2 * m * m, m);
  return s;
}

std::vector<double> interior(const std::vector<double>& grid) {
  if (grid.size() <= 2) return {};
  return {grid.begin() + 1, grid.end() - 1};
}

}  // namespace

Trajectory integrate_state(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                           double T, const IntegratorOptions& opts) {
  check_inputs(p, b, u, T);
  const int m = p.state_dim;
  Trajectory out;
  const auto grid = ode::uniform_grid(T, opts.output_step);
  out.grid.reserve(grid.size());
  Vec z(m + 1);
  z << b, 0.0;
  ode::integrate(
      state_rhs(p), z, 0.0, T, u, interior(grid), opts,
      [&](double t, const Vec& s) {
        out.grid.push_back(t);
        out.states.push_back(s.head(m));
        out.running_cost.push_back(s[m]);
      },
      switching_event(p));
  out.states.front() = b;
  out.running_cost.front() = 0.0;
  return out;
}

std::pair<Vec, double> integrate_endpoint(const ControlProblem& p, const Vec& b,
                                          const ControlSignal& u, double T,
                                          const IntegratorOptions& opts) {
  check_inputs(p, b, u, T);
  const int m = p.state_dim;
  Vec z(m + 1);
  z << b, 0.0;
  ode::integrate(state_rhs(p), z, 0.0, T, u, {}, opts, {}, switching_event(p));
  return {z.head(m), z[m]};
}

SensitivityPath integrate_sensitivity(const ControlProblem& p, const Vec& xi,
                                      const ControlSignal& u, double T,
                                      const IntegratorOptions& opts) {
  check_inputs(p, xi, u, T);
  const int m = p.state_dim;
  SensitivityPath out;
  const auto grid = ode::uniform_grid(T, opts.output_step);
  Vec z = sensitivity_start(xi);
  ode::integrate(sensitivity_rhs(p), z, 0.0, T, u, interior(grid), opts,
                 [&](double t, const Vec& s) {
                   auto snap = unpack_sensitivity(t, s, m);
                   out.grid.push_back(t);
                   out.states.push_back(std::move(snap.x));
                   out.running_cost.push_back(snap.J);
                   out.A.push_back(std::move(snap.A));
                   out.A_inv.push_back(std::move(snap.A_inv));
                   out.I.push_back(std::move(snap.I));
                 },
                 switching_event(p));
  return out;
}

std::vector<SensitivitySnapshot> sensitivity_at(const ControlProblem& p, const Vec& xi,
                                                const ControlSignal& u,
                                                const std::vector<double>& times,
                                                const IntegratorOptions& opts) {
  if (times.empty()) return {};
  for (double t : times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("snapshot times must be >= 0");
  const double T = *std::max_element(times.begin(), times.end());
  const int m = p.state_dim;
  std::vector<SensitivitySnapshot> out(times.size());
  Vec z = sensitivity_start(xi);
  auto record = [&](double t, const Vec& s) {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (times[i] == t) out[i] = unpack_sensitivity(t, s, m);
  };
  if (T == 0.0) {
    if (xi.size() != m) throw InvalidArgument("initial point has wrong dimension");
    record(0.0, z);
    return out;
  }
  check_inputs(p, xi, u, T);
  ode::integrate(sensitivity_rhs(p), z, 0.0, T, u, times, opts, record, switching_event(p));
  return out;
}

AdjointPath integrate_adjoint(const ControlProblem& p, const Vec& b, const ControlSignal& u,
                              double lambda, double anchor_t, const RowVec& anchor_psi, double T,
                              const IntegratorOptions& opts) {
  check_inputs(p, b, u, T);
  auto grid = ode::uniform_grid(T, opts.output_step);
  if (!(anchor_t >= 0.0 && anchor_t <= T)) throw InvalidArgument("anchor time outside [0, T]");
  if (std::find(grid.begin(), grid.end(), anchor_t) == grid.end()) {
    grid.insert(std::upper_bound(grid.begin(), grid.end(), anchor_t), anchor_t);
  }
  Trajectory x;
  x.grid = std::move(grid);
  x.states.assign(1, b);
  return integrate_adjoint(p, x, u, lambda, anchor_t, anchor_psi, opts);
}

AdjointPath integrate_adjoint(const ControlProblem& p, const Trajectory& x,
                              const ControlSignal& u, double lambda, double anchor_t,
                              const RowVec& anchor_psi, const IntegratorOptions& opts) {
  if (x.grid.size() < 2 || x.states.empty()) throw InvalidArgument("trajectory grid too short");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  const int m = p.state_dim;
  if (anchor_psi.size() != m) throw InvalidArgument("anchor covector has wrong dimension");
  const double T = x.grid.back();
  const Vec& b = x.states.front();
  check_inputs(p, b, u, T);
  if (!(anchor_t >= x.grid.front() && anchor_t <= T))
    throw InvalidArgument("anchor time outside the trajectory grid");

  const ode::Rhs rhs = [&p, m, lambda](double t, const Vec& z, const Vec& uc, Vec& dz) {
    const Vec xs = z.head(m);
    dz.head(m) = p.dynamics(xs, uc, t);
    const RowVec psi = z.tail(m).transpose();
    dz.tail(m) = (lambda * p.cost_gradient(xs, uc, t) - psi * p.dynamics_jacobian(xs, uc, t))
                     .transpose();
  };

  Vec x_anchor = b;
  if (anchor_t > 0.0) {
    Vec z(m + 1);
    z << b, 0.0;
    ode::integrate(state_rhs(p), z, 0.0, anchor_t, u, {}, opts, {}, switching_event(p));
    x_anchor = z.head(m);
  }

  AdjointPath out;
  out.lambda = lambda;
  const std::size_t n = x.grid.size();
  out.grid = x.grid;
  out.states.assign(n, Vec());
  out.psi.assign(n, RowVec());
  auto index_of = [&](double t) {
    return static_cast<std::size_t>(std::lower_bound(x.grid.begin(), x.grid.end(), t) -
                                    x.grid.begin());
  };
  auto store = [&](double t, const Vec& z) {
    const std::size_t i = index_of(t);
    if (i < n && x.grid[i] == t) {
      out.states[i] = z.head(m);
      out.psi[i] = z.tail(m).transpose();
    }
  };

  Vec start(2 * m);
  start << x_anchor, anchor_psi.transpose();
  std::vector<double> before, after;
  for (double t : x.grid) (t < anchor_t ? before : after).push_back(t);

  Vec z = start;
  const ode::Event event = switching_event(p);
  if (!before.empty())
    ode::integrate(rhs, z, anchor_t, x.grid.front(), u, before, opts, store, event);
  z = start;
  ode::integrate(rhs, z, anchor_t, T, u, after, opts, store, event);

  // Values at the anchor are reproduced exactly.
  const std::size_t ia = index_of(anchor_t);
  if (ia < n && x.grid[ia] == anchor_t) {
    out.states[ia] = x_anchor;
    out.psi[ia] = anchor_psi;
  }
  return out;
}

RowVec fd_cost_gradient(const ControlProblem& p, const Vec& b, const ControlSignal& u, double T,
                        const IntegratorOptions& opts, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  const int m = p.state_dim;
  RowVec g(m);
  for (int i = 0; i < m; ++i) {
    auto J = [&](double delta) {
      Vec bb = b;
      bb[i] += delta;
      return integrate_endpoint(p, bb, u, T, opts).second;
    };
    g[i] = (-J(2 * h) + 8.0 * J(h) - 8.0 * J(-h) + J(-2 * h)) / (12.0 * h);
  }
  return g;
}

namespace {

void write_number(std::ostream& os, double v) { os << ',' << v; }

void write_header(std::ostream& os, int m, bool sensitivity) {
  os << 't';
  for (int i = 1; i <= m; ++i) os << ",x" << i;
  os << ",J";
  if (sensitivity) {
    for (int i = 1; i <= m; ++i)
      for (int j = 1; j <= m; ++j) os << ",A" << i << j;
    for (int i = 1; i <= m; ++i) os << ",I" << i;
  }
  os << '\n';
}

}  // namespace

void write_csv(std::ostream& os, const Trajectory& x) {
  const int m = x.states.empty() ? 0 : static_cast<int>(x.states.front().size());
  const auto precision = os.precision(17);
  write_header(os, m, false);
  for (std::size_t k = 0; k < x.grid.size(); ++k) {
    os << x.grid[k];
    for (int i = 0; i < m; ++i) write_number(os, x.states[k][i]);
    write_number(os, x.running_cost[k]);
    os << '\n';
  }
  os.precision(precision);
}

void write_csv(std::ostream& os, const SensitivityPath& s) {
  const int m = s.states.empty() ? 0 : static_cast<int>(s.states.front().size());
  const auto precision = os.precision(17);
  write_header(os, m, true);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    os << s.grid[k];
    for (int i = 0; i < m; ++i) write_number(os, s.states[k][i]);
    write_number(os, s.running_cost[k]);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) write_number(os, s.A[k](i, j));
    for (int i = 0; i < m; ++i) write_number(os, s.I[k][i]);
    os << '\n';
  }
  os.precision(precision);
}

}  // namespace limco
