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

#include "limco/metric.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace limco {

// ---------------------------------------------------------------------------
// Field systems

FieldSystem FieldSystem::extended(const ControlProblem& p) {
  p.validate();
  const int m = p.state_dim;
  FieldSystem s;
  s.dim = 2 * m + 1;
  s.control_dim = p.control_dim;
  s.a = [p, m](const Vec& y, const Vec& u, double t) {
    const Vec x = y.head(m);
    const RowVec psi = y.segment(m, m).transpose();
    const double lambda = y[2 * m];
    Vec dy(2 * m + 1);
    dy.head(m) = p.dynamics(x, u, t);
    dy.segment(m, m) = (-psi * p.dynamics_jacobian(x, u, t) + lambda * p.cost_gradient(x, u, t))
                           .transpose();
    dy[2 * m] = 0.0;
    return dy;
  };
  if (p.switching)
    s.switching = [p, m](double t, const Vec& y) { return p.switching(y.head(m), t); };
  return s;
}

FieldSystem FieldSystem::state(const ControlProblem& p) {
  p.validate();
  FieldSystem s;
  s.dim = p.state_dim;
  s.control_dim = p.control_dim;
  s.a = [p](const Vec& y, const Vec& u, double t) { return p.dynamics(y, u, t); };
  if (p.switching) s.switching = [p](double t, const Vec& y) { return p.switching(y, t); };
  return s;
}

// ---------------------------------------------------------------------------
// Initial region

InitialRegion InitialRegion::ball(Vec center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("ball radius must be positive");
  if (center.size() == 0 || !center.allFinite()) throw InvalidArgument("ball center must be finite");
  InitialRegion r;
  r.kind = Kind::kBall;
  r.center = std::move(center);
  r.radius = radius;
  r.box = Box(r.center.array() - radius, r.center.array() + radius);
  return r;
}

InitialRegion InitialRegion::from_box(Box box) {
  if (box.dim() == 0 || !box.lo.allFinite() || !box.hi.allFinite())
    throw InvalidArgument("initial box must be finite");
  InitialRegion r;
  r.kind = Kind::kBox;
  r.center = box.center();
  r.box = std::move(box);
  return r;
}

int InitialRegion::dim() const { return static_cast<int>(center.size()); }

bool InitialRegion::contains(const Vec& y, double tol) const {
  if (kind == Kind::kBox) return box.contains(y, tol);
  return (y - center).norm() <= radius + tol;
}

double InitialRegion::distance_to_boundary(const Vec& y) const {
  if (kind == Kind::kBox) return box.contains(y) ? box.distance_to_boundary(y) : 0.0;
  return std::max(0.0, radius - (y - center).norm());
}

namespace {

Vec unit_direction(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec d(dim);
  do {
    for (int i = 0; i < dim; ++i) d[i] = normal(rng);
  } while (d.norm() < 1e-12);
  return d / d.norm();
}

// Corners of a box; random corners when there are too many.
std::vector<Vec> corners(const Box& b, std::mt19937_64& rng, int cap = 256) {
  const int d = b.dim();
  std::vector<Vec> out;
  if (d <= 8) {
    for (long mask = 0; mask < (1L << d); ++mask) {
      Vec c(d);
      for (int i = 0; i < d; ++i) c[i] = (mask >> i) & 1 ? b.hi[i] : b.lo[i];
      out.push_back(c);
    }
    return out;
  }
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < cap; ++k) {
    Vec c(d);
    for (int i = 0; i < d; ++i) c[i] = coin(rng) ? b.hi[i] : b.lo[i];
    out.push_back(c);
  }
  return out;
}

// n Latin-hypercube points of a box.
std::vector<Vec> latin_hypercube(const Box& b, int n, std::mt19937_64& rng) {
  const int d = b.dim();
  std::vector<Vec> out(n, Vec(d));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm(n);
  for (int i = 0; i < d; ++i) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int k = 0; k < n; ++k) {
      const double s = (perm[k] + unit(rng)) / n;
      out[k][i] = b.lo[i] + s * (b.hi[i] - b.lo[i]);
    }
  }
  return out;
}

std::vector<Vec> region_samples(const InitialRegion& S, int extra, std::mt19937_64& rng) {
  const int d = S.dim();
  std::vector<Vec> out{S.center};
  if (S.kind == InitialRegion::Kind::kBall) {
    for (int i = 0; i < d; ++i) {
      for (double s : {-1.0, 1.0}) {
        Vec y = S.center;
        y[i] += s * S.radius;
        out.push_back(y);
      }
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < extra; ++k) {
      const double r = k % 2 == 0 ? S.radius : S.radius * std::pow(unit(rng), 1.0 / d);
      out.push_back(S.center + r * unit_direction(rng, d));
    }
    return out;
  }
  for (Vec& c : corners(S.box, rng)) out.push_back(std::move(c));
  if (extra > 0)
    for (Vec& y : latin_hypercube(S.box, extra, rng)) out.push_back(std::move(y));
  return out;
}

Box inflate(const Vec& lo, const Vec& hi, double factor) {
  const Vec c = 0.5 * (lo + hi);
  const Vec h = 0.5 * factor * (hi - lo);
  return Box(c - h, c + h);
}

double jacobian_norm(const FieldSystem& f, const Vec& y, const Vec& u, double t) {
  const int d = f.dim;
  Mat J(d, d);
  Vec yp = y, ym = y;
  for (int i = 0; i < d; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(y[i]));
    yp[i] = y[i] + h;
    ym[i] = y[i] - h;
    J.col(i) = (f.a(yp, u, t) - f.a(ym, u, t)) / (2.0 * h);
    yp[i] = ym[i] = y[i];
  }
  if (!J.allFinite()) return std::numeric_limits<double>::infinity();
  if (d == 1) return std::abs(J(0, 0));
  return Eigen::JacobiSVD<Mat>(J).singularValues()[0];
}

int class_of_norm(double n) {
  if (!std::isfinite(n)) return std::numeric_limits<int>::max();
  return std::max(1, static_cast<int>(std::ceil(n)));
}

// Control pairs inside the Euclidean ball of radius k.
std::vector<std::pair<Vec, Vec>> class_pairs(int dim, int k, int directions, std::mt19937_64& rng) {
  std::vector<Vec> dirs;
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e[i] = 1.0;
    dirs.push_back(e);
  }
  if (dim > 1)
    for (int j = 0; j < directions; ++j) dirs.push_back(unit_direction(rng, dim));
  std::vector<std::pair<Vec, Vec>> out;
  const Vec zero = Vec::Zero(dim);
  for (const Vec& d : dirs) {
    out.emplace_back(k * d, -k * d);
    out.emplace_back(k * d, zero);
    out.emplace_back(-k * d, zero);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < directions; ++j) {
    const Vec u = k * std::pow(unit(rng), 1.0 / dim) * unit_direction(rng, dim);
    const Vec v = k * std::pow(unit(rng), 1.0 / dim) * unit_direction(rng, dim);
    out.emplace_back(u, v);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Context

MetricContext MetricContext::build(FieldSystem field, ControlSignal u_star, InitialRegion S,
                                   double T_max, const MetricOptions& opts) {
  if (!field.a) throw InvalidArgument("field system has no right-hand side");
  if (!(T_max > 0.0) || !std::isfinite(T_max)) throw InvalidArgument("T_max must be positive");
  if (S.dim() != field.dim) throw InvalidArgument("initial region and field differ in dimension");
  if (u_star.dim() != field.control_dim)
    throw InvalidArgument("reference control has wrong dimension");
  if (opts.slices_per_unit < 1) throw InvalidArgument("slices_per_unit must be >= 1");
  if (!(opts.inflation >= 1.0)) throw InvalidArgument("inflation must be >= 1");

  MetricContext ctx;
  ctx.field_ = std::move(field);
  ctx.u_star_ = std::move(u_star);
  ctx.S_ = std::move(S);
  ctx.opts_ = opts;
  ctx.T_max_ = T_max;
  const FieldSystem& f = ctx.field_;
  std::mt19937_64 rng(opts.seed);

  // Slices.
  const double spu = opts.slices_per_unit;
  const long full = static_cast<long>(std::floor(T_max * spu + 1e-9));
  for (long i = 0; i <= full; ++i) ctx.slice_times_.push_back(static_cast<double>(i) / spu);
  if (ctx.slice_times_.back() < T_max - 1e-12) ctx.slice_times_.push_back(T_max);
  ctx.slice_times_.back() = T_max;
  const std::size_t n_slices = ctx.slice_times_.size() - 1;
  const int units = static_cast<int>(std::ceil(T_max - 1e-12));

  // Funnel: bounding boxes per unit interval of the sampled trajectories.
  const int d = f.dim;
  std::vector<Vec> lo(units, Vec::Constant(d, std::numeric_limits<double>::infinity()));
  std::vector<Vec> hi(units, Vec::Constant(d, -std::numeric_limits<double>::infinity()));
  auto record = [&](double t, const Vec& y) {
    // Unit k covers [k, k + 1]; boundary states belong to both neighbors.
    const int a = static_cast<int>(std::ceil(t)) - 1, b = static_cast<int>(std::floor(t));
    for (int k = std::max(0, a); k <= std::min(units - 1, b); ++k) {
      lo[k] = lo[k].cwiseMin(y);
      hi[k] = hi[k].cwiseMax(y);
    }
  };
  const ode::Rhs rhs = [&f](double t, const Vec& z, const Vec& u, Vec& dz) { dz = f.a(z, u, t); };
  const std::vector<double> stops(ctx.slice_times_.begin() + 1, ctx.slice_times_.end() - 1);
  for (const Vec& y0 : region_samples(ctx.S_, opts.funnel_samples, rng)) {
    Vec y = y0;
    try {
      ode::integrate(rhs, y, 0.0, T_max, ctx.u_star_, stops, opts.integrator, record,
                     f.switching);
    } catch (const IntegrationError& e) {
      throw IntegrationError("funnel blow-up before T_max", e.time());
    }
  }
  for (int n = 0; n < units; ++n) ctx.funnel_.push_back(inflate(lo[n], hi[n], opts.inflation));

  // Sample points per funnel box.
  std::vector<std::vector<Vec>> box_points(units);
  for (int n = 0; n < units; ++n) {
    const Box& G = ctx.funnel_[n];
    box_points[n] = corners(G, rng);
    box_points[n].push_back(G.center());
    if (opts.box_samples > 0)
      for (Vec& y : latin_hypercube(G, opts.box_samples, rng)) box_points[n].push_back(std::move(y));
  }
  auto unit_of = [&](std::size_t i) {
    const double mid = 0.5 * (ctx.slice_times_[i] + ctx.slice_times_[i + 1]);
    return std::min(units - 1, static_cast<int>(std::floor(mid)));
  };

  // L per slice, cumulative integral.
  ctx.lipschitz_.assign(n_slices, 0.0);
  ctx.cumulative_.assign(n_slices + 1, 0.0);
  for (std::size_t i = 0; i < n_slices; ++i) {
    const double a = ctx.slice_times_[i], b = ctx.slice_times_[i + 1];
    double L = 0.0;
    for (double t : {a, 0.5 * (a + b), b}) {
      const Vec& u = ctx.u_star_.at(t);
      for (const Vec& y : box_points[unit_of(i)]) L = std::max(L, jacobian_norm(f, y, u, t));
    }
    ctx.lipschitz_[i] = opts.inflation * L;
    ctx.cumulative_[i + 1] = ctx.cumulative_[i] + ctx.lipschitz_[i] * (b - a);
  }

  // Largest class needed: U(t) corners and the reference values.
  int k_max = 1;
  for (const Vec& v : ctx.u_star_.values()) k_max = std::max(k_max, class_of_norm(v.norm()));
  k_max = std::max(k_max, class_of_norm(ctx.u_star_.tail().norm()));
  if (opts.k_max > 0) {
    k_max = std::max(k_max, opts.k_max);
  } else if (opts.control_set) {
    for (double t : ctx.slice_times_) {
      const Box U = opts.control_set(t);
      Vec far(U.dim());
      for (int j = 0; j < U.dim(); ++j) far[j] = std::max(std::abs(U.lo[j]), std::abs(U.hi[j]));
      const int k = class_of_norm(far.norm());
      if (k == std::numeric_limits<int>::max())
        throw InvalidArgument("unbounded control set: pass k_max explicitly");
      k_max = std::max(k_max, k);
    }
  }
  ctx.k_max_ = k_max;

  // R^a table: sup over nested class balls, so nondecreasing in k.
  ctx.r_table_.assign(k_max, std::vector<double>(n_slices, 0.0));
  for (int k = 1; k <= k_max; ++k) {
    const auto pairs = class_pairs(f.control_dim, k, opts.control_directions, rng);
    for (std::size_t i = 0; i < n_slices; ++i) {
      const double a = ctx.slice_times_[i], b = ctx.slice_times_[i + 1];
      double sup = 0.0;
      for (double t : {a, 0.5 * (a + b), b})
        for (const Vec& y : box_points[unit_of(i)])
          for (const auto& [u, v] : pairs) sup = std::max(sup, (f.a(y, u, t) - f.a(y, v, t)).norm());
      // M is nondecreasing: its value at the slice end bounds the slice.
      double r = sup == 0.0 ? 0.0 : sup * ctx.weight(b);
      if (k > 1) r = std::max(r, ctx.r_table_[k - 2][i]);
      ctx.r_table_[k - 1][i] = r;
    }
  }
  return ctx;
}

std::size_t MetricContext::slice_index(double t) const {
  if (t <= slice_times_.front()) return 0;
  auto it = std::lower_bound(slice_times_.begin(), slice_times_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - slice_times_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, slice_times_.size() - 2);
}

double MetricContext::weight(double t) const {
  if (t <= 0.0) return opts_.weight == WeightForm::kExponential ? 1.0 : 0.0;
  const double tt = std::min(t, T_max_);
  const std::size_t i = slice_index(tt);
  const double c = cumulative_[i] + lipschitz_[i] * (tt - slice_times_[i]);
  return opts_.weight == WeightForm::kExponential ? std::exp(c) : c;
}

double MetricContext::r_a(int k, double t) const {
  if (k < 1) throw InvalidArgument("control class must be >= 1");
  if (k > k_max_) throw InvalidArgument("control class exceeds the computed range");
  if (t < 0.0 || t > T_max_ + 1e-12) throw InvalidArgument("time outside [0, T_max]");
  return r_table_[k - 1][slice_index(t)];
}

int MetricContext::control_class(const Vec& u) { return class_of_norm(u.norm()); }

double MetricContext::w(const Vec& u, const Vec& v, double t) const {
  if (u == v) return 0.0;
  int k = 0;
  if (opts_.class_rule == ClassRule::kMax) {
    k = std::max(control_class(u), control_class(v));
  } else {
    k = u.norm() <= v.norm() ? control_class(u) : control_class(v);
  }
  return std::ceil(r_a(k, t));
}

Vec MetricContext::kappa(const Vec& z, double theta) const {
  if (z.size() != field_.dim) throw InvalidArgument("point has wrong dimension");
  if (theta < 0.0 || theta > T_max_ + 1e-12) throw InvalidArgument("time outside [0, T_max]");
  Vec y = z;
  if (theta == 0.0) return y;
  const FieldSystem& f = field_;
  const ode::Rhs rhs = [&f](double t, const Vec& s, const Vec& u, Vec& ds) { ds = f.a(s, u, t); };
  ode::integrate(rhs, y, theta, 0.0, u_star_, {}, opts_.integrator, {}, f.switching);
  return y;
}

// ---------------------------------------------------------------------------
// rho

RhoValue rho(const MetricContext& ctx, const ControlSignal& u, const ControlSignal& v, double T) {
  if (T < 0.0 || T > ctx.T_max() + 1e-12) throw InvalidArgument("rho horizon outside [0, T_max]");
  if (u.dim() != v.dim()) throw InvalidArgument("controls differ in dimension");
  RhoValue out;
  out.T = T;
  if (T == 0.0) return out;
  std::vector<double> cuts{0.0, T};
  for (double s : u.breakpoints_between(0.0, T)) cuts.push_back(s);
  for (double s : v.breakpoints_between(0.0, T)) cuts.push_back(s);
  for (double s : ctx.slice_times())
    if (s > 0.0 && s < T) cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  long double value = 0.0L, measure = 0.0L;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const double mid = 0.5 * (a + b);
    const Vec& uu = u.at(mid);
    const Vec& vv = v.at(mid);
    if (uu == vv) continue;
    const long double len = static_cast<long double>(b) - static_cast<long double>(a);
    value += static_cast<long double>(ctx.w(uu, vv, mid)) * len;
    measure += len;
  }
  out.value = static_cast<double>(value);
  out.disagreement = static_cast<double>(measure);
  return out;
}

// ---------------------------------------------------------------------------
// Divergence bound

DivergenceCheck verify_divergence_bound(const MetricContext& ctx, const ControlSignal& u,
                                        const Vec& y0, double T, double grid_step, double tol) {
  if (y0.size() != ctx.field().dim) throw InvalidArgument("initial point has wrong dimension");
  if (!(T > 0.0) || T > ctx.T_max() + 1e-12) throw InvalidArgument("T outside (0, T_max]");
  DivergenceCheck out;
  out.guard_rho = rho(ctx, ctx.reference(), u, T).value;
  out.guard_distance = ctx.initial_region().contains(y0)
                           ? ctx.initial_region().distance_to_boundary(y0)
                           : 0.0;
  out.guard_passed = out.guard_rho < out.guard_distance;
  if (!out.guard_passed) return out;

  const std::vector<double> grid = ode::uniform_grid(T, grid_step);
  std::vector<Vec> states;
  const FieldSystem& f = ctx.field();
  const ode::Rhs rhs = [&f](double t, const Vec& s, const Vec& c, Vec& ds) { ds = f.a(s, c, t); };
  Vec y = y0;
  ode::integrate(rhs, y, 0.0, T, u, grid, ctx.options().integrator,
                 [&states](double, const Vec& s) { states.push_back(s); }, f.switching);

  const double slack = tol * (1.0 + y0.norm());
  out.holds = true;
  out.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    DivergencePoint pt;
    pt.t = grid[i];
    pt.lhs = (ctx.kappa(states[i], grid[i]) - y0).norm();
    pt.rho = rho(ctx, ctx.reference(), u, grid[i]).value;
    pt.margin = pt.rho - pt.lhs;
    out.min_margin = std::min(out.min_margin, pt.margin);
    if (pt.margin < -slack) out.holds = false;
    out.points.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Control CSV

ControlSignal read_control_csv(std::istream& in) {
  std::vector<double> times;
  std::vector<Vec> rows;
  std::string line;
  int width = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw InvalidArgument("control CSV: non-numeric row: " + line);
    }
    first = false;
    if (cells.size() < 2) throw InvalidArgument("control CSV: need t and at least one value");
    if (width < 0) width = static_cast<int>(cells.size());
    if (static_cast<int>(cells.size()) != width) throw InvalidArgument("control CSV: ragged rows");
    times.push_back(cells[0]);
    rows.push_back(Eigen::Map<const Vec>(cells.data() + 1, width - 1));
  }
  if (rows.empty()) throw InvalidArgument("control CSV: no rows");
  if (times.front() != 0.0) throw InvalidArgument("control CSV: first time must be 0");
  Vec tail = rows.back();
  rows.pop_back();
  return ControlSignal(times, rows, tail);
}

}  // namespace limco
