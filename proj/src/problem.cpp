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

#include "limco/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "limco/expression.hpp"

namespace limco {

// ---------------------------------------------------------------------------
// Box

Box::Box(Vec lower, Vec upper) : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.size() != hi.size()) throw InvalidArgument("box bounds have different dimensions");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i]))
      throw InvalidArgument("box bound lo > hi in coordinate " + std::to_string(i + 1));
}

Box Box::uniform(int dim, double lower, double upper) {
  return Box(Vec::Constant(dim, lower), Vec::Constant(dim, upper));
}

bool Box::contains(const Vec& z, double tol) const {
  if (z.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (z[i] < lo[i] - tol || z[i] > hi[i] + tol) return false;
  return true;
}

Vec Box::clamp(const Vec& z) const { return z.cwiseMax(lo).cwiseMin(hi); }

double Box::distance_to_boundary(const Vec& z) const {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    d = std::min({d, z[i] - lo[i], hi[i] - z[i]});
  return std::max(d, 0.0);
}

// ---------------------------------------------------------------------------
// ControlProblem

void ControlProblem::validate() const {
  if (state_dim < 1) throw InvalidArgument("state_dim must be >= 1");
  if (control_dim < 1) throw InvalidArgument("control_dim must be >= 1");
  if (!dynamics || !running_cost || !initial_cost || !dynamics_jacobian || !cost_gradient ||
      !control_set)
    throw InvalidArgument("problem '" + name + "' is missing a required function");
  if (initial_set.dim() != state_dim)
    throw InvalidArgument("initial set dimension does not match state_dim");
}

double ControlProblem::hamiltonian(const Vec& x, const Vec& u, const RowVec& psi, double lambda,
                                   double t) const {
  return psi.dot(dynamics(x, u, t)) - lambda * running_cost(x, u, t);
}

std::vector<RowVec> ControlProblem::initial_cost_subdifferential(const Vec& b) const {
  if (l_subdifferential) return l_subdifferential(b);
  RowVec grad(state_dim);
  for (int i = 0; i < state_dim; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(b[i]));
    Vec bp = b, bm = b;
    bp[i] += h;
    bm[i] -= h;
    grad[i] = (initial_cost(bp) - initial_cost(bm)) / (2.0 * h);
  }
  return {grad};
}

// ---------------------------------------------------------------------------
// ControlSignal

ControlSignal::ControlSignal(std::vector<double> grid, std::vector<Vec> values, Vec tail)
    : grid_(std::move(grid)), values_(std::move(values)), tail_(std::move(tail)) {
  if (grid_.empty() || grid_.front() != 0.0)
    throw InvalidArgument("control grid must start at 0");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1])) throw InvalidArgument("control grid must be strictly increasing");
  if (values_.size() + 1 != grid_.size())
    throw InvalidArgument("control signal needs one value per grid cell");
  for (const auto& v : values_)
    if (v.size() != tail_.size()) throw InvalidArgument("control values have mixed dimensions");
}

ControlSignal ControlSignal::constant(Vec u) { return ControlSignal({0.0}, {}, std::move(u)); }

const Vec& ControlSignal::at(double t) const {
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  if (it == grid_.end()) return tail_;
  if (it == grid_.begin()) return values_.empty() ? tail_ : values_.front();
  return values_[static_cast<std::size_t>(it - grid_.begin()) - 1];
}

std::vector<double> ControlSignal::breakpoints_between(double a, double b) const {
  if (a > b) std::swap(a, b);
  std::vector<double> out;
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (grid_[i] > a && grid_[i] < b) out.push_back(grid_[i]);
  return out;
}

bool ControlSignal::is_admissible(const ControlProblem& p, double tol) const {
  if (dim() != p.control_dim) return false;
  auto ok_at = [&](const Vec& v, double t) { return p.control_set(t).contains(v, tol); };
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double a = grid_[i], b = grid_[i + 1];
    if (!ok_at(values_[i], a) || !ok_at(values_[i], 0.5 * (a + b)) || !ok_at(values_[i], b))
      return false;
  }
  const double start = grid_.back();
  for (double dt : {0.0, 1.0, 10.0, 100.0})
    if (!ok_at(tail_, start + dt)) return false;
  return true;
}

bool ControlSignal::operator==(const ControlSignal& other) const {
  if (grid_ != other.grid_ || values_.size() != other.values_.size()) return false;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] != other.values_[i]) return false;
  return tail_ == other.tail_;
}

// ---------------------------------------------------------------------------
// Derivative checks

DerivativeCheck check_derivatives(const ControlProblem& p, int probes, std::uint64_t seed,
                                  double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  DerivativeCheck out;
  const int m = p.state_dim;
  for (int k = 0; k < probes; ++k) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x[i] = unit(rng);
    const double t = 2.0 * unit01(rng);
    const Box U = p.control_set(t);
    Vec u(p.control_dim);
    for (int i = 0; i < p.control_dim; ++i) {
      const double lo = std::isfinite(U.lo[i]) ? U.lo[i] : -1.0;
      const double hi = std::isfinite(U.hi[i]) ? U.hi[i] : 1.0;
      u[i] = lo + (hi - lo) * unit01(rng);
    }
    const Mat jac = p.dynamics_jacobian(x, u, t);
    const RowVec grad = p.cost_gradient(x, u, t);
    for (int j = 0; j < m; ++j) {
      const double h = 1e-6;
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec df = (p.dynamics(xp, u, t) - p.dynamics(xm, u, t)) / (2.0 * h);
      const double dc = (p.running_cost(xp, u, t) - p.running_cost(xm, u, t)) / (2.0 * h);
      for (int i = 0; i < m; ++i) {
        const double err = std::abs(jac(i, j) - df[i]) / std::max(1.0, std::abs(df[i]));
        out.max_dynamics_error = std::max(out.max_dynamics_error, err);
      }
      const double err = std::abs(grad[j] - dc) / std::max(1.0, std::abs(dc));
      out.max_cost_error = std::max(out.max_cost_error, err);
    }
  }
  out.ok = out.max_dynamics_error <= tol && out.max_cost_error <= tol;
  return out;
}

// ---------------------------------------------------------------------------
// Worked-example nonlinearity

double piecewise_f_example(double x) {
  if (x < 0.0) return 0.0;
  if (x <= 1.0) return 0.5 * x * x;
  return x - 0.5;
}

double piecewise_f_example_derivative(double x) {
  if (x < 0.0) return 0.0;
  if (x <= 1.0) return x;
  return 1.0;
}

// ---------------------------------------------------------------------------
// Registry

namespace {

using ParamMap = std::map<std::string, double>;

double take_param(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const ParamMap& params, std::initializer_list<const char*> known,
                    const std::string& problem) {
  for (const auto& [key, value] : params) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw InvalidArgument("problem '" + problem + "' has no parameter '" + key + "'");
  }
}

ControlProblem bolza_example() {
  ControlProblem p;
  p.name = "bolza-example";
  p.state_dim = 1;
  p.control_dim = 1;
  p.dynamics = [](const Vec& x, const Vec& u, double) {
    return Vec::Constant(1, piecewise_f_example(x[0]) + u[0]);
  };
  p.running_cost = [](const Vec& x, const Vec&, double t) {
    const double z = x[0];
    return std::exp(-2.0 * t) * z * (z * z * z * z - 5.0);
  };
  p.initial_cost = [](const Vec&) { return 0.0; };
  p.dynamics_jacobian = [](const Vec& x, const Vec&, double) {
    return Mat::Constant(1, 1, piecewise_f_example_derivative(x[0]));
  };
  p.cost_gradient = [](const Vec& x, const Vec&, double t) {
    const double z = x[0];
    return RowVec::Constant(1, std::exp(-2.0 * t) * (5.0 * z * z * z * z - 5.0));
  };
  p.control_set = [](double) { return Box::uniform(1, 0.0, 1.0); };
  p.initial_set = Box::uniform(1, -1.0, 2.0);
  // branch points of f
  p.switching = [](const Vec& x, double) {
    Vec g(2);
    g << x[0], x[0] - 1.0;
    return g;
  };
  return p;
}

ControlProblem lq_scalar(double a) {
  ControlProblem p;
  p.name = "lq-scalar";
  p.dynamics = [a](const Vec& x, const Vec& u, double) {
    return Vec::Constant(1, a * x[0] + u[0]);
  };
  p.running_cost = [](const Vec& x, const Vec&, double) { return x[0] * x[0]; };
  p.initial_cost = [](const Vec&) { return 0.0; };
  p.dynamics_jacobian = [a](const Vec&, const Vec&, double) { return Mat::Constant(1, 1, a); };
  p.cost_gradient = [](const Vec& x, const Vec&, double) {
    return RowVec::Constant(1, 2.0 * x[0]);
  };
  p.control_set = [](double) { return Box::uniform(1, -1.0, 1.0); };
  p.initial_set = Box::uniform(1, -1.0, 1.0);
  return p;
}

ControlProblem zero_cost(int dim) {
  ControlProblem p;
  p.name = "zero-cost";
  p.state_dim = dim;
  p.control_dim = 1;
  p.dynamics = [dim](const Vec&, const Vec&, double) { return Vec::Zero(dim); };
  p.running_cost = [](const Vec&, const Vec&, double) { return 0.0; };
  p.initial_cost = [](const Vec&) { return 0.0; };
  p.dynamics_jacobian = [dim](const Vec&, const Vec&, double) { return Mat::Zero(dim, dim); };
  p.cost_gradient = [dim](const Vec&, const Vec&, double) { return RowVec::Zero(dim); };
  p.control_set = [](double) { return Box::uniform(1, -1.0, 1.0); };
  p.initial_set = Box::uniform(dim, -1.0, 1.0);
  return p;
}

ControlProblem damped_oscillator(double c) {
  ControlProblem p;
  p.name = "damped-oscillator";
  p.state_dim = 2;
  p.control_dim = 1;
  p.dynamics = [c](const Vec& x, const Vec& u, double) {
    Vec dx(2);
    dx << x[1], -x[0] - c * x[1] + u[0];
    return dx;
  };
  p.running_cost = [](const Vec& x, const Vec& u, double t) {
    return std::exp(-t) * (x[0] * x[0] + 0.5 * x[0] * x[1] + 0.1 * u[0] * u[0]);
  };
  p.initial_cost = [](const Vec&) { return 0.0; };
  p.dynamics_jacobian = [c](const Vec&, const Vec&, double) {
    Mat j(2, 2);
    j << 0.0, 1.0, -1.0, -c;
    return j;
  };
  p.cost_gradient = [](const Vec& x, const Vec&, double t) {
    RowVec g(2);
    g << 2.0 * x[0] + 0.5 * x[1], 0.5 * x[0];
    return RowVec(std::exp(-t) * g);
  };
  p.control_set = [](double) { return Box::uniform(1, -1.0, 1.0); };
  p.initial_set = Box::uniform(2, -1.0, 1.0);
  return p;
}

ControlProblem from_registry(const std::string& name, const ParamMap& params) {
  if (name == "bolza-example") {
    reject_unknown(params, {}, name);
    return bolza_example();
  }
  if (name == "lq-scalar") {
    reject_unknown(params, {"a"}, name);
    return lq_scalar(take_param(params, "a", 0.0));
  }
  if (name == "zero-cost") {
    reject_unknown(params, {"dim"}, name);
    const double dim = take_param(params, "dim", 1.0);
    if (dim < 1.0 || dim != std::floor(dim)) throw InvalidArgument("zero-cost: dim must be a positive integer");
    return zero_cost(static_cast<int>(dim));
  }
  if (name == "damped-oscillator") {
    reject_unknown(params, {"c"}, name);
    return damped_oscillator(take_param(params, "c", 0.2));
  }
  throw InvalidArgument("unknown registry problem '" + name + "'");
}

// DSL-backed problem. Expressions evaluate against slots [x..., u..., t].
struct DslModel {
  int m = 0;
  int k = 0;
  std::vector<expr::Expression> f;
  expr::Expression f0;
  expr::Expression l;
  std::vector<std::vector<expr::Expression>> dfdx;  // [i][j] = d f_i / d x_j
  std::vector<expr::Expression> df0dx;
  std::vector<expr::Expression> u_lo;  // slot 0 = t
  std::vector<expr::Expression> u_hi;

  std::vector<double> slots(const Vec& x, const Vec& u, double t) const {
    std::vector<double> s(static_cast<std::size_t>(m + k + 1));
    for (int i = 0; i < m; ++i) s[i] = x[i];
    for (int i = 0; i < k; ++i) s[m + i] = u[i];
    s[m + k] = t;
    return s;
  }
};

ControlProblem from_expressions(const ProblemSpec& spec) {
  const int m = spec.state_dim;
  const int k = spec.control_dim;
  if (m < 1 || k < 1) throw InvalidArgument("state_dim and control_dim must be positive");
  if (static_cast<int>(spec.f.size()) != m)
    throw InvalidArgument("dimension mismatch: state_dim = " + std::to_string(m) + " but " +
                          std::to_string(spec.f.size()) + " dynamics expressions given");
  if (static_cast<int>(spec.u_lo.size()) != k || static_cast<int>(spec.u_hi.size()) != k)
    throw InvalidArgument("dimension mismatch: control bounds must have control_dim entries");
  if (static_cast<int>(spec.c_lo.size()) != m || static_cast<int>(spec.c_hi.size()) != m)
    throw InvalidArgument("dimension mismatch: initial-set bounds must have state_dim entries");

  const auto symbols = expr::SymbolTable::for_problem(m, k, spec.params);
  auto model = std::make_shared<DslModel>();
  model->m = m;
  model->k = k;
  for (const auto& src : spec.f) model->f.push_back(expr::Expression::parse(src, symbols));
  model->f0 = expr::Expression::parse(spec.f0, symbols);
  model->l = expr::Expression::parse(spec.l, symbols);
  if (model->l.max_slot() >= m) throw InvalidArgument("l may only depend on x1..xm");
  model->dfdx.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) model->dfdx[i].push_back(model->f[i].derivative(j));
  for (int j = 0; j < m; ++j) model->df0dx.push_back(model->f0.derivative(j));

  expr::SymbolTable time_only;
  time_only.add_variable("t", 0);
  for (const auto& [name, value] : spec.params) time_only.add_constant(name, value);
  for (int i = 0; i < k; ++i) {
    model->u_lo.push_back(expr::Expression::parse(spec.u_lo[i], time_only));
    model->u_hi.push_back(expr::Expression::parse(spec.u_hi[i], time_only));
  }

  ControlProblem p;
  p.name = spec.name.value_or("inline");
  p.state_dim = m;
  p.control_dim = k;
  p.dynamics = [model](const Vec& x, const Vec& u, double t) {
    const auto s = model->slots(x, u, t);
    Vec out(model->m);
    for (int i = 0; i < model->m; ++i) out[i] = model->f[i].evaluate(s);
    return out;
  };
  p.running_cost = [model](const Vec& x, const Vec& u, double t) {
    return model->f0.evaluate(model->slots(x, u, t));
  };
  p.initial_cost = [model](const Vec& b) {
    return model->l.evaluate(model->slots(b, Vec::Zero(model->k), 0.0));
  };
  p.dynamics_jacobian = [model](const Vec& x, const Vec& u, double t) {
    const auto s = model->slots(x, u, t);
    Mat out(model->m, model->m);
    for (int i = 0; i < model->m; ++i)
      for (int j = 0; j < model->m; ++j) out(i, j) = model->dfdx[i][j].evaluate(s);
    return out;
  };
  p.cost_gradient = [model](const Vec& x, const Vec& u, double t) {
    const auto s = model->slots(x, u, t);
    RowVec out(model->m);
    for (int j = 0; j < model->m; ++j) out[j] = model->df0dx[j].evaluate(s);
    return out;
  };
  p.control_set = [model](double t) {
    const double slot[1] = {t};
    Vec lo(model->k), hi(model->k);
    for (int i = 0; i < model->k; ++i) {
      lo[i] = model->u_lo[i].evaluate(slot);
      hi[i] = model->u_hi[i].evaluate(slot);
    }
    return Box(lo, hi);
  };
  p.initial_set = Box(Eigen::Map<const Vec>(spec.c_lo.data(), m),
                      Eigen::Map<const Vec>(spec.c_hi.data(), m));
  return p;
}

std::string bound_text(const nlohmann::json& v) {
  if (v.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  if (v.is_string()) return v.get<std::string>();
  throw InvalidArgument("control bounds must be numbers or expression strings");
}

}  // namespace

std::vector<std::string> registry_names() {
  return {"bolza-example", "damped-oscillator", "lq-scalar", "zero-cost"};
}

ProblemSpec ProblemSpec::named(std::string name, std::map<std::string, double> params) {
  ProblemSpec spec;
  spec.name = std::move(name);
  spec.params = std::move(params);
  return spec;
}

ProblemSpec ProblemSpec::from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("problem spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("problem spec must be a JSON object");
  ProblemSpec spec;
  try {
    if (j.contains("params"))
      for (const auto& [key, value] : j.at("params").items()) spec.params[key] = value.get<double>();
    const bool inline_form = j.contains("f");
    if (j.contains("name")) spec.name = j.at("name").get<std::string>();
    if (!inline_form) {
      if (!spec.name) throw InvalidArgument("problem spec needs either \"name\" or \"f\"");
      return spec;
    }
    spec.state_dim = j.at("state_dim").get<int>();
    spec.control_dim = j.at("control_dim").get<int>();
    spec.f = j.at("f").get<std::vector<std::string>>();
    spec.f0 = j.value("f0", std::string("0"));
    spec.l = j.value("l", std::string("0"));
    for (const auto& v : j.at("u_lo")) spec.u_lo.push_back(bound_text(v));
    for (const auto& v : j.at("u_hi")) spec.u_hi.push_back(bound_text(v));
    spec.c_lo = j.at("c_lo").get<std::vector<double>>();
    spec.c_hi = j.at("c_hi").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed problem spec: ") + e.what());
  }
  return spec;
}

ProblemSpec ProblemSpec::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read problem spec '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

ControlProblem load_problem(const ProblemSpec& spec) {
  ControlProblem p = spec.f.empty() && spec.name ? from_registry(*spec.name, spec.params)
                                                 : from_expressions(spec);
  p.validate();
  return p;
}

}  // namespace limco
