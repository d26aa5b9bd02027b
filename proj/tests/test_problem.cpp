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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <filesystem>
#include <sstream>

#include "limco/expression.hpp"
#include "limco/problem.hpp"
#include "support.hpp"

namespace {

using limco::Box;
using limco::ControlSignal;
using limco::InvalidArgument;
using limco::Mat;
using limco::ProblemSpec;
using limco::Vec;
using limco::expr::Expression;
using limco::expr::ParseError;
using limco::expr::ParseErrorKind;
using limco::expr::SymbolTable;

// slots: x1, u1, t
const SymbolTable kScalar = SymbolTable::for_problem(1, 1);

double eval(const Expression& e, double x1, double u1, double t) {
  const double s[3] = {x1, u1, t};
  return e.evaluate(s);
}

TEST(Expression, EvaluatesCostIntegrand) {
  auto e = Expression::parse("x1*(x1^4 - 5)*exp(-2*t)", kScalar);
  EXPECT_DOUBLE_EQ(eval(e, 1.0, 0.0, 0.0), -4.0);
  EXPECT_NEAR(eval(e, 2.0, 0.0, 1.0), 22.0 * std::exp(-2.0), 1e-14);
}

TEST(Expression, ZeroIsConstant) {
  auto e = Expression::parse("0", kScalar);
  ASSERT_TRUE(e.constant_value().has_value());
  EXPECT_EQ(*e.constant_value(), 0.0);
  for (double x : {-3.0, 0.0, 7.5}) EXPECT_EQ(eval(e, x, x, x), 0.0);
}

TEST(Expression, PrecedenceAndUnaryMinus) {
  EXPECT_DOUBLE_EQ(eval(Expression::parse("-x1^2", kScalar), 3, 0, 0), -9.0);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("2^3^2", kScalar), 0, 0, 0), 512.0);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("1 - 2 - 3", kScalar), 0, 0, 0), -4.0);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("8 / 4 / 2", kScalar), 0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(eval(Expression::parse("1.5e1 + u1*t", kScalar), 0, 2, 3), 21.0);
}

TEST(Expression, TrailingOperatorIsSyntaxErrorAtEnd) {
  try {
    Expression::parse("x1 +", kScalar);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::kSyntax);
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(Expression, UnknownIdentifier) {
  try {
    Expression::parse("x1 + y", kScalar);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::kUnknownIdentifier);
    EXPECT_EQ(e.offset(), 5u);
  }
  // x2 does not exist in a scalar problem
  EXPECT_THROW(Expression::parse("x2", kScalar), ParseError);
}

TEST(Expression, ArityMismatch) {
  try {
    Expression::parse("exp(x1, t)", kScalar);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::kArity);
    EXPECT_EQ(e.offset(), 0u);
  }
  EXPECT_THROW(Expression::parse("sin()", kScalar), ParseError);
}

TEST(Expression, ParametersAreConstants) {
  auto table = SymbolTable::for_problem(1, 1, {{"a", -0.5}});
  auto e = Expression::parse("a*x1 + u1", table);
  const double s[3] = {2.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(e.evaluate(s), 0.0);
}

TEST(Differentiate, QuinticAgainstFiniteDifferences) {
  auto e = Expression::parse("x1*(x1^4-5)", kScalar);
  auto d = e.derivative(0);
  for (double x : {0.0, 0.5, 1.5}) {
    const double fd = limco::testing::central_difference(
        [&](double z) { return eval(e, z, 0, 0); }, x);
    EXPECT_NEAR(eval(d, x, 0, 0), fd, 1e-7 * std::max(1.0, std::abs(fd)));
    EXPECT_NEAR(eval(d, x, 0, 0), 5 * std::pow(x, 4) - 5, 1e-12);
  }
}

TEST(Differentiate, TimeIsIndependent) {
  auto d = Expression::parse("t", kScalar).derivative(0);
  ASSERT_TRUE(d.constant_value().has_value());
  EXPECT_EQ(*d.constant_value(), 0.0);
}

TEST(Differentiate, DiscountedLinear) {
  auto d = Expression::parse("exp(-2*t)*x1", kScalar).derivative(0);
  for (double t : {0.0, 0.3, 2.0}) {
    const double fd = limco::testing::central_difference(
        [&](double z) { return z * std::exp(-2 * t); }, 0.7);
    EXPECT_NEAR(eval(d, 0.7, 0, t), std::exp(-2 * t), 1e-14);
    EXPECT_NEAR(eval(d, 0.7, 0, t), fd, 1e-8);
  }
}

TEST(Differentiate, EveryFunctionAgainstFiniteDifferences) {
  const char* sources[] = {"sin(x1)*cos(2*x1)", "tanh(x1^2 - 1)", "log(2 + x1)/x1",
                           "exp(x1)^3", "x1^x1", "2^x1", "(x1 - u1)/(1 + x1^2)"};
  for (const char* src : sources) {
    auto e = Expression::parse(src, kScalar);
    auto d = e.derivative(0);
    for (double x : {0.3, 0.9, 1.7}) {
      const double fd = limco::testing::central_difference(
          [&](double z) { return eval(e, z, 0.4, 0.0); }, x);
      EXPECT_NEAR(eval(d, x, 0.4, 0.0), fd, 1e-6 * std::max(1.0, std::abs(fd))) << src;
    }
  }
}

// d(alpha e1 + e2) = alpha de1 + de2 pointwise.
TEST(DifferentiateProperty, Linearity) {
  limco::testing::Gen gen(20260101);
  const auto table = SymbolTable::for_problem(2, 1);
  const std::vector<std::string> names{"x1", "x2", "u1", "t"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::string s1 = gen.expression(names, 3);
    const std::string s2 = gen.expression(names, 3);
    const double alpha = gen.uniform(-3.0, 3.0);
    std::ostringstream combo;
    combo.precision(17);
    combo << "(" << alpha << ")*(" << s1 << ") + (" << s2 << ")";
    auto e1 = Expression::parse(s1, table);
    auto e2 = Expression::parse(s2, table);
    auto sum = Expression::parse(combo.str(), table);
    for (int slot = 0; slot < 2; ++slot) {
      auto lhs = sum.derivative(slot);
      auto d1 = e1.derivative(slot);
      auto d2 = e2.derivative(slot);
      for (int k = 0; k < 5; ++k) {
        const double pt[4] = {gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(-1, 1),
                              gen.uniform(0, 2)};
        const double expect = alpha * d1.evaluate(pt) + d2.evaluate(pt);
        ASSERT_NEAR(lhs.evaluate(pt), expect, 1e-10 * std::max(1.0, std::abs(expect)))
            << combo.str();
      }
    }
  }
}

TEST(Registry, BolzaExample) {
  auto p = limco::load_problem(ProblemSpec::named("bolza-example"));
  EXPECT_EQ(p.state_dim, 1);
  EXPECT_EQ(p.control_dim, 1);
  const Vec x = Vec::Constant(1, 1.0), u = Vec::Constant(1, 0.5);
  EXPECT_DOUBLE_EQ(p.dynamics(x, u, 0)[0], 1.0);  // 1/2 + 1/2
  EXPECT_DOUBLE_EQ(p.running_cost(x, u, 0), -4.0);
  EXPECT_NEAR(p.running_cost(x, u, 1), -4.0 * std::exp(-2.0), 1e-15);
  EXPECT_EQ(p.initial_cost(x), 0.0);
  EXPECT_EQ(p.control_set(3.0).lo[0], 0.0);
  EXPECT_EQ(p.control_set(3.0).hi[0], 1.0);
  EXPECT_EQ(p.initial_set.lo[0], -1.0);
  EXPECT_EQ(p.initial_set.hi[0], 2.0);
}

TEST(Registry, LqScalarParameter) {
  auto p = limco::load_problem(ProblemSpec::named("lq-scalar", {{"a", -2.0}}));
  const Vec x = Vec::Constant(1, 3.0), u = Vec::Constant(1, 1.0);
  EXPECT_DOUBLE_EQ(p.dynamics(x, u, 0)[0], -5.0);
  EXPECT_DOUBLE_EQ(p.running_cost(x, u, 0), 9.0);
  EXPECT_DOUBLE_EQ(p.dynamics_jacobian(x, u, 0)(0, 0), -2.0);
  EXPECT_EQ(p.control_set(0).lo[0], -1.0);
  EXPECT_EQ(p.initial_set.hi[0], 1.0);
}

TEST(Registry, Errors) {
  EXPECT_THROW(limco::load_problem(ProblemSpec::named("no-such-problem")), InvalidArgument);
  EXPECT_THROW(limco::load_problem(ProblemSpec::named("lq-scalar", {{"b", 1.0}})),
               InvalidArgument);
}

TEST(InlineSpec, DimensionMismatch) {
  ProblemSpec spec;
  spec.state_dim = 1;
  spec.control_dim = 1;
  spec.f = {"x1", "u1"};
  spec.u_lo = {"0"};
  spec.u_hi = {"1"};
  spec.c_lo = {0};
  spec.c_hi = {1};
  try {
    limco::load_problem(spec);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
  }
}

TEST(InlineSpec, ParseErrorsPropagate) {
  auto spec = ProblemSpec::from_json_text(
      R"({"state_dim":1,"control_dim":1,"f":["x1 +"],"u_lo":[0],"u_hi":[1],"c_lo":[0],"c_hi":[1]})");
  EXPECT_THROW(limco::load_problem(spec), ParseError);
}

TEST(InlineSpec, JsonMatchesRegistry) {
  auto spec = ProblemSpec::from_json_text(R"({
    "name": "lq-inline", "state_dim": 1, "control_dim": 1,
    "f": ["a*x1 + u1"], "f0": "x1^2", "l": "0",
    "u_lo": [-1], "u_hi": ["1"], "c_lo": [-1], "c_hi": [1],
    "params": {"a": 0.75}
  })");
  auto inline_p = limco::load_problem(spec);
  auto reg = limco::load_problem(ProblemSpec::named("lq-scalar", {{"a", 0.75}}));
  EXPECT_EQ(inline_p.name, "lq-inline");
  limco::testing::Gen gen(3);
  for (int i = 0; i < 20; ++i) {
    const Vec x = gen.vec(1, -1, 1), u = gen.vec(1, -1, 1);
    const double t = gen.uniform(0, 3);
    EXPECT_NEAR(inline_p.dynamics(x, u, t)[0], reg.dynamics(x, u, t)[0], 1e-15);
    EXPECT_NEAR(inline_p.running_cost(x, u, t), reg.running_cost(x, u, t), 1e-15);
    EXPECT_NEAR(inline_p.cost_gradient(x, u, t)[0], reg.cost_gradient(x, u, t)[0], 1e-15);
  }
}

TEST(InlineSpec, TimeDependentControlBounds) {
  auto p = limco::load_problem(ProblemSpec::from_json_text(
      R"J({"state_dim":1,"control_dim":1,"f":["u1"],"u_lo":["-exp(-t)"],"u_hi":[1],"c_lo":[0],"c_hi":[0]})J"));
  EXPECT_NEAR(p.control_set(1.0).lo[0], -std::exp(-1.0), 1e-15);
  EXPECT_EQ(p.initial_set.lo[0], 0.0);
}

TEST(InlineSpec, MalformedJson) {
  EXPECT_THROW(ProblemSpec::from_json_text("{not json"), InvalidArgument);
  EXPECT_THROW(ProblemSpec::from_json_text("[1,2]"), InvalidArgument);
  EXPECT_THROW(ProblemSpec::from_json_text(R"({"state_dim":1})"), InvalidArgument);
}

TEST(InlineSpec, FromFile) {
  const auto path = std::filesystem::temp_directory_path() / "limco_test_problem.json";
  {
    std::ofstream out(path);
    out << R"({"name":"lq-scalar","params":{"a":1.5}})";
  }
  auto p = limco::load_problem(ProblemSpec::from_file(path));
  EXPECT_DOUBLE_EQ(p.dynamics_jacobian(Vec::Zero(1), Vec::Zero(1), 0)(0, 0), 1.5);
  std::filesystem::remove(path);
  EXPECT_THROW(ProblemSpec::from_file(path), InvalidArgument);
}

TEST(PiecewiseF, Branches) {
  EXPECT_EQ(limco::piecewise_f_example(-3), 0.0);
  EXPECT_EQ(limco::piecewise_f_example(0.5), 0.125);
  EXPECT_EQ(limco::piecewise_f_example(2), 1.5);
  EXPECT_EQ(limco::piecewise_f_example_derivative(-3), 0.0);
  EXPECT_EQ(limco::piecewise_f_example_derivative(0.5), 0.5);
  EXPECT_EQ(limco::piecewise_f_example_derivative(2), 1.0);
  // continuity at the junctions
  for (double x0 : {0.0, 1.0}) {
    EXPECT_NEAR(limco::piecewise_f_example(x0 - 1e-9), limco::piecewise_f_example(x0 + 1e-9), 1e-8);
    EXPECT_NEAR(limco::piecewise_f_example_derivative(x0 - 1e-9),
                limco::piecewise_f_example_derivative(x0 + 1e-9), 1e-8);
  }
}

TEST(PiecewiseF, NondecreasingAndConvex) {
  const int n = 2001;
  const double h = 5.0 / (n - 1);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = limco::piecewise_f_example(-2.0 + i * h);
  for (int i = 1; i < n; ++i) EXPECT_GE(v[i] - v[i - 1], 0.0);
  for (int i = 1; i + 1 < n; ++i) EXPECT_GE(v[i + 1] - 2 * v[i] + v[i - 1], -1e-12);
}

TEST(Derivatives, RegistryProblemsMatchFiniteDifferences) {
  for (const auto& name : limco::registry_names()) {
    auto p = limco::load_problem(ProblemSpec::named(name));
    auto check = limco::check_derivatives(p, 100, 42, 1e-5);
    EXPECT_TRUE(check.ok) << name << " dyn " << check.max_dynamics_error << " cost "
                          << check.max_cost_error;
  }
}

TEST(Derivatives, RandomDslProblemsMatchFiniteDifferences) {
  limco::testing::Gen gen(777);
  const std::vector<std::string> names{"x1", "x2", "u1", "t"};
  for (int trial = 0; trial < 30; ++trial) {
    ProblemSpec spec;
    spec.state_dim = 2;
    spec.control_dim = 1;
    spec.f = {gen.expression(names, 3), gen.expression(names, 3)};
    spec.f0 = gen.expression(names, 3);
    spec.u_lo = {"-1"};
    spec.u_hi = {"1"};
    spec.c_lo = {-1, -1};
    spec.c_hi = {1, 1};
    auto p = limco::load_problem(spec);
    auto check = limco::check_derivatives(p, 100, 1000 + trial, 1e-5);
    EXPECT_TRUE(check.ok) << spec.f[0] << " | " << spec.f[1] << " | " << spec.f0;
  }
}

TEST(ControlSignalTest, Validation) {
  const Vec one = Vec::Ones(1);
  EXPECT_THROW(ControlSignal({0.5}, {}, one), InvalidArgument);
  EXPECT_THROW(ControlSignal({0.0, 1.0, 1.0}, {one, one}, one), InvalidArgument);
  EXPECT_THROW(ControlSignal({0.0, 1.0}, {}, one), InvalidArgument);
  EXPECT_THROW(ControlSignal({0.0, 1.0}, {Vec::Ones(2)}, one), InvalidArgument);
}

TEST(ControlSignalTest, RightOpenCells) {
  ControlSignal u({0.0, 1.0, 2.0}, {Vec::Constant(1, 0.1), Vec::Constant(1, 0.2)},
                  Vec::Constant(1, 0.3));
  EXPECT_EQ(u.at(0.0)[0], 0.1);
  EXPECT_EQ(u.at(0.999)[0], 0.1);
  EXPECT_EQ(u.at(1.0)[0], 0.2);
  EXPECT_EQ(u.at(2.0)[0], 0.3);
  EXPECT_EQ(u.at(50.0)[0], 0.3);
  EXPECT_EQ(u.breakpoints_between(0.5, 3.0), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(u.breakpoints_between(1.0, 2.0), std::vector<double>{});
}

TEST(ControlSignalTest, Admissibility) {
  auto p = limco::load_problem(ProblemSpec::named("bolza-example"));
  EXPECT_TRUE(ControlSignal::constant(Vec::Zero(1)).is_admissible(p));
  EXPECT_FALSE(ControlSignal::constant(Vec::Constant(1, 1.5)).is_admissible(p));
  ControlSignal bad({0.0, 1.0}, {Vec::Constant(1, -0.1)}, Vec::Zero(1));
  EXPECT_FALSE(bad.is_admissible(p));
  EXPECT_FALSE(ControlSignal::constant(Vec::Zero(2)).is_admissible(p));
}

TEST(BoxTest, Basics) {
  Box b = Box::uniform(2, -1, 1);
  EXPECT_TRUE(b.contains(Vec::Zero(2)));
  EXPECT_FALSE(b.contains(Vec::Constant(2, 1.1)));
  EXPECT_DOUBLE_EQ(b.distance_to_boundary(Vec::Constant(2, 0.25)), 0.75);
  EXPECT_EQ(b.distance_to_boundary(Vec::Constant(2, 3.0)), 0.0);
  EXPECT_EQ(b.clamp(Vec::Constant(2, 3.0)), Vec::Ones(2));
  EXPECT_THROW(Box(Vec::Ones(1), Vec::Zero(1)), InvalidArgument);
}

TEST(Hamiltonian, MatchesDefinition) {
  auto p = limco::load_problem(ProblemSpec::named("bolza-example"));
  const double h = p.hamiltonian(Vec::Zero(1), Vec::Constant(1, 0.5), limco::RowVec::Constant(1, -1),
                                 1.0, 0.0);
  EXPECT_DOUBLE_EQ(h, -0.5);
}

}  // namespace
