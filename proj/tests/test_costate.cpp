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

#include "limco/costate.hpp"
#include "support.hpp"

namespace {

using limco::ControlProblem;
using limco::ControlSignal;
using limco::CostateCandidate;
using limco::HorizonSequence;
using limco::InvalidArgument;
using limco::LimitClass;
using limco::ProblemSpec;
using limco::RowVec;
using limco::Vec;

ControlProblem named(const std::string& name, std::map<std::string, double> params = {}) {
  return limco::load_problem(ProblemSpec::named(name, std::move(params)));
}

const ControlSignal kZero = ControlSignal::constant(Vec::Zero(1));
const Vec kOrigin = Vec::Zero(1);

TEST(Horizons, Geometric) {
  auto h = HorizonSequence::geometric(1, 2, 8);
  EXPECT_EQ(h.values, (std::vector<double>{1, 2, 4, 8, 16, 32, 64, 128}));
  EXPECT_THROW(HorizonSequence::geometric(1, 1, 4), InvalidArgument);
  EXPECT_THROW(HorizonSequence::geometric(0, 2, 4), InvalidArgument);
}

TEST(Horizons, Parse) {
  EXPECT_EQ(HorizonSequence::parse("geometric:1:2:7").values,
            HorizonSequence::geometric(1, 2, 7).values);
  EXPECT_EQ(HorizonSequence::parse("list:1,2.5,10").values, (std::vector<double>{1, 2.5, 10}));
  for (const char* bad : {"", "geometric:1:2", "list:3,2", "list:-1,2", "list:1,1", "spiral:1:2:3",
                          "geometric:a:2:3", "list:"})
    EXPECT_THROW(HorizonSequence::parse(bad), InvalidArgument) << bad;
}

TEST(Horizons, TailAfter) {
  auto h = HorizonSequence::tail_after(3.0, 4);
  EXPECT_EQ(h.values, (std::vector<double>{4, 5, 7, 11}));
}

TEST(Candidate, UserValidation) {
  EXPECT_THROW(CostateCandidate::user(-1, RowVec::Zero(1)), InvalidArgument);
  EXPECT_THROW(CostateCandidate::user(0, RowVec::Zero(2)), InvalidArgument);
  EXPECT_NO_THROW(CostateCandidate::user(0, RowVec::Ones(1)));
}

TEST(CandidateProperty, NormalizationSumsToOne) {
  limco::testing::Gen gen(7);
  for (int i = 0; i < 200; ++i) {
    const int m = gen.integer(1, 4);
    const double lambda = gen.coin() ? 0.0 : gen.uniform(0.0, 10.0);
    RowVec psi = gen.row(m, -5, 5);
    auto c = CostateCandidate::user(lambda, psi).normalized_copy();
    EXPECT_TRUE(c.normalized);
    EXPECT_NEAR(c.psi0.norm() + c.lambda, 1.0, 1e-10);
    // positive factor only
    if (lambda > 0) {
      EXPECT_NEAR((c.psi0 / c.lambda - psi / lambda).norm(), 0.0, 1e-10 * (1 + psi.norm() / lambda));
    }
  }
}

TEST(Classify, Sequences) {
  const limco::LimitCriteria c;
  std::vector<RowVec> conv, div, osc;
  for (int n = 0; n < 8; ++n) {
    conv.push_back(RowVec::Constant(1, -2.5 + std::exp(-8.0 * (n + 1))));
    div.push_back(RowVec::Constant(2, std::exp(3.0 * n)));
    osc.push_back(RowVec::Constant(1, n % 2 == 0 ? 1.0 : -1.0));
  }
  RowVec limit;
  EXPECT_EQ(limco::classify_sequence(conv, c, &limit), LimitClass::kNormalFinite);
  EXPECT_NEAR(limit[0], -2.5, 1e-6);
  EXPECT_EQ(limco::classify_sequence(div, c, &limit), LimitClass::kAbnormalUnbounded);
  EXPECT_NEAR(limit.norm(), 1.0, 1e-12);
  EXPECT_NEAR(limit[0], std::sqrt(0.5), 1e-12);
  EXPECT_EQ(limco::classify_sequence(osc, c), LimitClass::kInconclusive);
  conv.resize(3);
  EXPECT_EQ(limco::classify_sequence(conv, c), LimitClass::kInconclusive);
}

TEST(BackwardShot, ExampleAtFive) {
  auto p = named("bolza-example");
  auto shot = limco::backward_shot(p, kOrigin, kZero, 1.0, 5.0);
  EXPECT_NEAR(shot.candidate.psi0[0], 2.5 * (1 - std::exp(-10.0)), 1e-6);
  EXPECT_NEAR(shot.candidate.psi0[0], 2.49988671, 1e-6);
  EXPECT_EQ(shot.candidate.lambda, 1.0);
  EXPECT_EQ(shot.path.psi.back()[0], 0.0);
  EXPECT_LE(shot.terminal_residual, 1e-10);
  EXPECT_FALSE(shot.degenerate);
  EXPECT_TRUE(limco::backward_shot(p, kOrigin, kZero, 0.0, 5.0).degenerate);
}

// psi_n(0) = -lambda I(xi_n; tau_n) when psi(tau_n) = 0.
TEST(BackwardShotProperty, CauchyEquivalence) {
  limco::testing::Gen gen(17);
  for (const auto& name : limco::registry_names()) {
    auto p = named(name);
    for (double tau : {1.0, 2.0, 4.0, 8.0}) {
      const Vec xi = gen.vec(p.state_dim, -0.5, 0.5);
      const double lambda = gen.uniform(0.1, 2.0);
      auto shot = limco::backward_shot(p, xi, kZero, lambda, tau);
      const RowVec I = limco::sensitivity_at(p, xi, kZero, {tau}).front().I;
      EXPECT_LE((shot.candidate.psi0 + lambda * I).norm(), 1e-6 * (1 + I.norm()))
          << name << " tau " << tau;
    }
  }
}

TEST(Sweep, ExampleIsNormalFinite) {
  auto p = named("bolza-example");
  auto r = limco::horizon_sweep(p, kOrigin, kZero, HorizonSequence::geometric(1, 2, 7), {});
  ASSERT_EQ(r.classification, LimitClass::kNormalFinite);
  EXPECT_NEAR(r.limit_vector[0], -2.5, 1e-6);
  ASSERT_EQ(r.table.size(), 7u);
  for (const auto& row : r.table) {
    EXPECT_NEAR(row.I[0], -2.5 * (1 - std::exp(-2 * row.tau)), 1e-8);
    EXPECT_EQ(row.j_gap, 0.0);
    EXPECT_FALSE(row.failed);
  }
  // invariant: last two Cauchy residuals within eps_lim
  const auto& res = r.residuals;
  ASSERT_EQ(res.size(), 6u);
  EXPECT_LE(res[5], 1e-6 * (1 + 2.5));
  EXPECT_LE(res[4], 1e-6 * (1 + 2.5));
  EXPECT_FALSE(r.partial);
}

TEST(Sweep, UnstableLqIsAbnormal) {
  auto p = named("lq-scalar", {{"a", 1.0}});
  const Vec b = Vec::Constant(1, 0.5);
  const limco::LimitCriteria crit;
  auto r = limco::horizon_sweep(p, b, kZero, HorizonSequence::geometric(1, 2, 7), {}, crit);
  ASSERT_EQ(r.classification, LimitClass::kAbnormalUnbounded);
  EXPECT_NEAR(r.limit_vector[0], 1.0, 1e-12);
  EXPECT_GE(r.table.back().norm_I, crit.divergence_threshold);
  const auto& dr = r.direction_residuals;
  EXPECT_LE(dr[dr.size() - 1], 2 * crit.eps_lim);
  EXPECT_LE(dr[dr.size() - 2], 2 * crit.eps_lim);

  auto c = limco::classify_candidate(p, b, r);
  EXPECT_EQ(c.raw.lambda, 0.0);
  EXPECT_EQ(c.candidate.lambda, 0.0);
  EXPECT_NEAR(c.candidate.psi0[0], -1.0, 1e-12);
}

TEST(Sweep, ScheduleLengthMismatch) {
  auto p = named("bolza-example");
  EXPECT_THROW(limco::horizon_sweep(p, kOrigin, kZero, HorizonSequence::geometric(1, 2, 5),
                                    limco::constant_schedule(kOrigin, 4)),
               InvalidArgument);
  EXPECT_THROW(limco::horizon_sweep(p, kOrigin, kZero, HorizonSequence::geometric(1, 2, 3), {}),
               InvalidArgument);
}

TEST(Sweep, PerturbedScheduleRows) {
  auto p = named("lq-scalar", {{"a", -1.0}});
  const Vec b = Vec::Constant(1, 0.5);
  const auto dirs = limco::direction_dictionary(1, 2, 5);
  auto sched = limco::perturbed_schedule(b, 6, 0.4, dirs[0]);
  ASSERT_EQ(sched.size(), 6u);
  for (std::size_t n = 0; n < 6; ++n)
    EXPECT_NEAR((sched[n] - b).norm(), 0.4 * std::ldexp(1.0, -static_cast<int>(n)), 1e-15);
  auto r = limco::horizon_sweep(p, b, kZero, HorizonSequence::geometric(1, 2, 6), sched);
  for (std::size_t n = 0; n < 6; ++n) EXPECT_EQ(r.table[n].xi, sched[n]);
  // xi still moves by 0.4 2^-n, too slow for eps_lim
  EXPECT_EQ(r.classification, LimitClass::kInconclusive);
  auto tight = limco::horizon_sweep(p, b, kZero, HorizonSequence::geometric(1, 2, 6),
                                    limco::perturbed_schedule(b, 6, 1e-9, dirs[0]));
  ASSERT_EQ(tight.classification, LimitClass::kNormalFinite);
  EXPECT_NEAR(tight.limit_vector[0], 0.5, 1e-6);
}

TEST(Sweep, DirectionDictionary) {
  auto d = limco::direction_dictionary(3, 4, 9);
  ASSERT_EQ(d.size(), 10u);
  for (const auto& v : d) EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_EQ(d[0], Vec::Unit(3, 0));
  EXPECT_EQ(d[1], -Vec::Unit(3, 0));
  auto again = limco::direction_dictionary(3, 4, 9);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i], again[i]);
}

// Extending tau never jumps from NormalFinite straight to AbnormalUnbounded.
TEST(SweepProperty, MonotoneRefinement) {
  std::vector<std::pair<ControlProblem, Vec>> cases;
  for (const auto& name : limco::registry_names()) {
    auto p = named(name);
    cases.emplace_back(p, Vec::Zero(p.state_dim));
  }
  cases.emplace_back(named("lq-scalar", {{"a", 1.0}}), Vec::Constant(1, 0.5));
  cases.emplace_back(named("lq-scalar", {{"a", -1.0}}), Vec::Constant(1, 0.5));
  for (const auto& [p, b] : cases) {
    auto r = limco::horizon_sweep(p, b, kZero, HorizonSequence::geometric(0.5, 2, 9), {});
    const auto& h = r.prefix_history;
    ASSERT_EQ(h.size(), 6u);
    for (std::size_t k = 1; k < h.size(); ++k)
      EXPECT_FALSE(h[k - 1] == LimitClass::kNormalFinite && h[k] == LimitClass::kAbnormalUnbounded)
          << p.name;
    EXPECT_EQ(h.back(), r.classification);
  }
}

TEST(ClassifyCandidate, ExampleFailsTransversality) {
  auto p = named("bolza-example");
  auto r = limco::horizon_sweep(p, kOrigin, kZero, HorizonSequence::geometric(1, 2, 7), {});
  auto c = limco::classify_candidate(p, kOrigin, r);
  EXPECT_EQ(c.raw.lambda, 1.0);
  EXPECT_NEAR(c.raw.psi0[0], 2.5, 1e-6);
  EXPECT_NEAR(c.candidate.lambda, 1.0 / 3.5, 1e-6);
  EXPECT_NEAR(c.candidate.psi0[0], 2.5 / 3.5, 1e-6);
  EXPECT_FALSE(c.transversality.holds);
  EXPECT_NEAR(c.transversality.distance, 2.5 / 3.5, 1e-6);
  EXPECT_EQ(c.raw.provenance, limco::Provenance::kBackwardShot);
}

TEST(ClassifyCandidate, InconclusiveThrows) {
  limco::LimitReport r;
  auto p = named("bolza-example");
  EXPECT_THROW(limco::classify_candidate(p, kOrigin, r), InvalidArgument);
}

// Multiplying every I by c > 0 leaves verdicts, and the abnormal candidate, unchanged.
TEST(ClassifyCandidateProperty, PositiveScaling) {
  limco::testing::Gen gen(23);
  struct Case {
    ControlProblem p;
    Vec b;
  };
  std::vector<Case> cases{{named("bolza-example"), kOrigin},
                          {named("lq-scalar", {{"a", 1.0}}), Vec::Constant(1, 0.5)},
                          {named("damped-oscillator"), Vec::Constant(2, 0.25)}};
  for (const auto& cs : cases) {
    auto base = limco::horizon_sweep(cs.p, cs.b, kZero, HorizonSequence::geometric(1, 2, 7), {});
    auto ref = limco::classify_candidate(cs.p, cs.b, base);
    for (int k = 0; k < 10; ++k) {
      const double c = gen.uniform(0.1, 10.0);
      limco::LimitReport scaled = base;
      std::vector<RowVec> values;
      for (auto& row : scaled.table) {
        row.I *= c;
        values.push_back(row.I);
      }
      scaled.classification = limco::classify_sequence(values, {}, &scaled.limit_vector);
      ASSERT_EQ(scaled.classification, base.classification) << cs.p.name << " c " << c;
      auto got = limco::classify_candidate(cs.p, cs.b, scaled);
      EXPECT_EQ(got.transversality.holds, ref.transversality.holds) << cs.p.name;
      if (base.classification == LimitClass::kAbnormalUnbounded) {
        EXPECT_NEAR(got.candidate.lambda, ref.candidate.lambda, 1e-8);
        EXPECT_LE((got.candidate.psi0 - ref.candidate.psi0).norm(), 1e-8);
      }
    }
  }
}

TEST(Ak, ExampleAtZeroAndOne) {
  auto p = named("bolza-example");
  auto a0 = limco::ak_costate(p, kOrigin, kZero, 0.0, HorizonSequence::tail_after(0.0));
  EXPECT_EQ(a0.verdict, limco::TailVerdict::kConverged);
  EXPECT_NEAR(a0.psi_T[0], 2.5, 1e-6);
  auto a1 = limco::ak_costate(p, kOrigin, kZero, 1.0, HorizonSequence::tail_after(1.0));
  EXPECT_EQ(a1.verdict, limco::TailVerdict::kConverged);
  EXPECT_NEAR(a1.psi_T[0], 2.5 * std::exp(-2.0), 1e-6);
  EXPECT_NEAR(a1.psi_T[0], 0.33833821, 1e-6);
}

TEST(Ak, DivergentTail) {
  auto p = named("lq-scalar", {{"a", 1.0}});
  auto a = limco::ak_costate(p, Vec::Constant(1, 0.5), kZero, 1.0, HorizonSequence::tail_after(1.0));
  EXPECT_EQ(a.verdict, limco::TailVerdict::kDivergent);
}

TEST(Ak, TailValidation) {
  auto p = named("bolza-example");
  EXPECT_THROW(limco::ak_costate(p, kOrigin, kZero, 5.0, HorizonSequence::list({2, 6, 7})),
               InvalidArgument);
  EXPECT_THROW(limco::ak_costate(p, kOrigin, kZero, 0.0, HorizonSequence::list({2, 6})),
               InvalidArgument);
}

TEST(Shifted, ExampleAtOne) {
  auto p = named("bolza-example");
  const RowVec I_star = RowVec::Constant(1, -2.5);
  EXPECT_NEAR(limco::shifted_limit_costate(p, kOrigin, kZero, I_star, 1.0)[0], 0.33833821, 1e-6);
  EXPECT_NEAR(limco::shifted_limit_costate(p, kOrigin, kZero, I_star, 0.0)[0], 2.5, 0.0);
}

// The explicit tail formula and the shifted limit agree when both converge.
TEST(AkProperty, MatchesShiftedLimit) {
  std::vector<std::pair<ControlProblem, Vec>> cases{
      {named("bolza-example"), kOrigin},
      {named("lq-scalar", {{"a", -1.0}}), Vec::Constant(1, 0.5)},
      {named("damped-oscillator"), Vec::Constant(2, 0.5)}};
  for (const auto& [p, b] : cases) {
    for (double T : {0.0, 0.5, 1.0, 3.0}) {
      auto ak = limco::ak_costate(p, b, kZero, T, HorizonSequence::tail_after(T, 8));
      ASSERT_EQ(ak.verdict, limco::TailVerdict::kConverged) << p.name << " T " << T;
      const RowVec shifted = limco::shifted_limit_costate(p, b, kZero, ak.I_star, T);
      EXPECT_LE((ak.psi_T - shifted).norm(), 1e-6) << p.name << " T " << T;
    }
  }
}

TEST(Clusters, SingleLinkage) {
  std::vector<RowVec> pts{RowVec::Constant(1, 0.0), RowVec::Constant(1, 1e-8),
                          RowVec::Constant(1, 2e-8), RowVec::Constant(1, 5.0)};
  auto cl = limco::single_linkage(pts, 1e-7);
  ASSERT_EQ(cl.size(), 2u);
  int total = 0;
  for (const auto& c : cl) total += c.count;
  EXPECT_EQ(total, 4);
  EXPECT_TRUE(limco::single_linkage({}, 1e-6).empty());
}

TEST(JointLimit, ExampleReportsSpread) {
  auto p = named("bolza-example");
  auto r = limco::joint_limit_probe(p, kOrigin, kZero, HorizonSequence::geometric(1, 2, 6),
                                    {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}, 4, 3);
  ASSERT_EQ(r.stages.size(), 6u);
  for (const auto& st : r.stages) {
    EXPECT_EQ(st.xi.size(), 5u);
    EXPECT_EQ(st.xi.front(), kOrigin);
  }
  EXPECT_TRUE(std::isfinite(r.spread) || r.failures > 0);
  // points with xi > 0 leave 0 and the cost of leaving grows with tau
  EXPECT_FALSE(r.holds);
}

TEST(JointLimit, DampedOscillatorHolds) {
  auto p = named("damped-oscillator");
  auto r = limco::joint_limit_probe(p, Vec::Zero(2), kZero, HorizonSequence::geometric(4, 2, 5),
                                    {1e-2, 1e-3, 1e-4, 1e-5, 1e-8}, 4, 3);
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.spread, 1e-6 * 10);
}

TEST(GradientsAtInfinity, RayOnlyContainsMinusIStar) {
  auto p = named("bolza-example");
  auto g = limco::gradients_at_infinity(p, kOrigin, kZero, HorizonSequence::geometric(1, 2, 7),
                                        {0.0}, 3, 1);
  ASSERT_FALSE(g.d1.empty_at_budget());
  bool found = false;
  for (const auto& q : g.d1.points) found = found || std::abs(q[0] - 2.5) <= 1e-6;
  EXPECT_TRUE(found);
  auto normal = CostateCandidate::user(1.0, RowVec::Constant(1, 2.5));
  EXPECT_TRUE(g.cross_check(normal).consistent);
  auto other = CostateCandidate::user(1.0, RowVec::Constant(1, 0.0));
  EXPECT_FALSE(g.cross_check(other).consistent);
}

TEST(GradientsAtInfinity, AbnormalDirection) {
  auto p = named("lq-scalar", {{"a", 1.0}});
  auto g = limco::gradients_at_infinity(p, Vec::Constant(1, 0.5), kZero,
                                        HorizonSequence::geometric(1, 2, 7), {1e-3}, 4, 1);
  ASSERT_FALSE(g.d0.points.empty());
  auto abnormal = CostateCandidate::user(0.0, RowVec::Constant(1, -1.0));
  EXPECT_TRUE(g.cross_check(abnormal).consistent) << g.cross_check(abnormal).note;
}

}  // namespace
