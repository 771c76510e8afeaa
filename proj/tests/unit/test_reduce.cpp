#include <gtest/gtest.h>

#include <random>

#include "polycyc/reduce.hpp"
#include "support/random_poly.hpp"

using namespace polycyc;

namespace {

struct Plane {
  UniversePtr u = Universe::create();
  VarId x = u->add("x", VarKind::phase);
  VarId y = u->add("y", VarKind::phase);
  VarId lam = u->add("lambda", VarKind::spec);
  Polynomial X = Polynomial::variable(u, x), Y = Polynomial::variable(u, y), L = Polynomial::variable(u, lam);
};

MixedSystem volumeSystem(unsigned n) {
  UniversePtr u = Universe::create();
  std::vector<VarId> xs;
  for (unsigned i = 1; i <= n; ++i) xs.push_back(u->add("x" + std::to_string(i), VarKind::phase));
  MixedSystem s;
  s.jets = std::make_shared<JetSpace>(u, xs, CartesianType{}, n);
  for (VarId v : xs) s.addForm(OneForm::differential(u, v));
  Polynomial rho(u, 1);
  for (VarId v : xs) rho -= Polynomial::variable(u, v, 2);
  s.rhoFactors.push_back(rho);
  return s;
}

Degree bruteAssignment(const std::vector<std::vector<Degree>>& w) {
  std::vector<std::size_t> p(w.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
  Degree best = Degree::negInf();
  do {
    Degree s(0);
    for (std::size_t i = 0; i < p.size(); ++i) s = s + w[i][p[i]];
    best = Degree::max(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

}  // namespace

TEST(Reduce, ContactTwoDimensionalMatchesCofactor) {
  Plane b;
  MixedSystem s;
  s.jets = std::make_shared<JetSpace>(b.u, std::vector<VarId>{b.x, b.y}, CartesianType{{"f"}, {{b.y}}}, 2);
  OneForm w(b.u);
  w.set(b.y, b.X);
  w.set(b.x, -(b.L * b.Y));
  s.addForm(w);
  s.loose.push_back({b.X - s.jets->value(0), "b"});
  Polynomial fy = Polynomial::variable(b.u, s.jets->jet(0, {{b.y, 1}}));
  // rows: omega, dF = dx - f' dy
  PolyMatrix m{{-(b.L * b.Y), b.X}, {Polynomial(b.u, 1), -fy}};
  Polynomial oracle = testsupport::leibnizDeterminant(m, b.u);
  LedgerEntry e = contactFunction(s, 0);
  ASSERT_TRUE(e.materialized());
  EXPECT_EQ(*e.poly, oracle);
  EXPECT_EQ(e.poly->str(), "f[y]*lambda*y - x");
  EXPECT_EQ(e.degree, Degree(2));
}

TEST(Reduce, ConstantFormsGiveUnit) {
  for (unsigned n = 1; n <= 4; ++n) {
    MixedSystem s = volumeSystem(n);
    LedgerEntry e = contactFunction(s, n - 1);
    ASSERT_TRUE(e.materialized());
    ASSERT_TRUE(e.poly->isConstant());
    EXPECT_EQ(abs(e.poly->constantValue()), 1);
  }
}

TEST(Reduce, DimensionMismatch) {
  MixedSystem s = volumeSystem(3);
  s.pfaffian.pop_back();
  s.pfaffianLabels.pop_back();
  EXPECT_THROW(contactFunction(s, 0), std::invalid_argument);
  EXPECT_THROW(runSchedule(s), std::invalid_argument);
}

TEST(Reduce, ContactStepBookkeeping) {
  Plane b;
  MixedSystem s;
  s.jets = std::make_shared<JetSpace>(b.u, std::vector<VarId>{b.x, b.y}, CartesianType{{"f"}, {{b.x, b.y}}}, 2);
  OneForm w(b.u);
  w.set(b.y, b.X);
  w.set(b.x, -b.Y);
  s.addForm(w);
  s.loose.push_back({s.jets->value(0), "b"});
  MixedSystem t = applyContactStep(s, "eps");
  EXPECT_TRUE(t.pfaffian.empty());
  ASSERT_EQ(t.loose.size(), 1u);
  ASSERT_EQ(t.rigid.size(), 1u);
  EXPECT_EQ(t.rigid[0].target, "eps");
  EXPECT_EQ(t.equationCount(), t.baseDim());
  // sigma(omega, F) = *(omega ^ dF)
  Polynomial direct = wedgeAsterisk({w, s.jets->exteriorDerivative(s.loose[0].expression)}, {b.x, b.y});
  EXPECT_EQ(*t.rigid[0].function.poly, direct);
  ASSERT_EQ(t.history.size(), 1u);
  EXPECT_EQ(t.history[0].kind, StepKind::contact);
  EXPECT_EQ(t.history[0].jetOrderAfter, 1u);
}

TEST(Reduce, ShapeConservedOnEverySchedule) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    MixedSystem s = randomMixedSystem(rng, 3, 2, 1 + trial % 3);
    MixedSystem cur = convertLoose(s);
    while (!cur.pfaffian.empty()) {
      std::size_t pf = cur.pfaffian.size(), rg = cur.rigid.size();
      cur = applyContactStep(cur);
      EXPECT_EQ(cur.pfaffian.size() + 1, pf);
      EXPECT_EQ(cur.rigid.size(), rg + 1);
      EXPECT_EQ(cur.equationCount(), cur.baseDim());
    }
  }
}

TEST(Reduce, CoveringStepAppendsRho) {
  MixedSystem s = volumeSystem(3);
  MixedSystem t = applyCoveringStep(s);
  ASSERT_EQ(t.rigid.size(), 1u);
  ASSERT_TRUE(t.rigid[0].function.materialized());
  EXPECT_EQ(*t.rigid[0].function.poly, s.rho());
  EXPECT_EQ(t.rigid[0].function.poly->str(), "-x1^2 - x2^2 - x3^2 + 1");
  EXPECT_EQ(t.rigid[0].function.degree, Degree(2));
  EXPECT_EQ(t.history[0].kind, StepKind::covering);
  EXPECT_EQ(t.history[0].jetOrderAfter, s.jetOrder());
}

TEST(Reduce, ContactRaisesJetOrderByAtMostOne) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    MixedSystem cur = convertLoose(randomMixedSystem(rng, 3, 2, 1));
    while (!cur.pfaffian.empty()) {
      std::uint32_t before = cur.jetOrder();
      cur = applyContactStep(cur);
      EXPECT_LE(cur.history.back().jetOrderAfter, before + 1);
    }
  }
}

TEST(Reduce, ZeroStepSchedule) {
  UniversePtr u = Universe::create();
  VarId x = u->add("x", VarKind::phase);
  MixedSystem s;
  s.jets = std::make_shared<JetSpace>(u, std::vector<VarId>{x}, CartesianType{}, 1);
  s.rigid.push_back({measure(Polynomial::variable(u, x).pow(3), "input"), "a"});
  auto rep = runSchedule(s);
  ASSERT_EQ(rep.systems.size(), 1u);
  ASSERT_EQ(rep.systems[0].components.size(), 1u);
  EXPECT_EQ(rep.systems[0].components[0].degree, Degree(3));
  EXPECT_EQ(bezoutProduct(rep.systems[0]).value, 3);
}

TEST(Reduce, ScheduleCountAndCoveringPlacement) {
  std::mt19937_64 rng(3);
  MixedSystem s = randomMixedSystem(rng, 4, 2, 2);
  auto rep = runSchedule(s);
  ASSERT_EQ(rep.systems.size(), 5u);
  for (std::size_t a = 0; a < rep.systems.size(); ++a) {
    const auto& c = rep.systems[a];
    EXPECT_EQ(c.scheduleIndex, a);
    ASSERT_EQ(c.steps.size(), 4u);
    for (std::size_t r = 0; r < 4; ++r)
      EXPECT_EQ(c.steps[r].kind, r + 1 == a ? StepKind::covering : StepKind::contact) << a << " " << r;
    // elimination order: omega2, omega1, dF1, dF2
    EXPECT_EQ(c.steps[0].eliminated, "omega2");
    EXPECT_EQ(c.steps[1].eliminated, "omega1");
    EXPECT_EQ(c.steps[2].eliminated, "dF1");
    EXPECT_EQ(c.steps[3].eliminated, "dF2");
  }
}

TEST(Reduce, BezoutProducts) {
  Plane b;
  ChainMapSystem ideal;
  ideal.components = {measure(b.X.pow(2) + b.Y.pow(2), "P1"), measure(b.X * b.Y, "P2")};
  EXPECT_EQ(bezoutProduct(ideal).value, 4);
  ChainMapSystem lin;
  lin.components = {measure(b.X + b.Y, "P1"), measure(b.X - b.Y, "P2")};
  EXPECT_EQ(bezoutProduct(lin).value, 1);
  ChainMapSystem degenerate;
  degenerate.components = {measure(Polynomial(b.u, 2), "P1"), measure(b.X.pow(3), "P2")};
  auto bp = bezoutProduct(degenerate);
  EXPECT_EQ(bp.value, 3);
  ASSERT_EQ(bp.warnings.size(), 1u);
  EXPECT_NE(bp.warnings[0].find("counted as 1"), std::string::npos);
}

TEST(Reduce, AssignmentBoundMatchesPermutationOracle) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> val(-1, 6), size(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    int n = size(rng);
    std::vector<std::vector<Degree>> w(n, std::vector<Degree>(n));
    for (auto& row : w)
      for (auto& e : row) {
        int v = val(rng);
        e = v < 0 ? Degree::negInf() : Degree(v);
      }
    EXPECT_EQ(maxWeightAssignment(w), bruteAssignment(w));
  }
}

TEST(Reduce, LedgerSoundnessAndTheoremBound) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<unsigned> nd(1, 4), dd(1, 3);
  for (int trial = 0; trial < 30; ++trial) {
    unsigned n = nd(rng), d = dd(rng);
    unsigned k = std::uniform_int_distribution<unsigned>(0, n)(rng);
    MixedSystem s = randomMixedSystem(rng, n, d, k);
    auto rep = runSchedule(s);
    EXPECT_TRUE(rep.boundHolds) << (rep.violations.empty() ? "" : rep.violations[0]);
    EXPECT_TRUE(rep.tightBoundHolds);
    EXPECT_EQ(rep.systems.size(), n + 1);
    for (auto& c : rep.systems)
      for (auto& e : c.components) {
        if (e.materialized()) {
          EXPECT_EQ(e.degree, e.poly->totalDegree(kChainKinds));
          EXPECT_LE(e.degree, e.bound);
        } else if (!e.exact) {
          EXPECT_LE(e.degree, e.bound);
        }
      }
  }
}

TEST(Reduce, BoundOnlyEntriesDominateExactOnes) {
  std::mt19937_64 rng(77);
  ReduceOptions exact;
  ReduceOptions bounded;
  bounded.materialize = false;
  for (int trial = 0; trial < 10; ++trial) {
    MixedSystem s = randomMixedSystem(rng, 3, 2, 1 + trial % 3);
    auto a = runSchedule(s, exact), b = runSchedule(s, bounded);
    for (std::size_t i = 0; i < a.systems.size(); ++i)
      for (std::size_t j = 0; j < a.systems[i].components.size(); ++j) {
        const auto& ea = a.systems[i].components[j];
        const auto& eb = b.systems[i].components[j];
        if (eb.label.rfind("covering", 0) == 0) {
          EXPECT_EQ(ea.degree, eb.degree);
          continue;
        }
        EXPECT_LE(ea.degree, eb.degree) << "schedule " << i << " component " << j;
      }
  }
}

TEST(Reduce, LooseDifferentialMatchesDirectContactOnInstances) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Plane b;
    MixedSystem s;
    s.jets = std::make_shared<JetSpace>(b.u, std::vector<VarId>{b.x, b.y}, CartesianType{{"f"}, {{b.x, b.y}}}, 2);
    OneForm w(b.u);
    w.set(b.x, testsupport::randomPoly(rng, b.u, {b.x, b.y}, 2, 3));
    w.set(b.y, testsupport::randomPoly(rng, b.u, {b.x, b.y}, 2, 3));
    s.addForm(w);
    s.loose.push_back({s.jets->value(0), "b"});
    Polynomial direct = contactFunction(s, 0).poly.value();
    MixedSystem converted = convertLoose(s);
    ASSERT_EQ(converted.pfaffian.size(), 2u);
    Polynomial viaForms = applyContactStep(converted).rigid[0].function.poly.value();
    Polynomial f = testsupport::randomPoly(rng, b.u, {b.x, b.y}, 3, 4);
    Polynomial p = s.jets->instantiate(direct, {f}), q = s.jets->instantiate(viaForms, {f});
    EXPECT_TRUE(p == q || p == -q);
    std::uniform_real_distribution<double> pt(-1, 1);
    for (int i = 0; i < 20; ++i) {
      std::unordered_map<VarId, double> at{{b.x, pt(rng)}, {b.y, pt(rng)}};
      EXPECT_NEAR(std::fabs(p.evaluate(at)), std::fabs(q.evaluate(at)), 1e-9);
    }
  }
}

TEST(Reduce, FirstContactDegreeAtMostDkPlusN) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    unsigned n = 2 + trial % 3, k = trial % (n + 1), d = 1 + trial % 3;
    MixedSystem s = convertLoose(randomMixedSystem(rng, n, d, k));
    LedgerEntry e = contactFunction(s, s.pfaffian.size() - 1);
    EXPECT_LE(e.degree.valueOr(0), static_cast<std::int64_t>(inputDegree(s) * k + n));
  }
}

TEST(Reduce, ScheduleZeroLedgerAtMostDoubles) {
  // idealistic-type system: omega = x dy - y dx on the plane, one loose equation
  Plane b;
  MixedSystem s;
  s.jets = std::make_shared<JetSpace>(b.u, std::vector<VarId>{b.x, b.y}, CartesianType{{"f"}, {{b.x, b.y}}}, 2);
  OneForm w(b.u);
  w.set(b.y, b.X.pow(2) + b.Y.pow(2));
  w.set(b.x, b.X * b.Y);
  s.addForm(w);
  s.loose.push_back({s.jets->value(0), "b"});
  s.rhoFactors.push_back(Polynomial(b.u, 1) - b.X.pow(2) - b.Y.pow(2));
  auto rep = runSchedule(s);
  auto led = rep.systems[0].degreeLedger();
  ASSERT_EQ(led.size(), 2u);
  EXPECT_LE(led[0], led[1]);
  EXPECT_LE(led[1].value(), 2 * led[0].value());
}

TEST(Reduce, JetCapFailureKeepsPartialLedger) {
  UniversePtr u = Universe::create();
  VarId x = u->add("x", VarKind::phase), y = u->add("y", VarKind::phase), z = u->add("z", VarKind::phase);
  MixedSystem s;
  s.jets = std::make_shared<JetSpace>(u, std::vector<VarId>{x, y, z}, CartesianType{{"f", "g"}, {{x, y}, {y, z}}}, 1);
  OneForm w(u);
  w.set(x, Polynomial::variable(u, y));
  w.set(z, Polynomial(u, 1));
  s.addForm(w);
  s.loose.push_back({s.jets->value(0), "b1"});
  s.loose.push_back({s.jets->value(1), "b2"});
  s.rhoFactors.push_back(Polynomial(u, 1));
  try {
    runSchedule(s);
    FAIL() << "expected a jet-order failure";
  } catch (const ReductionError& e) {
    EXPECT_NE(std::string(e.what()).find("cap"), std::string::npos) << e.what();
    EXPECT_GE(e.partial.size(), 1u);
  }
}

TEST(Reduce, AggregateHalvesLaterSchedules) {
  MixedSystem s = volumeSystem(2);
  auto rep = runSchedule(s);
  ASSERT_EQ(rep.systems.size(), 3u);
  Rational expect = Rational(bezoutProduct(rep.systems[0]).value) +
                    Rational(bezoutProduct(rep.systems[1]).value + bezoutProduct(rep.systems[2]).value) / 2;
  EXPECT_EQ(khovanskiiAggregate(rep), expect);
}
