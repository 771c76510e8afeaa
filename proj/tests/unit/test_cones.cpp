#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "polycyc/cones.hpp"

using namespace polycyc;

namespace {

// exact value of a long double
Rational exactRational(long double v) {
  int e = 0;
  long double mant = std::frexp(v, &e);
  // 64-bit mantissa scaled to an integer
  long double scaled = std::ldexp(mant, 64);
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  auto hi = static_cast<unsigned long>(scaled / 4294967296.0L);
  auto lo = static_cast<unsigned long>(scaled - static_cast<long double>(hi) * 4294967296.0L);
  BigInt z = BigInt(hi) * BigInt(4294967296UL) + BigInt(lo);
  Rational q(z);
  if (e - 64 >= 0) q *= Rational(BigInt(1) << (e - 64));
  else q /= Rational(BigInt(1) << (64 - e));
  return neg ? Rational(-q) : q;
}

int exactSign(const Polynomial& p, const std::vector<VarId>& xs, const std::vector<long double>& a) {
  std::unordered_map<VarId, Rational> at;
  for (std::size_t i = 0; i < xs.size(); ++i) at[xs[i]] = exactRational(a[i]);
  return sgn(p.evaluate(at));
}

struct Space {
  UniversePtr u = Universe::create();
  std::vector<VarId> x;
  explicit Space(std::size_t k) {
    for (std::size_t i = 1; i <= k; ++i) x.push_back(u->add("x" + std::to_string(i), VarKind::value));
  }
  Polynomial operator()(const char* s) const { return parsePolynomial(u, s); }
};

Polynomial randomDense(std::mt19937_64& rng, const Space& s, unsigned deg) {
  std::uniform_int_distribution<int> coef(-5, 5), keep(0, 2);
  Polynomial p(s.u);
  std::function<void(std::size_t, unsigned, Monomial)> rec = [&](std::size_t i, unsigned left, Monomial m) {
    if (i == s.x.size()) {
      if (keep(rng) == 0) {
        int c = coef(rng);
        if (c) p = p + Polynomial::monomial(s.u, m, c);
      }
      return;
    }
    for (unsigned e = 0; e <= left; ++e) rec(i + 1, left - e, e ? m * Monomial::of(s.x[i], e) : m);
  };
  while (p.isZero()) rec(0, deg, Monomial{});
  return p;
}

}  // namespace

TEST(Cones, MembershipAndRefinement) {
  Cone c{{1, 2}, Rational(1, 2)};
  EXPECT_TRUE(c.contains({0.1L, 0.001L}));
  EXPECT_TRUE(c.contains({0.1L, -0.001L}));
  EXPECT_FALSE(c.contains({0.1L, 0.0L}));
  EXPECT_FALSE(c.contains({0.1L, 0.02L}));
  EXPECT_FALSE(c.contains({0.5L, 0.001L}));
  EXPECT_FALSE(c.contains({-0.1L, 0.001L}));
  Cone r{{1, 3}, Rational(1, 4)};
  EXPECT_TRUE(r.refines(c));
  EXPECT_FALSE(c.refines(r));
  EXPECT_FALSE(c.refines(c));
  EXPECT_FALSE((Cone{{1, 3}, 1}).refines(c));
}

TEST(Cones, ProbeCurveExample) {
  Cone c{{1, 2}, Rational(1, 2)};
  auto a = probeCurve(c, 0.1L);
  EXPECT_NEAR(static_cast<double>(a[1]), 0.001, 1e-15);
  EXPECT_LT(a[1], a[0] * a[0]);
  EXPECT_NO_THROW(probeCurve(c, std::nextafter(0.5L, 0.0L)));
  EXPECT_THROW(probeCurve(c, 0.5L), std::invalid_argument);
  EXPECT_THROW(probeCurve(c, 0.0L), std::invalid_argument);
}

TEST(Cones, ProbeCurveExponentsThreeCoordinates) {
  Cone c{{1, 2, 3}, 1};
  auto a = probeCurve(c, 0.5L);
  // exponents 1, m2 + 1 = 3, (m2 + 2)(m3 + 1) = 16
  EXPECT_DOUBLE_EQ(static_cast<double>(a[1]), std::pow(0.5, 3));
  EXPECT_DOUBLE_EQ(static_cast<double>(a[2]), std::pow(0.5, 16));
}

TEST(Cones, UnivariateAvoidsRoots) {
  Space s(1);
  auto cert = constructCone(s("x1^2 - x1"), s.x);
  ASSERT_TRUE(cert.certified);
  EXPECT_EQ(cert.cone.m, std::vector<unsigned>{1});
  EXPECT_LE(cert.cone.delta, Rational(1, 2));
  EXPECT_GT(cert.cone.delta, 0);
}

TEST(Cones, LinearTwoVariableExample) {
  Space s(2);
  auto cert = constructCone(s("x2 - x1"), s.x);
  ASSERT_TRUE(cert.certified);
  EXPECT_EQ(cert.cone.m, (std::vector<unsigned>{1, 2}));
  // x2 - x1 = -x1 (1 - l x1) with |l| < 1: nonzero for x1 < 1
  EXPECT_EQ(cert.leading, -1);
  EXPECT_LE(cert.cone.delta, 1);
}

TEST(Cones, StripsPowerOfLastCoordinate) {
  Space s(2);
  auto cert = constructCone(s("x2^2*x1 - x2^3"), s.x);
  ASSERT_TRUE(cert.certified);
  EXPECT_EQ(cert.levels[0].stripped, 2u);
  EXPECT_EQ(cert.cone.m[1], 4u);
}

TEST(Cones, ConstantAndZero) {
  Space s(2);
  auto cert = constructCone(s("3"), s.x);
  EXPECT_TRUE(cert.certified);
  EXPECT_EQ(cert.cone.delta, 1);
  EXPECT_THROW(constructCone(Polynomial(s.u), s.x), std::invalid_argument);
  EXPECT_THROW(constructCone(s("x1 + x2"), {s.x[0]}), std::invalid_argument);
}

TEST(Cones, RandomPolynomialsNonvanishingOnSamples) {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t k = 1 + trial % 3;
    Space s(k);
    Polynomial d = randomDense(rng, s, 1 + static_cast<unsigned>(rng() % 4));
    auto cert = constructCone(d, s.x);
    ASSERT_TRUE(cert.certified) << d.str();
    std::map<std::vector<int>, int> orthantSign;
    for (std::uint64_t i = 1; i <= 1000; ++i) {
      auto a = coneSample(cert.cone, i);
      ASSERT_TRUE(cert.cone.contains(a));
      int sg = exactSign(d, s.x, a);
      ASSERT_NE(sg, 0) << d.str() << " at sample " << i;
      std::vector<int> orth;
      for (std::size_t j = 1; j < k; ++j) orth.push_back(a[j] > 0 ? 1 : -1);
      auto [it, fresh] = orthantSign.emplace(orth, sg);
      EXPECT_EQ(it->second, sg) << d.str();
    }
  }
}

TEST(Cones, RefinementKeepsNonvanishing) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Space s(3);
    Polynomial d = randomDense(rng, s, 3);
    auto cert = constructCone(d, s.x);
    ASSERT_TRUE(cert.certified);
    Cone r = cert.cone;
    r.m[1 + trial % 2] += 1 + trial % 3;
    r.delta /= 3;
    ASSERT_TRUE(r.refines(cert.cone));
    for (std::uint64_t i = 1; i <= 500; ++i) {
      auto a = coneSample(r, i);
      EXPECT_TRUE(cert.cone.contains(a));
      EXPECT_NE(exactSign(d, s.x, a), 0);
    }
  }
}

TEST(Cones, ProbeCurveMembershipOnRandomCones) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Space s(1 + trial % 3);
    auto cert = constructCone(randomDense(rng, s, 4), s.x);
    const long double delta = static_cast<long double>(cert.cone.delta.get_d());
    for (int i = 0; i < 100; ++i) {
      long double t = delta * std::pow(10.0L, -3.0L * (1.0L - i / 99.0L)) * (1 - 1e-9L);
      auto a = probeCurve(cert.cone, t);
      EXPECT_TRUE(cert.cone.contains(a));
    }
  }
}

TEST(Cones, ConeCoordinatesMatchDefinition) {
  auto E = coneExponents({1, 2, 3});
  // a2 = l1 t^2, a3 = l2 (t * l1 t^2)^3 = l2 l1^3 t^9
  EXPECT_EQ(E[1], (std::vector<std::uint64_t>{2, 1, 0}));
  EXPECT_EQ(E[2], (std::vector<std::uint64_t>{9, 3, 1}));
}

TEST(Regularity, ThomMap) {
  Space s(2);
  auto res = regularityPolynomial({s("x1"), s("x1*x2")}, s.x);
  ASSERT_TRUE(res.symbolic);
  EXPECT_EQ(res.d->str(), "a1");
}

TEST(Regularity, Square) {
  Space s(1);
  auto res = regularityPolynomial({s("x1^2")}, s.x);
  ASSERT_TRUE(res.symbolic);
  EXPECT_EQ(res.d->str(), "a1");
}

TEST(Regularity, RandomQuadraticMapCriticalValues) {
  std::mt19937_64 rng(2718);
  std::uniform_int_distribution<int> c(-3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    Space s(2);
    std::vector<Polynomial> P;
    for (int i = 0; i < 2; ++i) {
      Polynomial p(s.u);
      for (const char* m : {"x1^2", "x1*x2", "x2^2", "x1", "x2"}) p = p + s(m).scaled(c(rng));
      P.push_back(p);
    }
    RegularityResult res;
    try {
      res = regularityPolynomial(P, s.x);
    } catch (const std::invalid_argument&) {
      continue;  // degenerate draw
    }
    ASSERT_TRUE(res.symbolic);
    auto J = detail::jacobian(P, s.x);
    Polynomial det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    // sign changes of det J along horizontal grid lines, refined by bisection
    int found = 0;
    for (int row = 0; row <= 40; ++row) {
      double y = -1.5 + 3.0 * row / 40;
      auto f = [&](double x) { return det.evaluate(std::unordered_map<VarId, double>{{s.x[0], x}, {s.x[1], y}}); };
      for (int col = 0; col < 200; ++col) {
        double a = -1.5 + 3.0 * col / 200, b = a + 3.0 / 200;
        if (f(a) * f(b) >= 0) continue;
        for (int it = 0; it < 60; ++it) {
          double m = 0.5 * (a + b);
          (f(a) * f(m) <= 0 ? b : a) = m;
        }
        std::unordered_map<VarId, double> at{{s.x[0], 0.5 * (a + b)}, {s.x[1], y}};
        std::unordered_map<VarId, double> val{{res.values[0], P[0].evaluate(at)}, {res.values[1], P[1].evaluate(at)}};
        double scale = 0;
        for (auto& [mono, coef] : res.d->terms()) {
          double t = std::fabs(coef.get_d());
          for (auto& [v, e] : mono.factors()) t *= std::pow(std::fabs(val[v]), e);
          scale += t;
        }
        EXPECT_LE(std::fabs(res.d->evaluate(val)), 1e-6 * std::max(1.0, scale));
        ++found;
      }
    }
    EXPECT_GT(found, 0);
  }
}

TEST(Regularity, SphereCriticalValues) {
  Space s(2);
  RegularityOptions opt;
  opt.includeBall = true;
  auto res = regularityPolynomial({s("x1")}, s.x, opt);
  ASSERT_TRUE(res.symbolic);
  for (double v : {-1.0, 1.0})
    EXPECT_NEAR(res.d->evaluate(std::unordered_map<VarId, double>{{res.values[0], v}}), 0, 1e-12);
}

TEST(Regularity, NumericFallbackBeyondSymbolicSizes) {
  Space s(5);
  auto res = regularityPolynomial({s("x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + 1/2")}, s.x);
  EXPECT_FALSE(res.symbolic);
  ASSERT_FALSE(res.sampledCriticalValues.empty());
  for (auto& v : res.sampledCriticalValues) EXPECT_NEAR(v[0], 0.5, 1e-9);
}

TEST(Regularity, TrivialMapRejected) {
  Space s(2);
  EXPECT_THROW(regularityPolynomial({s("x1 + x2"), s("2*x1 + 2*x2")}, s.x), std::invalid_argument);
}

TEST(Regularity, ConeOfRegularValuesForThom) {
  Space s(2);
  auto res = regularityPolynomial({s("x1"), s("x1*x2")}, s.x);
  auto cert = constructCone(*res.d, res.values);
  ASSERT_TRUE(cert.certified);
  for (std::uint64_t i = 1; i <= 200; ++i) EXPECT_GT(coneSample(cert.cone, i)[0], 0);
}
