#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "polycyc/numerics.hpp"
#include "polycyc/univariate.hpp"

using namespace polycyc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) e[i++] = d;
  return e;
}

// roots of p(theta) - a on the circle through t = tan(theta / 2):
// e^{ij theta} (1 + t^2)^d = (1 + i t)^{2j} (1 + t^2)^{d - j}
std::size_t halfAngleRootCount(const TrigPoly& p, double a) {
  using C = std::complex<double>;
  const std::size_t d = p.a.size();
  auto mul = [](const std::vector<C>& x, const std::vector<C>& y) {
    std::vector<C> r(x.size() + y.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < y.size(); ++j) r[i + j] += x[i] * y[j];
    return r;
  };
  auto power = [&](std::vector<C> b, std::size_t e) {
    std::vector<C> r{1};
    for (std::size_t i = 0; i < e; ++i) r = mul(r, b);
    return r;
  };
  std::vector<double> acc(2 * d + 1, 0);
  for (std::size_t j = 0; j <= d; ++j) {
    auto term = mul(power({1, C(0, 1)}, 2 * j), power({1, 0, 1}, d - j));
    double re = j == 0 ? p.a0 - a : p.a[j - 1], im = j == 0 ? 0 : p.b[j - 1];
    for (std::size_t i = 0; i < term.size(); ++i) acc[i] += re * term[i].real() + im * term[i].imag();
  }
  UniPoly u;
  u.c = acc;
  auto roots = u.realRoots();
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < roots.size(); ++i)
    if (i == 0 || roots[i] - roots[i - 1] > 1e-9) ++distinct;
  return distinct;
}

}  // namespace

TEST(Decay, ScheduleValues) {
  auto v = DecaySchedule{0.1, 3}.values(3);
  EXPECT_DOUBLE_EQ(v[0], 0.1);
  EXPECT_NEAR(v[1], 1e-3, 1e-18);
  EXPECT_NEAR(v[2], 1e-9, 1e-24);
  EXPECT_THROW(DecaySchedule({0.1, 1}).values(2), std::invalid_argument);
  EXPECT_THROW(DecaySchedule({1.5, 2}).values(2), std::invalid_argument);
}

TEST(Counting, OneLinearEquation) {
  auto u = Universe::create();
  VarId x = u->add("x", VarKind::phase);
  CountingTask t{{Polynomial::variable(u, x)}, {x}, vec({1e-3}), vec({0}), 1, {}};
  auto r = countPreimages(t);
  EXPECT_EQ(r.count, 1u);
  EXPECT_NEAR(r.roots[0][0], 1e-3, 1e-14);
  EXPECT_TRUE(r.highConfidence);
}

TEST(Counting, NoRootsIsLowOrEmpty) {
  auto u = Universe::create();
  VarId x = u->add("x", VarKind::phase);
  CountingTask t{{parsePolynomial(u, "x^2")}, {x}, vec({-1}), vec({0}), 1, {}};
  auto r = countPreimages(t);
  EXPECT_EQ(r.count, 0u);
  EXPECT_FALSE(r.highConfidence);
}

TEST(Counting, IdealisticExampleHasFourPreimages) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto e = idealisticExample(seed);
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      for (auto* F : {&e.family.F, &e.family.LF}) {
        auto task = compositeTask(e, *F, vec({eps, 0}), 0.5);
        auto r = countPreimages(task);
        EXPECT_EQ(r.count, 4u) << "seed " << seed << " eps " << eps;
        for (double res : r.residuals) EXPECT_LE(res, 1e-10);
        EXPECT_LE(BigInt(static_cast<long>(r.count)), bezoutBound(task.system));
      }
    }
  }
}

TEST(Counting, LinearPartDropsHigherTerms) {
  auto e = idealisticExample(7);
  for (auto& f : e.family.LF) EXPECT_LE(f.totalDegree(), Degree(1));
  EXPECT_EQ(e.family.F[0].totalDegree(), Degree(3));
  // F(0) = 0
  for (auto& f : e.family.F) EXPECT_EQ(f.constantTerm(), 0);
}

TEST(Counting, StableUnderDecayExponent) {
  auto e = idealisticExample(11);
  for (unsigned q : {2u, 3u, 4u}) {
    auto eps = DecaySchedule{1e-2, q}.values(2);
    auto r = countPreimages(compositeTask(e, e.family.F, vec({eps[0], eps[1]}), 0.5));
    EXPECT_EQ(r.count, 4u) << "q = " << q;
  }
}

TEST(Counting, HighConfidenceCountsSurviveRefinement) {
  auto e = idealisticExample(5);
  for (double eps : {1e-2, 1e-3}) {
    NewtonConfig coarse;
    coarse.gridPerAxis = 16;
    NewtonConfig fine = coarse;
    fine.gridPerAxis = 32;
    auto a = countPreimages(compositeTask(e, e.family.F, vec({eps, 0}), 0.5, coarse));
    auto b = countPreimages(compositeTask(e, e.family.F, vec({eps, 0}), 0.5, fine));
    if (a.highConfidence) EXPECT_EQ(a.count, b.count);
  }
}

TEST(Homotopy, IdealisticFamilyIsConstant) {
  auto e = idealisticExample(3);
  auto v = homotopyInvarianceCheck(e, vec({1e-3, 0}), 0.5);
  ASSERT_EQ(v.counts.size(), 11u);
  for (auto c : v.counts) EXPECT_EQ(c, 4u);
  EXPECT_TRUE(v.pass);
  EXPECT_FALSE(v.tStar);
}

TEST(Homotopy, TangencyIsLocalized) {
  auto e = tangencyExample();
  const double eps = 1e-2, r = 0.5;
  auto v = homotopyInvarianceCheck(e, vec({eps, 0}), r);
  EXPECT_FALSE(v.pass);
  ASSERT_TRUE(v.tStar);
  // roots u = +-sqrt(eps / (2t - 1)) enter the ball when 2t - 1 = eps / r^2
  EXPECT_NEAR(*v.tStar, 0.5 * (1 + eps / (r * r)), 1e-3);
  EXPECT_EQ(v.counts.front(), 0u);
  EXPECT_EQ(v.counts.back(), 2u);
}

TEST(Homotopy, LinearFamilyIsTriviallyConstant) {
  auto v = homotopyInvarianceCheck(linearExample(), vec({0.1, -0.05}), 0.5);
  for (auto c : v.counts) EXPECT_EQ(c, 1u);
  EXPECT_TRUE(v.pass);
}

TEST(Rolle, SineOnCircle) {
  TrigPoly s;
  s.a = {0};
  s.b = {1};
  auto r = rolleCount(s.function(), Domain::circle, 0, 1e-3);
  EXPECT_EQ(r.solutions, 2u);
  EXPECT_EQ(r.derivativeSolutions, 2u);
  EXPECT_TRUE(r.holds);
}

TEST(Rolle, IdentityOnSegmentUsesSlack) {
  Function1D g{[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
  auto r = rolleCount(g, Domain::segment, 0.5, 1e-3);
  EXPECT_EQ(r.solutions, 1u);
  EXPECT_EQ(r.derivativeSolutions, 0u);
  EXPECT_EQ(r.slack, 1u);
  EXPECT_TRUE(r.holds);
}

TEST(Rolle, RandomTrigPolynomials) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0, 1);
  int trials = 0, resampled = 0;
  while (trials < 200) {
    TrigPoly p = TrigPoly::random(rng, 6);
    // a between the extremes so that f = a has solutions
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i < 1000; ++i) {
      double v = p(2 * M_PI * i / 1000);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double a = lo + (hi - lo) * unit(rng);
    RolleResult r;
    try {
      r = rolleCount(p.function(), Domain::circle, a, 1e-4);
    } catch (const MorseError&) {
      ++resampled;
      continue;
    }
    ++trials;
    EXPECT_TRUE(r.holds) << "trial " << trials;
    EXPECT_EQ(r.solutions, halfAngleRootCount(p, a)) << "trial " << trials;
    EXPECT_EQ(r.derivativeSolutions, halfAngleRootCount(p.derivative(), 1e-4)) << "trial " << trials;
  }
  EXPECT_LT(resampled, 20);
}

TEST(Rolle, NonMorseIsRejected) {
  Function1D f{[](double x) { return std::pow(x - 0.5, 3); }, [](double x) { return 3 * (x - 0.5) * (x - 0.5); },
               [](double x) { return 6 * (x - 0.5); }};
  EXPECT_THROW(rolleCount(f, Domain::segment, 0, 1e-3), MorseError);
}
