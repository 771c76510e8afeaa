#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polycyc/exterior.hpp"
#include "support/random_poly.hpp"

using namespace polycyc;
using testsupport::randomPoly;

namespace {

struct Base {
  UniversePtr u = Universe::create();
  VarId x = u->add("x", VarKind::phase);
  VarId y = u->add("y", VarKind::phase);
  VarId lam = u->add("lambda", VarKind::parameter);
  Polynomial X = Polynomial::variable(u, x), Y = Polynomial::variable(u, y), L = Polynomial::variable(u, lam);
};

OneForm saddleForm(const Base& b) {
  OneForm w(b.u);
  w.set(b.y, b.X);
  w.set(b.x, -(b.L * b.Y));
  return w;
}

double det3(const std::array<std::array<double, 3>, 3>& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

}  // namespace

TEST(Exterior, AsteriskOfVolumeForm) {
  Base b;
  EXPECT_EQ(wedgeAsterisk({OneForm::differential(b.u, b.x), OneForm::differential(b.u, b.y)}, {b.x, b.y}),
            Polynomial(b.u, 1));
}

TEST(Exterior, AsteriskSaddleWedgeDx) {
  Base b;
  EXPECT_EQ(wedgeAsterisk({saddleForm(b), OneForm::differential(b.u, b.x)}, {b.x, b.y}), -b.X);
}

TEST(Exterior, AsteriskDimensionMismatch) {
  Base b;
  EXPECT_THROW(wedgeAsterisk({saddleForm(b)}, {b.x, b.y}), std::invalid_argument);
}

TEST(Exterior, ExteriorDerivativeExamples) {
  Base b;
  JetSpace js(b.u, {b.x, b.y}, CartesianType{{"f"}, {{b.y}}}, 3);
  EXPECT_TRUE(js.exteriorDerivative(Polynomial(b.u, 5)).isZero());
  OneForm d = js.exteriorDerivative(b.X.pow(2) * b.Y);
  EXPECT_EQ(d.coeff(b.x), 2 * b.X * b.Y);
  EXPECT_EQ(d.coeff(b.y), b.X.pow(2));
  EXPECT_EQ(d.str({b.x, b.y}), "(2*x*y) dx + (x^2) dy");
}

TEST(Exterior, JetDifferentiateFunctionalEquation) {
  UniversePtr u = Universe::create();
  VarId x2 = u->add("x2", VarKind::phase), y1 = u->add("y1", VarKind::phase), x3 = u->add("x3", VarKind::phase);
  VarId e1 = u->add("e1", VarKind::parameter);
  JetSpace js(u, {x2, y1, x3, e1}, CartesianType{{"f1"}, {{y1, e1}}}, 4);
  Polynomial F = Polynomial::variable(u, x2) - js.value(0);
  EXPECT_EQ(js.differentiate(F, y1), -Polynomial::variable(u, js.jet(0, {{y1, 1}})));
  EXPECT_TRUE(js.differentiate(js.value(0), x3).isZero());
  OneForm dF = js.exteriorDerivative(F);
  EXPECT_EQ(dF.coeff(x2), Polynomial(u, 1));
  EXPECT_EQ(dF.coeff(y1), -Polynomial::variable(u, js.jet(0, {{y1, 1}})));
  EXPECT_EQ(dF.coeff(e1), -Polynomial::variable(u, js.jet(0, {{e1, 1}})));
  EXPECT_TRUE(dF.coeff(x3).isZero());
  EXPECT_EQ(u->name(js.jet(0, {{y1, 2}, {e1, 1}})), "f1[y1^2*e1]");
}

TEST(Exterior, JetCapExceededNamesSymbol) {
  Base b;
  JetSpace js(b.u, {b.x, b.y}, CartesianType{{"g"}, {{b.y}}}, 1);
  Polynomial d1 = js.differentiate(js.value(0), b.y);
  try {
    js.differentiate(d1, b.y);
    FAIL() << "expected JetOrderExceeded";
  } catch (const JetOrderExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("g"), std::string::npos);
  }
}

TEST(Exterior, JetsOnlyForBaseCoordinates) {
  Base b;
  VarId r = b.u->add("r", VarKind::size);
  OneForm w(b.u);
  EXPECT_THROW(w.set(r, Polynomial(b.u, 1)), std::invalid_argument);
  EXPECT_THROW(JetSpace(b.u, {b.x, r}, CartesianType{{"f"}, {{b.x}}}, 2), std::invalid_argument);
  EXPECT_THROW(JetSpace(b.u, {b.x}, CartesianType{{"f"}, {{}}}, 2), std::invalid_argument);
}

TEST(Exterior, SecondJetsMatchFiniteDifferences) {
  UniversePtr u = Universe::create();
  VarId y = u->add("y", VarKind::phase), e = u->add("e", VarKind::parameter);
  JetSpace js(u, {y, e}, CartesianType{{"f"}, {{y, e}}}, 3);
  Polynomial f = parsePolynomial(u, "y^3*e - 2*y*e^2 + y^2 + 3*e", VarKind::phase, true);
  auto fnum = [&](double yv, double ev) { return f.evaluate(std::unordered_map<VarId, double>{{y, yv}, {e, ev}}); };
  Polynomial s = js.differentiate(js.differentiate(js.value(0), y), e);
  double yv = 0.7, ev = -0.3, h = 1e-5;
  double sym = js.instantiate(s, {f}).evaluate(std::unordered_map<VarId, double>{{y, yv}, {e, ev}});
  double fd = (fnum(yv + h, ev + h) - fnum(yv + h, ev - h) - fnum(yv - h, ev + h) + fnum(yv - h, ev - h)) / (4 * h * h);
  EXPECT_NEAR(sym, fd, 1e-6 * std::max(1.0, std::fabs(sym)));
  Polynomial s2 = js.differentiate(js.differentiate(js.value(0), y), y);
  double sym2 = js.instantiate(s2, {f}).evaluate(std::unordered_map<VarId, double>{{y, yv}, {e, ev}});
  double fd2 = (fnum(yv + h, ev) - 2 * fnum(yv, ev) + fnum(yv - h, ev)) / (h * h);
  EXPECT_NEAR(sym2, fd2, 1e-4 * std::max(1.0, std::fabs(sym2)));
}

TEST(Exterior, ContactFunctionNumericOracle) {
  Base b;
  JetSpace js(b.u, {b.x, b.y, b.lam}, CartesianType{{"f"}, {{b.y}}}, 2);
  OneForm w = saddleForm(b);
  Polynomial F = b.X - js.value(0);
  OneForm dF = js.exteriorDerivative(F);
  // third slot closes the 3-dim base
  Polynomial c = wedgeAsterisk({w, dF, OneForm::differential(b.u, b.lam)}, {b.x, b.y, b.lam});
  Polynomial f = b.Y.pow(2);
  double sym = js.instantiate(c, {f}).evaluate(std::unordered_map<VarId, double>{{b.x, 1.0}, {b.y, 1.0}, {b.lam, 1.0}});
  // coefficients at (1,1,1): w = -dx + dy, dF = dx - 2 dy, dlam
  std::array<std::array<double, 3>, 3> m{{{-1.0, 1.0, 0.0}, {1.0, -2.0, 0.0}, {0.0, 0.0, 1.0}}};
  EXPECT_NEAR(sym, det3(m), 1e-12);
}

TEST(Exterior, AsteriskAlternatingAndLinear) {
  UniversePtr u = Universe::create();
  std::vector<VarId> xs;
  for (int i = 0; i < 4; ++i) xs.push_back(u->add("x" + std::to_string(i), VarKind::phase));
  std::mt19937_64 rng(21);
  auto randomForm = [&] {
    OneForm f(u);
    for (VarId v : xs) f.set(v, randomPoly(rng, u, xs, 2, 2));
    return f;
  };
  for (int t = 0; t < 10; ++t) {
    std::vector<OneForm> fs;
    for (int i = 0; i < 4; ++i) fs.push_back(randomForm());
    Polynomial base = wedgeAsterisk(fs, xs);
    for (int i = 0; i + 1 < 4; ++i) {
      auto sw = fs;
      std::swap(sw[i], sw[i + 1]);
      EXPECT_EQ(wedgeAsterisk(sw, xs), -base);
    }
    OneForm g = randomForm();
    auto sum = fs, other = fs;
    sum[2] = fs[2] + g;
    other[2] = g;
    EXPECT_EQ(wedgeAsterisk(sum, xs), base + wedgeAsterisk(other, xs));
    Polynomial s = randomPoly(rng, u, xs, 1, 2);
    auto sc = fs;
    sc[1] = fs[1].scaled(s);
    EXPECT_EQ(wedgeAsterisk(sc, xs), base * s);
  }
}

TEST(Exterior, JetDerivativesCommute) {
  UniversePtr u = Universe::create();
  VarId a = u->add("a", VarKind::phase), b = u->add("b", VarKind::phase), c = u->add("c", VarKind::parameter);
  JetSpace js(u, {a, b, c}, CartesianType{{"f", "g"}, {{a, c}, {a, b}}}, 4);
  std::mt19937_64 rng(22);
  std::vector<VarId> pool{a, b, c, js.jet(0, {}), js.jet(1, {}), js.jet(0, {{a, 1}}), js.jet(1, {{b, 1}})};
  for (int t = 0; t < 20; ++t) {
    Polynomial p = randomPoly(rng, u, pool, 3, 4);
    for (VarId v : {a, b, c})
      for (VarId w : {a, b, c}) EXPECT_EQ(js.differentiate(js.differentiate(p, v), w), js.differentiate(js.differentiate(p, w), v));
  }
}

TEST(Exterior, InstantiationRoundTrip) {
  UniversePtr u = Universe::create();
  VarId a = u->add("a", VarKind::phase), b = u->add("b", VarKind::phase);
  JetSpace js(u, {a, b}, CartesianType{{"f"}, {{a, b}}}, 3);
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    Polynomial f = randomPoly(rng, u, {a, b}, 3, 4);
    Polynomial expr = randomPoly(rng, u, {a, b, js.jet(0, {})}, 3, 4);
    for (VarId v : {a, b}) {
      Polynomial viaJets = js.instantiate(js.differentiate(expr, v), {f});
      Polynomial direct = js.instantiate(expr, {f}).differentiate(v);
      EXPECT_EQ(viaJets, direct);
    }
  }
}
