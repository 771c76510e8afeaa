#pragma once
// Catalog of elementary-singularity unfoldings: normal-form fields, Pfaffian
// forms, domains, covering functions and correspondence maps.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "polycyc/exterior.hpp"
#include "polycyc/univariate.hpp"

namespace polycyc {

enum class VertexKind { S0, S, Dc, Dh };

/**
 * @brief Type of an elementary singular point: S0, S_mu^(n:m), Dc_mu, Dh_mu.
 */
struct SingularityType {
  VertexKind kind = VertexKind::S0;
  unsigned mu = 0;
  unsigned n = 1, m = 1;  // resonance n:m, only meaningful for S

  static SingularityType s0() { return {}; }
  static SingularityType saddle(unsigned mu, unsigned n = 1, unsigned m = 1) { return {VertexKind::S, mu, n, m}; }
  static SingularityType dc(unsigned mu) { return {VertexKind::Dc, mu, 1, 1}; }
  static SingularityType dh(unsigned mu) { return {VertexKind::Dh, mu, 1, 1}; }

  bool resonant() const { return kind == VertexKind::S; }

  void validate() const {
    if (kind == VertexKind::S0) {
      if (mu != 0) throw std::invalid_argument("S0 has mu = 0");
      return;
    }
    if (mu == 0) throw std::invalid_argument(label() + ": degenerate types need mu >= 1");
    if (kind == VertexKind::S && (n == 0 || m == 0 || std::gcd(n, m) != 1))
      throw std::invalid_argument("resonance " + std::to_string(n) + ":" + std::to_string(m) + " is not a coprime pair");
  }

  std::string label() const {
    switch (kind) {
      case VertexKind::S0: return "S0";
      case VertexKind::S: return "S" + std::to_string(mu) + "(" + std::to_string(n) + ":" + std::to_string(m) + ")";
      case VertexKind::Dc: return "Dc" + std::to_string(mu);
      case VertexKind::Dh: return "Dh" + std::to_string(mu);
    }
    return "?";
  }

  /// Accepts S0, S<mu>, S<mu>(n:m), Dc<mu>, Dh<mu>.
  static SingularityType parse(std::string_view s) {
    auto num = [&](std::string_view t) -> unsigned {
      if (t.empty() || !std::all_of(t.begin(), t.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        throw std::invalid_argument("bad singularity type '" + std::string(s) + "'");
      return static_cast<unsigned>(std::stoul(std::string(t)));
    };
    SingularityType t;
    if (s == "S0") return t;
    if (s.substr(0, 2) == "Dc") t = dc(num(s.substr(2)));
    else if (s.substr(0, 2) == "Dh") t = dh(num(s.substr(2)));
    else if (!s.empty() && s[0] == 'S') {
      auto open = s.find('(');
      if (open == std::string_view::npos) t = saddle(num(s.substr(1)));
      else {
        auto colon = s.find(':', open), close = s.find(')', open);
        if (colon == std::string_view::npos || close != s.size() - 1)
          throw std::invalid_argument("bad singularity type '" + std::string(s) + "'");
        t = saddle(num(s.substr(1, open - 1)), num(s.substr(open + 1, colon - open - 1)),
                   num(s.substr(colon + 1, close - colon - 1)));
      }
    } else throw std::invalid_argument("bad singularity type '" + std::string(s) + "'");
    t.validate();
    return t;
  }

  friend bool operator==(const SingularityType& a, const SingularityType& b) {
    return a.kind == b.kind && a.mu == b.mu && (a.kind != VertexKind::S || (a.n == b.n && a.m == b.m));
  }
};

/// Placement of the resonance exponent in the auxiliary forms of S_mu.
enum class ResonantConvention {
  table,      // x dz - m z dx, y dw - n w dy (annihilates z = x^m for every m)
  equationP,  // m x dz - z dx, n y dw - w dy (annihilates z = x^m only when m = 1)
};

struct VertexOptions {
  std::string tag;  // suffix for variable names, used when vertices share a universe
  int sign = 1;     // sign of the leading term of P_mu / Q_mu
  ResonantConvention convention = ResonantConvention::table;
};

struct DomainConstraint {
  enum class Relation { positive, nonzero };
  Polynomial expr;
  Relation relation = Relation::positive;
  std::string text;
};

inline constexpr KindSet kFormDegreeKinds{VarKind::phase};
inline constexpr KindSet kRhoDegreeKinds{VarKind::phase, VarKind::size, VarKind::spec};

/**
 * @brief One vertex of the catalog with its symbolic data.
 *
 * lambda holds lambda_0..lambda_mu (a single lambda_0 for S0); c is the
 * localization value of lambda_mu and r the characteristic size.
 */
struct VertexUnfolding {
  SingularityType type;
  VertexOptions options;
  UniversePtr u;
  VarId x = 0, y = 0;
  std::optional<VarId> z, w;
  std::vector<VarId> lambda;
  VarId r = 0, c = 0;
  Polynomial xdot, ydot;
  std::vector<OneForm> forms;
  std::vector<std::string> formLabels;
  std::vector<DomainConstraint> domain;
  Polynomial rho, rhoTilde;
  Polynomial core;  // P_mu(u, lambda) in the variable `coreVar` for S, Q_mu(x, lambda) for D, zero for S0
  VarId coreVar = 0;

  std::vector<VarId> phaseCoords() const {
    std::vector<VarId> v{x, y};
    if (z) v.push_back(*z);
    if (w) v.push_back(*w);
    return v;
  }
};

namespace detail {

inline Polynomial weierstrass(const UniversePtr& u, VarId v, const std::vector<VarId>& lam, unsigned mu) {
  Polynomial V = Polynomial::variable(u, v), acc(u), pw(u, 1);
  for (unsigned i = 0; i < mu; ++i) {
    acc += Polynomial::variable(u, lam[i]) * pw;
    pw = pw * V;
  }
  return acc;
}

}  // namespace detail

/// P_mu(v, lambda) = sign v^mu (1 + lambda_mu v^mu) + W_{mu-1}(v, lambda).
inline Polynomial pmu(const UniversePtr& u, VarId v, const std::vector<VarId>& lam, unsigned mu, int sign = 1) {
  Polynomial V = Polynomial::variable(u, v);
  Polynomial lead = V.pow(mu) * (Polynomial(u, 1) + Polynomial::variable(u, lam[mu]) * V.pow(mu));
  return lead.scaled(sign) + detail::weierstrass(u, v, lam, mu);
}

/// Q_mu(v, lambda) = sign v^{mu+1} (1 + lambda_mu v^mu) + W_{mu-1}(v, lambda).
inline Polynomial qmu(const UniversePtr& u, VarId v, const std::vector<VarId>& lam, unsigned mu, int sign = 1) {
  Polynomial V = Polynomial::variable(u, v);
  Polynomial lead = V.pow(mu + 1) * (Polynomial(u, 1) + Polynomial::variable(u, lam[mu]) * V.pow(mu));
  return lead.scaled(sign) + detail::weierstrass(u, v, lam, mu);
}

inline UniPoly pmuNumeric(unsigned mu, int sign, const std::vector<double>& lam) {
  UniPoly p;
  p.c.assign(2 * mu + 1, 0.0);
  for (unsigned i = 0; i < mu; ++i) p.c[i] += lam[i];
  p.c[mu] += sign;
  p.c[2 * mu] += sign * lam[mu];
  return p;
}

inline UniPoly qmuNumeric(unsigned mu, int sign, const std::vector<double>& lam) {
  UniPoly p;
  p.c.assign(2 * mu + 2, 0.0);
  for (unsigned i = 0; i < mu; ++i) p.c[i] += lam[i];
  p.c[mu + 1] += sign;
  p.c[2 * mu + 1] += sign * lam[mu];
  return p;
}

/**
 * @brief Builds the catalog entry for a singularity type.
 *
 * r and c are symbolic variables (kinds size and spec); numeric work assigns
 * them explicitly.
 */
inline VertexUnfolding buildVertex(const SingularityType& t, const UniversePtr& u, const VertexOptions& opt = {}) {
  t.validate();
  if (opt.sign != 1 && opt.sign != -1) throw std::invalid_argument("leading sign must be +1 or -1");
  VertexUnfolding v;
  v.type = t;
  v.options = opt;
  v.u = u;
  const std::string& g = opt.tag;
  v.x = u->intern("x" + g, VarKind::phase);
  v.y = u->intern("y" + g, VarKind::phase);
  for (unsigned i = 0; i <= t.mu; ++i)
    v.lambda.push_back(u->intern(g.empty() ? "lambda" + std::to_string(i) : "lambda" + g + "_" + std::to_string(i),
                                 VarKind::parameter));
  v.r = u->intern("r", VarKind::size);
  v.c = u->intern("c" + g, VarKind::spec);

  Polynomial X = Polynomial::variable(u, v.x), Y = Polynomial::variable(u, v.y);
  Polynomial R = Polynomial::variable(u, v.r), C = Polynomial::variable(u, v.c);
  auto lamP = [&](unsigned i) { return Polynomial::variable(u, v.lambda[i]); };
  const unsigned mu = t.mu;

  // rho~ covers the lambda cube: factors for lambda_1..lambda_{mu-1} and lambda_mu - c
  v.rhoTilde = Polynomial(u, 1);
  for (unsigned i = 1; i < mu; ++i) v.rhoTilde *= R.pow(2) - lamP(i).pow(2);
  v.rhoTilde *= R.pow(2) - (C - lamP(mu)).pow(2);

  auto positive = [&](Polynomial p, std::string text) {
    v.domain.push_back({std::move(p), DomainConstraint::Relation::positive, std::move(text)});
  };
  auto cube = [&] {
    for (unsigned i = 0; i < mu; ++i)
      positive(R.pow(2) - lamP(i).pow(2), "|" + u->name(v.lambda[i]) + "| < r");
    positive(R.pow(2) - (lamP(mu) - C).pow(2), "|" + u->name(v.lambda[mu]) + " - " + u->name(v.c) + "| < r");
  };

  switch (t.kind) {
    case VertexKind::S0: {
      v.xdot = X;
      v.ydot = -(lamP(0) * Y);
      OneForm w(u);
      w.set(v.y, X);
      w.set(v.x, -(lamP(0) * Y));
      v.forms = {w};
      v.formLabels = {"x dy - lambda y dx"};
      positive(X, "x > 0");
      positive(Y, "y > 0");
      positive(R - X, "x < r");
      positive(R - Y, "y < r");
      cube();
      v.rho = X * Y * (R - X) * (R - Y) * v.rhoTilde;
      v.core = Polynomial(u);
      break;
    }
    case VertexKind::S: {
      v.z = u->intern("z" + g, VarKind::phase);
      v.w = u->intern("w" + g, VarKind::phase);
      Polynomial Z = Polynomial::variable(u, *v.z), W = Polynomial::variable(u, *v.w);
      const Rational mq(t.m), nq(t.n);
      Polynomial Pz = pmu(u, *v.z, v.lambda, mu, opt.sign), Pw = pmu(u, *v.w, v.lambda, mu, opt.sign);
      Polynomial U = X.pow(t.m) * Y.pow(t.n);
      v.core = Pz;
      v.coreVar = *v.z;
      v.xdot = X * (Polynomial(u, Rational(t.n, t.m)) + Pz.substitute(*v.z, U));
      v.ydot = -Y;
      OneForm w1(u), w2(u), w3(u);
      if (opt.convention == ResonantConvention::table) {
        w1.set(*v.z, X);
        w1.set(v.x, -(mq * Z));
        w2.set(*v.w, Y);
        w2.set(v.y, -(nq * W));
        v.formLabels = {"x dz - m z dx", "y dw - n w dy"};
      } else {
        w1.set(*v.z, mq * X);
        w1.set(v.x, -Z);
        w2.set(*v.w, nq * Y);
        w2.set(v.y, -W);
        v.formLabels = {"m x dz - z dx", "n y dw - w dy"};
      }
      w3.set(v.x, mq * Pw * Y * Pz);
      w3.set(v.y, -((mq * Pw + nq) * X * Pz.pow(2)));
      v.formLabels.push_back("m P(w) y P(z) dx - (m P(w) + n) x P(z)^2 dy");
      v.forms = {w1, w2, w3};
      for (auto [p, nm] : {std::pair{X, "x"}, {Y, "y"}, {Z, "z"}, {W, "w"}}) {
        positive(p, std::string(nm) + " > 0");
        positive(R - p, std::string(nm) + " < r");
      }
      cube();
      v.domain.push_back({Pz, DomainConstraint::Relation::nonzero, "P_mu(z, lambda) != 0"});
      v.rho = X * Y * Z * W * (R - X) * (R - Y) * (R - Z) * (R - W) * Pz.pow(2) * v.rhoTilde;
      break;
    }
    case VertexKind::Dc: {
      Polynomial Q = qmu(u, v.x, v.lambda, mu, opt.sign);
      v.core = Q;
      v.coreVar = v.x;
      v.xdot = Q;
      v.ydot = -Y;
      OneForm w(u);
      w.set(v.y, X * X);
      w.set(v.x, -(X * Y));
      v.forms = {w};
      v.formLabels = {"x (x dy - y dx)"};
      positive(R.pow(2) - X.pow(2), "|x| < r");
      positive(R.pow(2) - Y.pow(2), "|y| < r");
      v.domain.push_back({X, DomainConstraint::Relation::nonzero, "x != 0"});
      cube();
      v.rho = (R.pow(2) - X.pow(2)) * (R.pow(2) - Y.pow(2)) * X.pow(2) * v.rhoTilde;
      break;
    }
    case VertexKind::Dh: {
      Polynomial Q = qmu(u, v.x, v.lambda, mu, opt.sign);
      v.core = Q;
      v.coreVar = v.x;
      v.xdot = Q;
      v.ydot = -Y;
      OneForm w(u);
      w.set(v.y, Q);
      w.set(v.x, -Y);
      v.forms = {w};
      v.formLabels = {"Q_mu(x, lambda) dy - y dx"};
      positive(Y, "y > 0");
      positive(R - Y, "y < r");
      positive(R.pow(2) - X.pow(2), "|x| < r");
      cube();
      positive(Q, "Q_mu(., lambda) > 0 on [x, 1]");
      v.rho = Y * (R - Y) * (R.pow(2) - X.pow(2)) * Q * v.rhoTilde;
      break;
    }
  }
  return v;
}

inline VertexUnfolding buildVertex(const SingularityType& t, const VertexOptions& opt = {}) {
  return buildVertex(t, Universe::create(), opt);
}

/// Degrees of a vertex against the closed-form notes.
struct VertexDegrees {
  Degree omega, rho;
  std::int64_t expectedOmega = 0, expectedRho = 0;
  bool omegaMatches = false, rhoMatches = false;
  std::string note;
};

inline VertexDegrees vertexDegrees(const VertexUnfolding& v) {
  VertexDegrees d;
  for (auto& f : v.forms) d.omega = Degree::max(d.omega, f.degree(kFormDegreeKinds));
  d.rho = v.rho.totalDegree(kRhoDegreeKinds);
  const std::int64_t mu = v.type.mu;
  switch (v.type.kind) {
    case VertexKind::S0:
      d.expectedOmega = 1;
      d.expectedRho = 4 * mu + 4;
      d.note = "closed form 4mu+4 gives " + std::to_string(d.expectedRho) + " at mu = 0; constructed rho has degree " +
               d.rho.str() + " with the lambda-cube factor counted";
      break;
    case VertexKind::S:
      d.expectedOmega = 6 * mu + 1;
      d.expectedRho = 6 * mu + 8;
      break;
    case VertexKind::Dc:
      d.expectedOmega = 2;
      d.expectedRho = 2 * mu + 6;
      break;
    case VertexKind::Dh:
      d.expectedOmega = 2 * mu + 1;
      d.expectedRho = 4 * mu + 5;
      break;
  }
  d.omegaMatches = d.omega == Degree(d.expectedOmega);
  d.rhoMatches = d.rho == Degree(d.expectedRho);
  return d;
}

// ---------------------------------------------------------------------------
// Correspondence maps

struct CorrespondenceDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

namespace detail {

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  // Boost's recursion leaves the error estimate in reference-interval units, so
  // short intervals never meet the tolerance; integrate on [-1, 1] instead.
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  auto g = [&](double t) { return half * f(mid + half * t); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, -1.0, 1.0, 15, 1e-13);
}

inline void checkLambda(const VertexUnfolding& v, const std::vector<double>& lam) {
  if (lam.size() != v.lambda.size())
    throw std::invalid_argument("expected " + std::to_string(v.lambda.size()) + " lambda components, got " +
                                std::to_string(lam.size()));
}

/// m log y + int_{x^m}^{y^n} du / (u P(u)) as a function of t = log y.
struct ResonantEquation {
  UniPoly P;
  double m, n, s0;  // s0 = m log x
  double integral(double t) const {
    return integrate([&](double s) { return 1.0 / P(std::exp(s)); }, s0, n * t);
  }
  double value(double t) const { return m * t + integral(t); }
  double slope(double t) const { return m + n / P(std::exp(n * t)); }
};

/// Evaluates the resonant equation by integrating from the nearest point already visited.
class IncrementalResonant {
 public:
  explicit IncrementalResonant(const ResonantEquation& eq) : eq_(eq) { known_.emplace(eq.s0 / eq.n, 0.0); }
  double value(double t) {
    auto hi = known_.lower_bound(t);
    auto near = hi;
    if (hi == known_.end() || (hi != known_.begin() && t - std::prev(hi)->first < hi->first - t)) near = std::prev(hi);
    double I = near->second +
               integrate([&](double s) { return 1.0 / eq_.P(std::exp(s)); }, eq_.n * near->first, eq_.n * t);
    known_.emplace(t, I);
    return eq_.m * t + I;
  }

 private:
  const ResonantEquation& eq_;
  std::map<double, double> known_;  // t -> integral from s0 to n t
};

inline double solveResonant(const UniPoly& P, unsigned mi, unsigned ni, double x) {
  if (!(x > 0)) throw CorrespondenceDomainError("resonant saddle correspondence needs x > 0");
  ResonantEquation eq{P, double(mi), double(ni), mi * std::log(x)};
  const double u0 = std::exp(eq.s0);
  if (P(u0) == 0) throw CorrespondenceDomainError("P_mu vanishes at z = x^m");
  // admissible range of u = y^n: the root-free interval of P around x^m
  double uLo = 0, uHi = std::numeric_limits<double>::infinity();
  for (double root : P.realRoots()) {
    if (root > 0 && root < u0) uLo = std::max(uLo, root);
    if (root > u0) uHi = std::min(uHi, root);
  }
  const double pad = 1e-9;
  double tLo = uLo > 0 ? (std::log(uLo) + pad) / eq.n : eq.s0 / eq.n - 80.0;
  double tHi = std::isfinite(uHi) ? (std::log(uHi) - pad) / eq.n : eq.s0 / eq.n + 80.0;
  IncrementalResonant G(eq);
  // frozen-coefficient guess: P = P(x^m) gives log y = m log x / (m P + n)
  double pu = P(u0);
  double t0 = eq.s0 / eq.n;
  if (pu > 0) t0 = std::clamp(eq.s0 / (eq.m * pu + eq.n), tLo, tHi);
  double g0 = G.value(t0);
  if (g0 == 0) return std::exp(t0);
  double a = t0, ga = g0, b = t0;
  bool found = false;
  for (double step = 1e-3; step < 200 && !found; step *= 2) {
    for (int dir : {+1, -1}) {
      double t = t0 + dir * step;
      if (t <= tLo || t >= tHi) t = dir > 0 ? tHi : tLo;
      double gt = G.value(t);
      if (std::signbit(gt) != std::signbit(g0)) {
        a = dir > 0 ? t0 : t;
        b = dir > 0 ? t : t0;
        ga = dir > 0 ? g0 : gt;
        found = true;
        break;
      }
    }
  }
  if (!found) throw CorrespondenceDomainError("resonant saddle correspondence: no admissible solution y");
  double t = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    double gt = G.value(t);
    if (gt == 0) break;
    if (std::signbit(gt) == std::signbit(ga)) { a = t; ga = gt; }
    else b = t;
    double d = eq.slope(t), next = t - gt / d;
    if (!(next > a && next < b) || !std::isfinite(next)) next = 0.5 * (a + b);
    const double eps = 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t));
    if (std::fabs(next - t) <= eps || b - a <= eps) {
      t = next;
      break;
    }
    t = next;
  }
  return std::exp(t);
}

}  // namespace detail

/**
 * @brief y = Delta(x, lambda) for a vertex; lam holds lambda_0..lambda_mu.
 *
 * S0 and Dc are closed form (Dc up to one quadrature for C); S and Dh solve
 * their implicit equations by quadrature plus safeguarded Newton.
 */
inline double evaluateCorrespondence(const VertexUnfolding& v, double x, const std::vector<double>& lam) {
  detail::checkLambda(v, lam);
  const unsigned mu = v.type.mu;
  const int sign = v.options.sign;
  switch (v.type.kind) {
    case VertexKind::S0:
      if (!(x > 0)) throw CorrespondenceDomainError("S0 correspondence needs x > 0");
      return std::pow(x, lam[0]);
    case VertexKind::S:
      return detail::solveResonant(pmuNumeric(mu, sign, lam), v.type.m, v.type.n, x);
    case VertexKind::Dc: {
      UniPoly Q = qmuNumeric(mu, sign, lam);
      if (!Q.nonvanishingOn(-1, 1)) throw CorrespondenceDomainError("Q_mu vanishes on [-1, 1]");
      return detail::integrate([&](double s) { return 1.0 / Q(s); }, -1, 1) * x;
    }
    case VertexKind::Dh: {
      UniPoly Q = qmuNumeric(mu, sign, lam);
      if (!Q.nonvanishingOn(x, 1) || Q(1) < 0) throw CorrespondenceDomainError("Q_mu is not positive on [x, 1]");
      return std::exp(-detail::integrate([&](double s) { return 1.0 / Q(s); }, x, 1));
    }
  }
  return 0;
}

/// Residual of the implicit equation defining Delta at (x, y).
inline double correspondenceResidual(const VertexUnfolding& v, double x, double y, const std::vector<double>& lam) {
  detail::checkLambda(v, lam);
  const unsigned mu = v.type.mu;
  switch (v.type.kind) {
    case VertexKind::S0: return y - std::pow(x, lam[0]);
    case VertexKind::S: {
      detail::ResonantEquation eq{pmuNumeric(mu, v.options.sign, lam), double(v.type.m), double(v.type.n),
                                  v.type.m * std::log(x)};
      return eq.value(std::log(y));
    }
    case VertexKind::Dc: {
      UniPoly Q = qmuNumeric(mu, v.options.sign, lam);
      return y - detail::integrate([&](double s) { return 1.0 / Q(s); }, -1, 1) * x;
    }
    case VertexKind::Dh: {
      UniPoly Q = qmuNumeric(mu, v.options.sign, lam);
      return std::log(y) + detail::integrate([&](double s) { return 1.0 / Q(s); }, x, 1);
    }
  }
  return 0;
}

/// Numeric point (x, y[, z, w], lambda, r, c) for form evaluation.
inline std::unordered_map<VarId, double> vertexPoint(const VertexUnfolding& v, double x, double y,
                                                     const std::vector<double>& lam, double r = 1, double c = 0) {
  detail::checkLambda(v, lam);
  std::unordered_map<VarId, double> at{{v.x, x}, {v.y, y}, {v.r, r}, {v.c, c}};
  if (v.z) at[*v.z] = std::pow(x, v.type.m);
  if (v.w) at[*v.w] = std::pow(y, v.type.n);
  for (std::size_t i = 0; i < lam.size(); ++i) at[v.lambda[i]] = lam[i];
  return at;
}

/// Relative residual |w(t)| / sum |w_v t_v| of a form at a tangent vector.
inline double formResidual(const OneForm& w, const std::unordered_map<VarId, double>& at,
                           const std::unordered_map<VarId, double>& tangent) {
  double s = 0, scale = 0;
  for (auto& [var, coef] : w.coefficients()) {
    auto it = tangent.find(var);
    double tv = it == tangent.end() ? 0.0 : it->second;
    double term = coef.evaluate(at) * tv;
    s += term;
    scale += std::fabs(term);
  }
  return scale == 0 ? std::fabs(s) : std::fabs(s) / scale;
}

struct SeparatingReport {
  std::size_t samples = 0;
  std::vector<double> xs, residuals;
  double maxResidual = 0;
  double tolerance = 1e-8;
  bool pass = false;
};

/// Sample abscissae inside the domain of the vertex for size r.
inline std::vector<double> sampleAbscissae(const VertexUnfolding& v, std::size_t samples, double r) {
  std::vector<double> xs;
  double span = std::min(r, 1.0);
  for (std::size_t i = 0; i < samples; ++i) {
    double f = samples == 1 ? 0.5 : 0.1 + 0.8 * static_cast<double>(i) / static_cast<double>(samples - 1);
    double x = f * span;
    if (v.type.kind == VertexKind::Dc && i % 2 == 1) x = -x;
    xs.push_back(x);
  }
  return xs;
}

/**
 * @brief Checks that every form annihilates the tangent of the graph of Delta.
 *
 * The slope of Delta is analytic for S0 and Dc and a Richardson-extrapolated
 * central difference otherwise.
 */
inline SeparatingReport checkSeparatingSolution(const VertexUnfolding& v, std::size_t samples,
                                                const std::vector<double>& lam, double r = 1, double c = 0) {
  SeparatingReport rep;
  rep.samples = samples;
  for (double x : sampleAbscissae(v, samples, r)) {
    double y = evaluateCorrespondence(v, x, lam);
    double slope;
    if (v.type.kind == VertexKind::S0) slope = lam[0] * std::pow(x, lam[0] - 1);
    else if (v.type.kind == VertexKind::Dc) slope = y / x;
    else {
      double h = 1e-3 * std::fabs(x);
      auto cd = [&](double hh) {
        return (evaluateCorrespondence(v, x + hh, lam) - evaluateCorrespondence(v, x - hh, lam)) / (2 * hh);
      };
      slope = (4 * cd(h / 2) - cd(h)) / 3;
    }
    auto at = vertexPoint(v, x, y, lam, r, c);
    std::unordered_map<VarId, double> tangent{{v.x, 1.0}, {v.y, slope}};
    if (v.z) tangent[*v.z] = v.type.m * std::pow(x, v.type.m - 1.0);
    if (v.w) tangent[*v.w] = v.type.n * std::pow(y, v.type.n - 1.0) * slope;
    double worst = 0;
    for (auto& f : v.forms) worst = std::max(worst, formResidual(f, at, tangent));
    rep.xs.push_back(x);
    rep.residuals.push_back(worst);
    rep.maxResidual = std::max(rep.maxResidual, worst);
  }
  rep.pass = rep.maxResidual < rep.tolerance;
  return rep;
}

/// Sampled strict monotonicity of x -> Delta(x, lambda) on the positive half of the domain.
inline bool correspondenceMonotone(const VertexUnfolding& v, std::size_t samples, const std::vector<double>& lam,
                                   double r = 1) {
  std::vector<double> ys;
  double span = std::min(r, 1.0);
  for (std::size_t i = 0; i < samples; ++i) {
    double x = span * (0.05 + 0.9 * static_cast<double>(i) / static_cast<double>(samples - 1));
    ys.push_back(evaluateCorrespondence(v, x, lam));
  }
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < ys.size(); ++i) {
    inc = inc && ys[i] > ys[i - 1];
    dec = dec && ys[i] < ys[i - 1];
  }
  return inc || dec;
}

/// Parameter samples lying inside the domain of every correspondence map of the vertex.
inline std::vector<std::vector<double>> defaultParameterSamples(const VertexUnfolding& v) {
  const unsigned mu = v.type.mu;
  std::vector<std::vector<double>> out;
  const double base0[3] = {0.3, 0.55, 0.8};
  for (int s = 0; s < 3; ++s) {
    std::vector<double> lam(mu + 1, 0.0);
    if (v.type.kind == VertexKind::S0) lam[0] = 0.5 + 0.75 * s;
    else {
      lam[0] = base0[s];
      // keep the constant term dominant so the core polynomial stays positive on the sampled range
      if (v.type.kind == VertexKind::Dc && mu % 2 == 0) lam[0] += 1.2;
      for (unsigned i = 1; i < mu; ++i) lam[i] = 0.02 * ((i + s) % 3);
      lam[mu] = mu == 0 ? lam[0] : 0.05 * (s + 1);
    }
    out.push_back(std::move(lam));
  }
  return out;
}

/// Size used with the default parameter samples.
inline double defaultSize(const VertexUnfolding& v) {
  return v.type.kind == VertexKind::Dc && v.type.mu % 2 == 0 ? 2.0 : 1.0;
}

}  // namespace polycyc
