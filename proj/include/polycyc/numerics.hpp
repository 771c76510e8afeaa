#pragma once
// Numerical preimage counting, homotopy invariance of counts, Rolle counts.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <random>

#include "polycyc/parallel.hpp"
#include "polycyc/polyring.hpp"
#include "polycyc/strata.hpp"

namespace polycyc {

/// eps_1 given, eps_{i+1} = eps_i^q.
struct DecaySchedule {
  double eps1 = 1e-2;
  unsigned q = 2;
  std::vector<double> values(std::size_t n) const {
    if (q < 2) throw std::invalid_argument("DecaySchedule: q must be at least 2");
    if (!(eps1 > 0 && eps1 < 1)) throw std::invalid_argument("DecaySchedule: eps1 must lie in (0, 1)");
    std::vector<double> v;
    double e = eps1;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(e);
      e = std::pow(e, static_cast<double>(q));
    }
    return v;
  }
};

struct NewtonConfig {
  unsigned gridPerAxis = 24;
  unsigned maxIter = 80;
  double tol = 1e-10;          // step size at convergence
  double residualTol = 1e-10;  // |g| at convergence
  double escapeFactor = 4;     // seed abandoned beyond escapeFactor * radius
  double dedupFactor = 10;     // roots closer than dedupFactor * tol are merged
};

struct CountingTask {
  std::vector<Polynomial> system;  // square in vars
  std::vector<VarId> vars;
  Eigen::VectorXd target;          // solve system = target
  Eigen::VectorXd center;
  double radius = 1;
  NewtonConfig newton;
};

struct CountResult {
  std::size_t count = 0;
  std::vector<Eigen::VectorXd> roots;
  std::vector<double> residuals;
  std::vector<double> minSingular;  // smallest singular value of the Jacobian at each root
  std::vector<std::size_t> hits;    // seeds converging to each root
  std::size_t seeds = 0, converged = 0, escaped = 0, stalled = 0;
  bool highConfidence = false;
  std::string confidence;
};

/**
 * @brief Grid-seeded damped Newton on the square system; converged roots in
 * the open ball are deduplicated. The count is high-confidence when no seed
 * stalled and every root was reached from at least two seeds.
 */
inline CountResult countPreimages(const CountingTask& task) {
  const std::size_t n = task.vars.size();
  if (task.system.size() != n) throw std::invalid_argument("countPreimages: system is not square");
  if (static_cast<std::size_t>(task.target.size()) != n || static_cast<std::size_t>(task.center.size()) != n)
    throw std::invalid_argument("countPreimages: target or center has the wrong length");
  if (!(task.radius > 0)) throw std::invalid_argument("countPreimages: radius must be positive");
  const auto& cfg = task.newton;
  CompiledMap G(task.system, task.vars);

  std::vector<Eigen::VectorXd> seeds;
  {
    std::vector<unsigned> idx(n, 0);
    while (true) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        z[static_cast<Eigen::Index>(i)] = task.center[static_cast<Eigen::Index>(i)] - task.radius + 2 * task.radius * (idx[i] + 0.5) / cfg.gridPerAxis;
      if ((z - task.center).norm() < task.radius) seeds.push_back(z);
      std::size_t i = 0;
      while (i < n && ++idx[i] == cfg.gridPerAxis) idx[i++] = 0;
      if (i == n) break;
    }
  }

  enum class Outcome { converged, escaped, stalled };
  std::vector<Outcome> outcome(seeds.size());
  std::vector<Eigen::VectorXd> finals(seeds.size());
  parallelFor(seeds.size(), [&](std::size_t s) {
    Eigen::VectorXd z = seeds[s];
    Eigen::VectorXd g = G.value(z) - task.target;
    Outcome o = Outcome::stalled;
    for (unsigned it = 0; it < cfg.maxIter; ++it) {
      Eigen::VectorXd step = G.jacobian(z).completeOrthogonalDecomposition().solve(-g);
      double alpha = 1;
      Eigen::VectorXd zn = z + step, gn = G.value(zn) - task.target;
      for (int bt = 0; bt < 30 && !(gn.norm() < g.norm()) && g.norm() > 0; ++bt) {
        alpha *= 0.5;
        zn = z + alpha * step;
        gn = G.value(zn) - task.target;
      }
      const double moved = (zn - z).norm();
      z = zn;
      g = gn;
      if (!z.allFinite() || (z - task.center).norm() > cfg.escapeFactor * task.radius) {
        o = Outcome::escaped;
        break;
      }
      if (g.norm() <= cfg.residualTol && moved <= cfg.tol * (1 + z.norm())) {
        o = Outcome::converged;
        break;
      }
    }
    if (o == Outcome::stalled && g.norm() <= cfg.residualTol) o = Outcome::converged;
    outcome[s] = o;
    finals[s] = z;
  });

  CountResult r;
  r.seeds = seeds.size();
  const double dedup = cfg.dedupFactor * cfg.tol;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    if (outcome[s] == Outcome::escaped) {
      ++r.escaped;
      continue;
    }
    if (outcome[s] == Outcome::stalled) {
      ++r.stalled;
      continue;
    }
    ++r.converged;
    const Eigen::VectorXd& z = finals[s];
    if ((z - task.center).norm() >= task.radius) continue;
    bool found = false;
    for (std::size_t i = 0; i < r.roots.size() && !found; ++i)
      if ((r.roots[i] - z).norm() <= std::max(dedup, 1e-7 * (1 + z.norm()))) {
        ++r.hits[i];
        found = true;
      }
    if (!found) {
      r.roots.push_back(z);
      r.hits.push_back(1);
      r.residuals.push_back((G.value(z) - task.target).norm());
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(G.jacobian(z));
      r.minSingular.push_back(svd.singularValues()[svd.singularValues().size() - 1]);
    }
  }
  r.count = r.roots.size();
  r.highConfidence = r.converged > 0 && r.stalled == 0 &&
                     std::all_of(r.hits.begin(), r.hits.end(), [](std::size_t h) { return h >= 2; });
  r.confidence = r.converged == 0 ? "low" : r.highConfidence ? "high" : "partial";
  return r;
}

/// Product of total degrees of a square polynomial system.
inline BigInt bezoutBound(const std::vector<Polynomial>& system) {
  BigInt b = 1;
  for (auto& p : system) {
    Degree d = p.totalDegree();
    if (!d.isNegInf() && d.value() > 0) b *= BigInt(static_cast<long>(d.value()));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Idealistic example and homotopies

/// Substitutes the components of F for the coordinates xyz in every polynomial of P.
inline std::vector<Polynomial> compose(const std::vector<Polynomial>& P, const std::vector<VarId>& xyz, const std::vector<Polynomial>& F) {
  if (xyz.size() != F.size()) throw std::invalid_argument("compose: F must have one component per coordinate");
  std::unordered_map<VarId, Polynomial> s;
  for (std::size_t i = 0; i < xyz.size(); ++i) s.emplace(xyz[i], F[i]);
  std::vector<Polynomial> out;
  for (auto& p : P) out.push_back(p.substitute(s));
  return out;
}

/// Homogeneous parts of degree <= 1 (F(0) = 0 is assumed by callers).
inline Polynomial linearPart(const Polynomial& p) {
  std::vector<Polynomial::Term> ts;
  for (auto& [m, c] : p.terms())
    if (m.degree() <= 1) ts.emplace_back(m, c);
  return Polynomial::fromTerms(p.universe(), std::move(ts));
}

/// F_t = t F + (1 - t) L_F; F_0 = L_F and F_1 = F exactly.
struct HomotopyFamily {
  std::vector<Polynomial> F, LF;
  std::vector<Polynomial> at(const Rational& t) const {
    std::vector<Polynomial> out;
    for (std::size_t i = 0; i < F.size(); ++i) out.push_back(F[i].scaled(t) + LF[i].scaled(Rational(1) - t));
    return out;
  }
};

/// A map R^2 -> R^3 composed with P: R^3 -> R^2, counted on a ball in the source.
struct CompositeExample {
  UniversePtr u;
  std::vector<VarId> xyz, uv;
  std::vector<Polynomial> P;
  HomotopyFamily family;
  std::uint64_t seed = 0;
};

/**
 * @brief P = (x^2 + y^2, xy) and F = (u, v, 0) plus monomials of degree 1..3
 * in (u, v) with coefficients uniform in [-0.1, 0.1] (rounded to 1e-6).
 */
inline CompositeExample idealisticExample(std::uint64_t seed) {
  CompositeExample e;
  e.seed = seed;
  e.u = Universe::create();
  for (auto n : {"x", "y", "z"}) e.xyz.push_back(e.u->add(n, VarKind::phase));
  for (auto n : {"u", "v"}) e.uv.push_back(e.u->add(n, VarKind::phase));
  e.P = {parsePolynomial(e.u, "x^2 + y^2"), parsePolynomial(e.u, "x*y")};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> coef(-100000, 100000);
  for (std::size_t i = 0; i < 3; ++i) {
    Polynomial f = i < 2 ? Polynomial::variable(e.u, e.uv[i]) : Polynomial(e.u);
    for (unsigned d = 1; d <= 3; ++d)
      for (unsigned a = 0; a <= d; ++a) {
        Monomial m = Monomial::of(e.uv[0], a) * Monomial::of(e.uv[1], d - a);
        f = f + Polynomial::monomial(e.u, m, Rational(coef(rng), 1000000));
      }
    e.family.F.push_back(f);
    e.family.LF.push_back(linearPart(f));
  }
  return e;
}

/// P = (z - x^2, y), F = (u, v, 2u^2), L_F = (u, v, 0): the image of F_{1/2} contains V_0.
inline CompositeExample tangencyExample() {
  CompositeExample e;
  e.u = Universe::create();
  for (auto n : {"x", "y", "z"}) e.xyz.push_back(e.u->add(n, VarKind::phase));
  for (auto n : {"u", "v"}) e.uv.push_back(e.u->add(n, VarKind::phase));
  e.P = {parsePolynomial(e.u, "z - x^2"), parsePolynomial(e.u, "y")};
  e.family.F = {parsePolynomial(e.u, "u"), parsePolynomial(e.u, "v"), parsePolynomial(e.u, "2*u^2")};
  e.family.LF = {parsePolynomial(e.u, "u"), parsePolynomial(e.u, "v"), Polynomial(e.u)};
  return e;
}

/// P = (x, y), F = (u, v, u + v): linear throughout.
inline CompositeExample linearExample() {
  CompositeExample e;
  e.u = Universe::create();
  for (auto n : {"x", "y", "z"}) e.xyz.push_back(e.u->add(n, VarKind::phase));
  for (auto n : {"u", "v"}) e.uv.push_back(e.u->add(n, VarKind::phase));
  e.P = {parsePolynomial(e.u, "x"), parsePolynomial(e.u, "y")};
  e.family.F = {parsePolynomial(e.u, "u"), parsePolynomial(e.u, "v"), parsePolynomial(e.u, "u + v")};
  e.family.LF = e.family.F;
  return e;
}

inline CountingTask compositeTask(const CompositeExample& e, const std::vector<Polynomial>& F, const Eigen::VectorXd& target,
                                  double radius, const NewtonConfig& cfg = {}) {
  CountingTask t;
  t.system = compose(e.P, e.xyz, F);
  t.vars = e.uv;
  t.target = target;
  t.center = Eigen::VectorXd::Zero(2);
  t.radius = radius;
  t.newton = cfg;
  return t;
}

struct HomotopyVerdict {
  std::vector<double> ts;
  std::vector<std::size_t> counts;
  std::vector<double> minSingular;  // over the roots at each t (infinity when none)
  bool constant = true;
  bool transversal = true;
  bool pass = true;
  std::optional<double> tStar;          // localized failure
  std::pair<double, double> bracket{0, 0};
  std::string reason;
};

/**
 * @brief Counts preimages for F_t at the sampled t. A change of count is
 * localized by bisection on t; a root with smallest Jacobian singular value
 * at most minSingular is a transversality failure at that t.
 */
inline HomotopyVerdict homotopyInvarianceCheck(const CompositeExample& e, const Eigen::VectorXd& target, double radius,
                                               std::vector<double> ts = {}, const NewtonConfig& cfg = {},
                                               double minSingular = 1e-8, unsigned bisections = 12) {
  if (ts.empty())
    for (int i = 0; i <= 10; ++i) ts.push_back(i / 10.0);
  auto countAt = [&](double t) {
    Rational tq(static_cast<long>(std::lround(t * 1e9)), 1000000000L);
    return countPreimages(compositeTask(e, e.family.at(tq), target, radius, cfg));
  };
  HomotopyVerdict v;
  v.ts = ts;
  for (double t : ts) {
    auto r = countAt(t);
    v.counts.push_back(r.count);
    double ms = std::numeric_limits<double>::infinity();
    for (double s : r.minSingular) ms = std::min(ms, s);
    v.minSingular.push_back(ms);
    if (ms <= minSingular && v.transversal) {
      v.transversal = false;
      v.tStar = t;
      v.bracket = {t, t};
      v.reason = "Jacobian nearly singular at a root";
    }
  }
  for (std::size_t i = 0; i + 1 < ts.size(); ++i)
    if (v.counts[i] != v.counts[i + 1]) {
      v.constant = false;
      if (v.transversal) {
        double lo = ts[i], hi = ts[i + 1];
        const std::size_t clo = v.counts[i];
        for (unsigned b = 0; b < bisections; ++b) {
          double mid = 0.5 * (lo + hi);
          (countAt(mid).count == clo ? lo : hi) = mid;
        }
        v.tStar = 0.5 * (lo + hi);
        v.bracket = {lo, hi};
        v.reason = "count changes from " + std::to_string(v.counts[i]) + " to " + std::to_string(v.counts[i + 1]);
      }
      break;
    }
  v.pass = v.constant && v.transversal;
  return v;
}

// ---------------------------------------------------------------------------
// Rolle counts in one variable

struct Function1D {
  std::function<double(double)> f, df, d2f;
};

/// a_0 + sum_j a_j cos(j x) + b_j sin(j x).
struct TrigPoly {
  double a0 = 0;
  std::vector<double> a, b;
  double operator()(double x) const {
    double s = a0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * std::cos((j + 1.0) * x) + b[j] * std::sin((j + 1.0) * x);
    return s;
  }
  TrigPoly derivative() const {
    TrigPoly d;
    for (std::size_t j = 0; j < a.size(); ++j) {
      d.a.push_back((j + 1.0) * b[j]);
      d.b.push_back(-(j + 1.0) * a[j]);
    }
    return d;
  }
  Function1D function() const {
    TrigPoly d1 = derivative(), d2 = d1.derivative();
    return {*this, d1, d2};
  }
  static TrigPoly random(std::mt19937_64& rng, unsigned maxDegree) {
    std::uniform_int_distribution<unsigned> deg(1, maxDegree);
    std::uniform_real_distribution<double> c(-1, 1);
    TrigPoly p;
    p.a0 = c(rng);
    unsigned d = deg(rng);
    for (unsigned j = 0; j < d; ++j) {
      p.a.push_back(c(rng));
      p.b.push_back(c(rng));
    }
    return p;
  }
};

enum class Domain { circle, segment };

struct MorseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RolleResult {
  std::size_t solutions = 0;        // #{f = a}
  std::size_t derivativeSolutions = 0;  // #{f' = eps}
  std::size_t slack = 0;
  std::size_t cells = 0;
  bool holds = false;
};

namespace detail {

/// Sign changes of v over grid cells; an exact zero at a node counts once.
inline std::size_t signChanges(const std::vector<double>& v, bool wrap) {
  std::size_t c = 0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (v[i] == 0) {
      ++c;
      continue;
    }
    if (i + 1 == n && !wrap) break;
    double w = v[(i + 1) % n];
    if (w != 0 && (v[i] < 0) != (w < 0)) ++c;
  }
  return c;
}

}  // namespace detail

/**
 * @brief #{f = a} and #{f' = eps} by sign changes on a uniform grid over
 * [0, 2 pi) (circle) or [0, 1] (segment). f must be Morse: no node where
 * |f'| and |f''| are both below morseTol times their grid maxima.
 */
inline RolleResult rolleCount(const Function1D& fn, Domain domain, double a, double eps, std::size_t cells = 100000,
                              double morseTol = 1e-6) {
  if (cells < 4) throw std::invalid_argument("rolleCount: too few cells");
  const bool circle = domain == Domain::circle;
  const std::size_t nodes = circle ? cells : cells + 1;
  const double len = circle ? 2 * M_PI : 1.0;
  std::vector<double> f(nodes), df(nodes), d2(nodes);
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < nodes; ++i) {
    double x = len * static_cast<double>(i) / static_cast<double>(cells);
    f[i] = fn.f(x) - a;
    df[i] = fn.df(x);
    d2[i] = fn.d2f(x);
    m1 = std::max(m1, std::fabs(df[i]));
    m2 = std::max(m2, std::fabs(d2[i]));
  }
  for (std::size_t i = 0; i < nodes; ++i)
    if (std::fabs(df[i]) <= morseTol * m1 && std::fabs(d2[i]) <= morseTol * m2)
      throw MorseError("rolleCount: f is not Morse on the grid");
  for (auto& d : df) d -= eps;
  RolleResult r;
  r.cells = cells;
  r.solutions = detail::signChanges(f, circle);
  r.derivativeSolutions = detail::signChanges(df, circle);
  r.slack = circle ? 0 : 1;
  r.holds = r.solutions <= r.derivativeSolutions + r.slack;
  return r;
}

}  // namespace polycyc
