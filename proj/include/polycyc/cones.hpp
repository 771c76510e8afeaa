#pragma once
// (m, delta)-cones of regular values.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>
#include <random>

#include "polycyc/polyring.hpp"

namespace polycyc {

/// K_{m,delta} = {0 < a_1 < delta, 0 < |a_{j+1}| < |a_1 ... a_j|^{m_{j+1}}}.
struct Cone {
  std::vector<unsigned> m{1};
  Rational delta = 1;

  std::size_t k() const { return m.size(); }

  void validate() const {
    if (m.empty() || m[0] != 1) throw std::invalid_argument("cone: m must start with 1");
    for (unsigned e : m)
      if (e == 0) throw std::invalid_argument("cone: exponents must be positive");
    if (delta <= 0) throw std::invalid_argument("cone: delta must be positive");
  }

  /// Membership, compared in log space so tiny coordinates do not underflow.
  bool contains(const std::vector<long double>& a) const {
    if (a.size() != k()) return false;
    if (!(a[0] > 0) || !(a[0] < static_cast<long double>(delta.get_d()))) return false;
    long double logProd = std::log(a[0]);
    for (std::size_t j = 1; j < k(); ++j) {
      if (a[j] == 0 || !std::isfinite(a[j])) return false;
      long double la = std::log(std::fabs(a[j]));
      if (!(la < m[j] * logProd)) return false;
      logProd += la;
    }
    return true;
  }

  /// True when this cone refines o: m componentwise >= with m != o.m, delta <= o.delta.
  bool refines(const Cone& o) const {
    if (o.k() != k() || m == o.m || delta > o.delta) return false;
    for (std::size_t i = 0; i < k(); ++i)
      if (m[i] < o.m[i]) return false;
    return true;
  }

  std::string str() const {
    std::string s = "m=(";
    for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + std::to_string(m[i]);
    return s + ") delta=" + delta.get_str();
  }
};

/**
 * @brief Exponents of a_j in cone coordinates (t, l_1, ..., l_{k-1}), where
 * a_1 = t and a_{j+1} = l_j (a_1 ... a_j)^{m_{j+1}}.
 */
inline std::vector<std::vector<std::uint64_t>> coneExponents(const std::vector<unsigned>& m) {
  const std::size_t k = m.size();
  std::vector<std::vector<std::uint64_t>> E(k, std::vector<std::uint64_t>(k, 0));
  std::vector<std::uint64_t> prod(k, 0);
  E[0][0] = 1;
  prod = E[0];
  for (std::size_t j = 1; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) E[j][i] = m[j] * prod[i];
    E[j][j] += 1;
    for (std::size_t i = 0; i < k; ++i) prod[i] += E[j][i];
  }
  return E;
}

/// Point of the cone with coordinates t in (0, delta), l_j in [-1, 1] \ {0}.
inline std::vector<long double> conePoint(const Cone& c, long double t, const std::vector<long double>& l) {
  if (l.size() + 1 != c.k()) throw std::invalid_argument("conePoint: need k - 1 multipliers");
  std::vector<long double> a{t};
  long double prod = t;
  for (std::size_t j = 1; j < c.k(); ++j) {
    a.push_back(l[j - 1] * std::pow(std::fabs(prod), static_cast<long double>(c.m[j])));
    prod *= a.back();
  }
  return a;
}

/// Radical-inverse (Halton) point in [0, 1)^dim, first prime bases.
inline std::vector<double> haltonPoint(std::uint64_t index, std::size_t dim) {
  static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (dim > std::size(primes)) throw std::invalid_argument("haltonPoint: dimension too large");
  std::vector<double> out;
  for (std::size_t d = 0; d < dim; ++d) {
    double f = 1, r = 0;
    for (std::uint64_t i = index; i > 0; i /= primes[d]) {
      f /= primes[d];
      r += f * static_cast<double>(i % primes[d]);
    }
    out.push_back(r);
  }
  return out;
}

/// Quasi-random cone sample number i (i >= 1).
inline std::vector<long double> coneSample(const Cone& c, std::uint64_t i) {
  auto h = haltonPoint(i, c.k());
  long double t = static_cast<long double>(c.delta.get_d()) * (h[0] == 0 ? 0.5L : static_cast<long double>(h[0]));
  std::vector<long double> l;
  for (std::size_t j = 1; j < c.k(); ++j) {
    long double v = 2.0L * h[j] - 1.0L;
    l.push_back(v == 0 ? 0.5L : v);
  }
  return conePoint(c, t, l);
}

/**
 * @brief The curve (t, t^{m_2+1}, t^{(m_2+2)(m_3+1)}, ...), which stays in the
 * cone for t in (0, delta) when delta <= 1.
 */
inline std::vector<long double> probeCurve(const Cone& c, long double t) {
  c.validate();
  const long double delta = static_cast<long double>(c.delta.get_d());
  if (!(t > 0) || !(t < delta)) throw std::invalid_argument("probeCurve: t must lie in (0, delta)");
  if (c.delta > 1) throw std::invalid_argument("probeCurve: needs delta <= 1");
  std::vector<long double> a{t};
  long double mult = 1;
  for (std::size_t j = 1; j < c.k(); ++j) {
    a.push_back(std::pow(t, mult * (c.m[j] + 1)));
    mult *= c.m[j] + 2;
  }
  if (!c.contains(a)) throw std::logic_error("probeCurve: point left the cone at t = " + std::to_string(static_cast<double>(t)));
  return a;
}

inline long double evaluateLD(const Polynomial& p, const std::vector<VarId>& coords, const std::vector<long double>& x) {
  long double acc = 0;
  for (auto& [mono, c] : p.terms()) {
    long double t = static_cast<long double>(c.get_d());
    for (auto& [v, e] : mono.factors()) {
      auto it = std::find(coords.begin(), coords.end(), v);
      if (it == coords.end()) throw std::invalid_argument("evaluateLD: variable outside coordinates");
      t *= std::pow(x[static_cast<std::size_t>(it - coords.begin())], static_cast<long double>(e));
    }
    acc += t;
  }
  return acc;
}

struct ConeLevel {
  std::size_t dim = 0;   // number of leading coordinates at this level
  std::string poly;      // polynomial handled at this level
  unsigned stripped = 0; // power of the last coordinate divided out
  unsigned m = 1;        // exponent chosen for the last coordinate
};

struct ConeCertificate {
  Cone cone;
  bool certified = false;
  std::vector<ConeLevel> levels;  // outermost first
  std::vector<std::uint64_t> factorExponent;  // common monomial t^e l^g divided out
  Rational leading;    // constant term c after division
  Rational tailBound;  // sum |coef| delta^e over the remaining terms
  unsigned halvings = 0;
  std::vector<std::string> log;
};

namespace detail {

inline Polynomial stripPower(const Polynomial& p, VarId v, unsigned& beta) {
  std::uint32_t lo = std::numeric_limits<std::uint32_t>::max();
  for (auto& [m, c] : p.terms()) lo = std::min(lo, m.exponent(v));
  beta = lo;
  if (lo == 0) return p;
  std::vector<Polynomial::Term> ts;
  for (auto& [m, c] : p.terms()) ts.emplace_back(m.lowered(v, lo), c);
  return Polynomial::fromTerms(p.universe(), std::move(ts));
}

inline Polynomial atZero(const Polynomial& p, VarId v) {
  std::vector<Polynomial::Term> ts;
  for (auto& [m, c] : p.terms())
    if (m.exponent(v) == 0) ts.emplace_back(m, c);
  return Polynomial::fromTerms(p.universe(), std::move(ts));
}

inline void chooseExponents(const Polynomial& p, const std::vector<VarId>& coords, std::size_t dim,
                            std::vector<unsigned>& m, std::vector<ConeLevel>& levels) {
  ConeLevel lv;
  lv.dim = dim;
  lv.poly = p.str();
  if (dim == 1) {
    detail::stripPower(p, coords[0], lv.stripped);
    levels.push_back(lv);
    m[0] = 1;
    return;
  }
  VarId v = coords[dim - 1];
  Polynomial hat = stripPower(p, v, lv.stripped);
  lv.m = static_cast<unsigned>(p.totalDegree().value()) + 1;
  m[dim - 1] = lv.m;
  levels.push_back(lv);
  chooseExponents(atZero(hat, v), coords, dim - 1, m, levels);
}

}  // namespace detail

/**
 * @brief Builds a cone on which d does not vanish.
 *
 * The exponents follow the induction on the last coordinate: divide out its
 * power, recurse on the remainder at zero, take m_k = deg + 1. In cone
 * coordinates d becomes t^e l^g (c + tail) with tail vanishing at t = 0;
 * delta is halved until sum |tail coef| delta^e < |c| / 2, which is an exact
 * rational certificate.
 */
inline ConeCertificate constructCone(const Polynomial& d, const std::vector<VarId>& coords, unsigned maxHalvings = 60) {
  if (d.isZero()) throw std::invalid_argument("constructCone: d is identically zero");
  if (coords.empty()) throw std::invalid_argument("constructCone: no coordinates");
  for (VarId v : d.variables())
    if (std::find(coords.begin(), coords.end(), v) == coords.end())
      throw std::invalid_argument("constructCone: d depends on '" + d.universe()->name(v) + "' outside the coordinates");
  const std::size_t k = coords.size();
  ConeCertificate cert;
  cert.cone.m.assign(k, 1);
  detail::chooseExponents(d, coords, k, cert.cone.m, cert.levels);
  for (auto& lv : cert.levels)
    cert.log.push_back("level " + std::to_string(lv.dim) + ": " + lv.poly + ", stripped power " + std::to_string(lv.stripped) +
                       (lv.dim > 1 ? ", m = " + std::to_string(lv.m) : ""));

  // d in cone coordinates
  auto E = coneExponents(cert.cone.m);
  std::map<std::vector<std::uint64_t>, Rational> D;
  for (auto& [mono, c] : d.terms()) {
    std::vector<std::uint64_t> e(k, 0);
    for (auto& [v, p] : mono.factors()) {
      std::size_t j = static_cast<std::size_t>(std::find(coords.begin(), coords.end(), v) - coords.begin());
      for (std::size_t i = 0; i < k; ++i) e[i] += p * E[j][i];
    }
    D[e] += c;
  }
  std::vector<std::uint64_t> g(k, std::numeric_limits<std::uint64_t>::max());
  for (auto& [e, c] : D)
    if (c != 0)
      for (std::size_t i = 0; i < k; ++i) g[i] = std::min(g[i], e[i]);
  cert.factorExponent = g;

  std::vector<std::pair<std::uint64_t, Rational>> tail;
  bool shapeOk = true;
  for (auto& [e, c] : D) {
    if (c == 0) continue;
    std::vector<std::uint64_t> r(k);
    for (std::size_t i = 0; i < k; ++i) r[i] = e[i] - g[i];
    if (std::all_of(r.begin(), r.end(), [](std::uint64_t x) { return x == 0; })) cert.leading += c;
    else if (r[0] == 0) shapeOk = false;
    else tail.emplace_back(r[0], abs(c));
  }
  if (!shapeOk || cert.leading == 0) {
    cert.log.push_back("lowest-order part in t is not a nonzero constant; no certificate");
    return cert;
  }

  auto bound = [&](const Rational& delta) {
    Rational s = 0;
    for (auto& [e, c] : tail) {
      Rational p;
      mpz_pow_ui(p.get_num_mpz_t(), delta.get_num_mpz_t(), e);
      mpz_pow_ui(p.get_den_mpz_t(), delta.get_den_mpz_t(), e);
      s += c * p;
    }
    return s;
  };
  const Rational half = abs(cert.leading) / 2;
  Rational delta = 1;
  Rational b = bound(delta);
  while (b >= half && cert.halvings < maxHalvings) {
    delta /= 2;
    ++cert.halvings;
    b = bound(delta);
  }
  cert.cone.delta = delta;
  cert.tailBound = b;
  cert.certified = b < half;
  cert.log.push_back("c = " + cert.leading.get_str() + ", tail bound " + b.get_str() + " after " +
                     std::to_string(cert.halvings) + " halvings" + (cert.certified ? "" : " (cap reached, not certified)"));
  return cert;
}

/// Symbolic critical-value polynomial, or numeric critical values when elimination fails.
struct RegularityResult {
  std::optional<Polynomial> d;
  std::vector<VarId> values;  // coordinates a_1..a_k of d
  bool symbolic = false;
  std::vector<std::vector<double>> sampledCriticalValues;
  std::vector<std::string> log;
};

struct RegularityOptions {
  bool includeBall = false;
  std::string valuePrefix = "a";
  WorkBudget budget{200000, 20000, 4000000};
  std::size_t maxVars = 4, maxValues = 2;
  unsigned seeds = 400;  // numeric sampler starts
  std::uint64_t seed = 1;
};

namespace detail {

inline PolyMatrix jacobian(const std::vector<Polynomial>& P, const std::vector<VarId>& x) {
  PolyMatrix J;
  for (auto& p : P) {
    std::vector<Polynomial> row;
    for (VarId v : x) row.push_back(p.differentiate(v));
    J.push_back(std::move(row));
  }
  return J;
}

/// All r x r minors of an r x N matrix.
inline std::vector<Polynomial> maximalMinors(const PolyMatrix& J) {
  const std::size_t r = J.size(), N = J.empty() ? 0 : J[0].size();
  std::vector<Polynomial> out;
  if (r == 0 || N < r) return out;
  std::vector<bool> pick(N, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(r), true);
  do {
    PolyMatrix sub(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t c = 0; c < N; ++c)
        if (pick[c]) sub[i].push_back(J[i][c]);
    Polynomial m = determinant(sub);
    if (!m.isZero()) out.push_back(m);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

/// Eliminates the variables xs by resultant cascades; returns equations free of xs.
inline std::vector<Polynomial> eliminate(std::vector<Polynomial> eqs, const std::vector<VarId>& xs, std::vector<std::string>& log) {
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) {
    VarId v = *it;
    std::vector<Polynomial> with, without;
    for (auto& e : eqs) (e.dependsOn(v) ? with : without).push_back(e);
    if (with.empty()) continue;
    auto piv = std::min_element(with.begin(), with.end(), [&](const Polynomial& a, const Polynomial& b) {
      auto da = a.degreeIn(v).value(), db = b.degreeIn(v).value();
      return da != db ? da < db : a.size() < b.size();
    });
    Polynomial pivot = *piv;
    for (auto& e : with) {
      if (&e == &*piv) continue;
      Polynomial r = resultant(pivot, e, v);
      if (!r.isZero()) without.push_back(r.primitive());
    }
    std::sort(without.begin(), without.end(), [](const Polynomial& a, const Polynomial& b) { return a.str() < b.str(); });
    without.erase(std::unique(without.begin(), without.end()), without.end());
    log.push_back("eliminated " + pivot.universe()->name(v) + ": " + std::to_string(without.size()) + " equations");
    eqs = std::move(without);
  }
  return eqs;
}

inline std::optional<Polynomial> pickLowest(const std::vector<Polynomial>& eqs) {
  std::optional<Polynomial> best;
  for (auto& e : eqs) {
    if (e.isZero()) continue;
    if (!best || e.totalDegree() < best->totalDegree() ||
        (e.totalDegree() == best->totalDegree() && e.size() < best->size()))
      best = e;
  }
  return best;
}

/**
 * @brief eliminate + pickLowest; when every final resultant vanishes (a
 * factor free of the pivot variable shared by all resultants) the
 * coordinates are changed by a random unitriangular integer substitution,
 * which leaves the projection to the values unchanged, and elimination is
 * retried.
 */
inline std::optional<Polynomial> eliminateLowest(const std::vector<Polynomial>& eqs, const std::vector<VarId>& xs,
                                                 std::vector<std::string>& log, std::uint64_t seed, unsigned retries = 4) {
  if (auto d = pickLowest(eliminate(eqs, xs, log))) return d;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coef(-2, 2);
  const UniversePtr& u = eqs.at(0).universe();
  for (unsigned t = 1; t <= retries; ++t) {
    std::unordered_map<VarId, Polynomial> sub;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Polynomial e = Polynomial::variable(u, xs[i]);
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        int c = coef(rng);
        if (c) e = e + Polynomial::variable(u, xs[j]).scaled(Rational(c));
      }
      sub.emplace(xs[i], e);
    }
    std::vector<Polynomial> changed;
    for (auto& e : eqs) changed.push_back(e.substitute(sub));
    log.push_back("every resultant vanished; coordinate change " + std::to_string(t));
    if (auto d = pickLowest(eliminate(changed, xs, log))) return d;
  }
  return std::nullopt;
}

}  // namespace detail

/**
 * @brief Numeric critical points: Gauss-Newton on the maximal minors of dP
 * (with the sphere equation and the bordered Jacobian when onSphere) from
 * random starts in [-1.2, 1.2]^N. Returns the values P(x).
 */
inline std::vector<std::vector<double>> sampleCriticalValues(const std::vector<Polynomial>& P, const std::vector<VarId>& x,
                                                             bool onSphere, unsigned starts, std::uint64_t seed) {
  const std::size_t N = x.size();
  std::vector<Polynomial> G;
  UniversePtr u = P.at(0).universe();
  Polynomial r(u);
  for (VarId v : x) r = r + Polynomial::variable(u, v, 2);
  if (onSphere) {
    auto Q = P;
    Q.push_back(r);
    G = detail::maximalMinors(detail::jacobian(Q, x));
    G.push_back(r - Rational(1));
  } else {
    G = detail::maximalMinors(detail::jacobian(P, x));
  }
  std::vector<std::vector<double>> out;
  if (G.empty()) return out;
  PolyMatrix DG = detail::jacobian(G, x);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.2, 1.2);
  std::unordered_map<VarId, double> at;
  auto evalAt = [&](const Eigen::VectorXd& z) {
    for (std::size_t i = 0; i < N; ++i) at[x[i]] = z[static_cast<Eigen::Index>(i)];
  };
  for (unsigned s = 0; s < starts; ++s) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) z[static_cast<Eigen::Index>(i)] = U(rng);
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      evalAt(z);
      Eigen::VectorXd g(static_cast<Eigen::Index>(G.size()));
      Eigen::MatrixXd J(static_cast<Eigen::Index>(G.size()), static_cast<Eigen::Index>(N));
      for (std::size_t i = 0; i < G.size(); ++i) {
        g[static_cast<Eigen::Index>(i)] = G[i].evaluate(at);
        for (std::size_t j = 0; j < N; ++j) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = DG[i][j].evaluate(at);
      }
      if (g.norm() < 1e-13) { ok = true; break; }
      Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-g);
      z += step;
      if (!z.allFinite() || z.norm() > 1e3) break;
    }
    if (!ok) continue;
    evalAt(z);
    std::vector<double> val;
    for (auto& p : P) val.push_back(p.evaluate(at));
    out.push_back(std::move(val));
  }
  return out;
}

/**
 * @brief A polynomial d on the value space vanishing on the critical values
 * of P (and of P restricted to the unit sphere when includeBall).
 *
 * Critical points are the common zeros of the maximal minors of dP; the
 * values are eliminated from {a - P(x), minors} by resultant cascades. Any
 * common complex zero survives each resultant, so d vanishes on the critical
 * values whenever it is not identically zero. Beyond maxVars / maxValues, or
 * when the budget runs out or every resultant vanishes, the result carries
 * numerically sampled critical values instead.
 */
inline RegularityResult regularityPolynomial(const std::vector<Polynomial>& P, const std::vector<VarId>& x,
                                             const RegularityOptions& opt = {}) {
  if (P.empty() || x.empty()) throw std::invalid_argument("regularityPolynomial: empty map");
  const std::size_t k = P.size(), N = x.size();
  if (N < k) throw std::invalid_argument("regularityPolynomial: needs N >= k");
  UniversePtr u = P[0].universe();
  for (auto& p : P)
    for (VarId v : p.variables())
      if (std::find(x.begin(), x.end(), v) == x.end())
        throw std::invalid_argument("regularityPolynomial: P depends on '" + u->name(v) + "' outside the coordinates");

  // nontriviality: full rank at a random point
  {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(-1, 1);
    PolyMatrix J = detail::jacobian(P, x);
    bool full = false;
    for (int trial = 0; trial < 20 && !full; ++trial) {
      std::unordered_map<VarId, double> at;
      for (VarId v : x) at[v] = U(rng);
      Eigen::MatrixXd M(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(N));
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < N; ++j) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = J[i][j].evaluate(at);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
      auto s = svd.singularValues();
      full = s[s.size() - 1] > 1e-8 * std::max(1.0, s[0]);
    }
    if (!full) throw std::invalid_argument("regularityPolynomial: P has rank < k everywhere sampled (trivial map)");
  }

  RegularityResult res;
  for (std::size_t i = 0; i < k; ++i) res.values.push_back(u->intern(opt.valuePrefix + std::to_string(i + 1), VarKind::value));

  bool trySymbolic = N <= opt.maxVars && k <= opt.maxValues;
  if (trySymbolic) {
    try {
      BudgetGuard guard(opt.budget);
      std::vector<Polynomial> base;
      for (std::size_t i = 0; i < k; ++i) base.push_back(Polynomial::variable(u, res.values[i]) - P[i]);
      auto interior = base;
      for (auto& m : detail::maximalMinors(detail::jacobian(P, x))) interior.push_back(m);
      auto di = detail::eliminateLowest(interior, x, res.log, opt.seed);
      std::optional<Polynomial> d = di;
      if (di) res.log.push_back("interior factor " + di->str());
      if (d && opt.includeBall) {
        Polynomial r(u);
        for (VarId v : x) r = r + Polynomial::variable(u, v, 2);
        auto boundary = base;
        boundary.push_back(r - Rational(1));
        auto Q = P;
        Q.push_back(r);
        for (auto& m : detail::maximalMinors(detail::jacobian(Q, x))) boundary.push_back(m);
        auto db = detail::eliminateLowest(boundary, x, res.log, opt.seed + 1);
        if (db) {
          res.log.push_back("sphere factor " + db->str());
          d = (*d * *db).primitive();
        } else {
          d.reset();
        }
      }
      if (d) {
        res.d = d->primitive();
        res.symbolic = true;
        return res;
      }
      res.log.push_back("every resultant vanished; numeric fallback");
    } catch (const BudgetExceeded&) {
      res.log.push_back("elimination exceeded the work budget; numeric fallback");
    }
  } else {
    res.log.push_back("N = " + std::to_string(N) + ", k = " + std::to_string(k) + " beyond symbolic sizes; numeric fallback");
  }
  res.sampledCriticalValues = sampleCriticalValues(P, x, false, opt.seeds, opt.seed);
  if (opt.includeBall) {
    auto s = sampleCriticalValues(P, x, true, opt.seeds, opt.seed + 1);
    res.sampledCriticalValues.insert(res.sampledCriticalValues.end(), s.begin(), s.end());
  }
  return res;
}

}  // namespace polycyc
