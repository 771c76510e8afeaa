#pragma once
// Principal functional-Pfaffian system of a polycycle type and its
// cyclicity certificate.

#include "polycyc/normal_forms.hpp"
#include "polycyc/reduce.hpp"

namespace polycyc {

/// Ordered vertex list (l_1, mu_1, ..., l_n, mu_n) with the parameter count k.
struct CombinatorialType {
  std::vector<SingularityType> vertices;
  unsigned k = 1;

  unsigned n() const { return static_cast<unsigned>(vertices.size()); }
  unsigned muSum() const {
    unsigned s = 0;
    for (auto& v : vertices) s += v.mu;
    return s;
  }
  unsigned resonantCount() const {
    unsigned s = 0;
    for (auto& v : vertices) s += v.resonant() ? 1 : 0;
    return s;
  }
  void validate() const {
    if (vertices.empty()) throw std::invalid_argument("combinatorial type has no vertices");
    if (n() > k) throw std::invalid_argument("combinatorial type: n = " + std::to_string(n()) + " exceeds k = " + std::to_string(k));
    if (muSum() > k)
      throw std::invalid_argument("combinatorial type: sum of mu = " + std::to_string(muSum()) + " exceeds k = " + std::to_string(k));
    for (auto& v : vertices) v.validate();
  }
  std::string label() const {
    std::string s;
    for (auto& v : vertices) s += (s.empty() ? "" : "-") + v.label();
    return s + " (k=" + std::to_string(k) + ")";
  }
};

/// Algebraic part and size. Unset values stay symbolic.
struct Specification {
  std::vector<std::optional<Rational>> c;  // localization values c_j
  std::optional<Rational> r;
  ResonantConvention convention = ResonantConvention::table;
};

struct PrincipalDims {
  unsigned n = 0, s = 0, k = 0, m = 0, bigM = 0;
};

struct PrincipalSystem {
  CombinatorialType type;
  PrincipalDims dims;
  MixedSystem system;
  std::vector<VertexUnfolding> vertices;  // untranslated, one universe per vertex
  std::vector<VarId> epsilon;
  std::vector<VarId> lambda;  // translated parameters, vertex by vertex
  std::vector<std::string> notes;
};

/**
 * @brief All types with n <= k and sum mu <= k. Saddles of positive
 * codimension get the canonical resonance 1:1 unless another is given.
 */
inline std::vector<CombinatorialType> enumerateTypes(unsigned k, unsigned resN = 1, unsigned resM = 1) {
  std::vector<CombinatorialType> out;
  if (k == 0) return out;
  std::vector<SingularityType> cur;
  std::function<void(unsigned)> rec = [&](unsigned budget) {
    if (!cur.empty()) out.push_back({cur, k});
    if (cur.size() == k) return;
    cur.push_back(SingularityType::s0());
    rec(budget);
    cur.pop_back();
    for (unsigned mu = 1; mu <= budget; ++mu)
      for (auto t : {SingularityType::saddle(mu, resN, resM), SingularityType::dc(mu), SingularityType::dh(mu)}) {
        cur.push_back(t);
        rec(budget - mu);
        cur.pop_back();
      }
  };
  rec(k);
  return out;
}

/**
 * @brief Builds the principal system: phase space M_1 x ... x M_n x eps-cube,
 * forms of every vertex, F = (x_{j+1} - f_j(y_j, eps), eps_i, lambda_i) and
 * rho = rho_1 ... rho_n rho_eps. The parameter lambda_mu of each vertex is
 * translated by c_j so that the localization point is the origin.
 */
inline PrincipalSystem assemble(const CombinatorialType& t, const Specification& spec = {}) {
  t.validate();
  PrincipalSystem ps;
  ps.type = t;
  const unsigned n = t.n(), k = t.k;
  ps.dims = {n, t.resonantCount(), k, n + t.muSum(), 0};
  ps.dims.bigM = 2 * n + 2 * ps.dims.s + k + ps.dims.m;
  if (spec.c.size() > n) throw std::invalid_argument("specification lists more localization values than vertices");

  UniversePtr u = Universe::create();
  std::vector<VertexUnfolding> shared;
  for (unsigned j = 0; j < n; ++j) {
    VertexOptions opt{std::to_string(j + 1), 1, spec.convention};
    shared.push_back(buildVertex(t.vertices[j], u, opt));
    ps.vertices.push_back(buildVertex(t.vertices[j], opt));
  }
  for (unsigned i = 1; i <= k; ++i) ps.epsilon.push_back(u->add("epsilon" + std::to_string(i), VarKind::parameter));

  const VarId r = u->intern("r", VarKind::size);
  std::unordered_map<VarId, Polynomial> fixed;
  if (spec.r) fixed.emplace(r, Polynomial(u, *spec.r));

  // translation lambda_mu -> lambda_mu' + c_j
  std::vector<std::unordered_map<VarId, Polynomial>> shift(n);
  for (unsigned j = 0; j < n; ++j) {
    auto& v = shared[j];
    const unsigned mu = t.vertices[j].mu;
    Polynomial C = Polynomial::variable(u, v.c);
    if (j < spec.c.size() && spec.c[j]) C = Polynomial(u, *spec.c[j]);
    for (unsigned i = 0; i <= mu; ++i) {
      if (i < mu) {
        ps.lambda.push_back(v.lambda[i]);
        continue;
      }
      VarId moved = u->add(u->name(v.lambda[i]) + "'", VarKind::parameter);
      shift[j].emplace(v.lambda[i], Polynomial::variable(u, moved) + C);
      ps.lambda.push_back(moved);
    }
    for (auto& [a, b] : fixed) shift[j].emplace(a, b);
  }

  std::vector<VarId> coords;
  for (auto& v : shared)
    for (VarId p : v.phaseCoords()) coords.push_back(p);
  for (VarId e : ps.epsilon) coords.push_back(e);
  for (VarId l : ps.lambda) coords.push_back(l);

  CartesianType ct;
  for (unsigned j = 0; j < n; ++j) {
    ct.names.push_back("f" + std::to_string(j + 1));
    std::vector<VarId> dep{shared[j].y};
    dep.insert(dep.end(), ps.epsilon.begin(), ps.epsilon.end());
    ct.dependency.push_back(dep);
  }
  MixedSystem& sys = ps.system;
  sys.jets = std::make_shared<JetSpace>(u, coords, ct, ps.dims.bigM + 2);

  for (unsigned j = 0; j < n; ++j) {
    auto& v = shared[j];
    for (std::size_t q = 0; q < v.forms.size(); ++q) {
      OneForm w(u);
      for (auto& [var, c] : v.forms[q].coefficients()) w.set(var, c.substitute(shift[j]));
      std::string label = "omega" + std::to_string(j + 1);
      if (v.forms.size() > 1) label += q < 2 ? std::string("_") + std::to_string(q + 1) : "";
      sys.addForm(std::move(w), label);
    }
    sys.rhoFactors.push_back(v.rho.substitute(shift[j]));
    for (auto& dc : v.domain) sys.domain.push_back(dc.text + " [vertex " + std::to_string(j + 1) + "]");
  }
  Polynomial R = fixed.count(r) ? fixed.at(r) : Polynomial::variable(u, r);
  Polynomial rhoEps(u, 1);
  for (VarId e : ps.epsilon) {
    rhoEps *= R.pow(2) - Polynomial::variable(u, e).pow(2);
    sys.domain.push_back("|" + u->name(e) + "| < r");
  }
  sys.rhoFactors.push_back(rhoEps);

  for (unsigned j = 0; j < n; ++j)
    sys.loose.push_back({Polynomial::variable(u, shared[(j + 1) % n].x) - sys.jets->value(j), "b" + std::to_string(j + 1)});
  for (VarId e : ps.epsilon) sys.loose.push_back({Polynomial::variable(u, e), "b" + std::to_string(sys.loose.size() + 1)});
  for (VarId l : ps.lambda) sys.loose.push_back({Polynomial::variable(u, l), "b" + std::to_string(sys.loose.size() + 1)});

  if (spec.convention == ResonantConvention::equationP && ps.dims.s > 0)
    ps.notes.push_back("auxiliary forms written as m x dz - z dx; they annihilate z = x^m only when m = 1");
  if (spec.convention == ResonantConvention::table && ps.dims.s > 0)
    ps.notes.push_back("auxiliary forms written as x dz - m z dx; the variant m x dz - z dx differs when m != 1");

  if (sys.pfaffian.size() != n + 2 * ps.dims.s) throw std::logic_error("assemble: form count mismatch");
  if (sys.loose.size() != n + k + ps.dims.m) throw std::logic_error("assemble: functional count mismatch");
  if (coords.size() != ps.dims.bigM) throw std::logic_error("assemble: phase dimension mismatch");
  sys.validate();
  return ps;
}

/// Cyclicity certificate of one type: max Bezout product over schedules plus k, against 2^(25k^2).
struct CyclicityCertificate {
  CombinatorialType type;
  PrincipalDims dims;
  ReductionReport report;
  std::vector<BigInt> scheduleProducts;
  BigInt maxProduct = 0;
  BigInt value = 0;  // maxProduct + k
  BigInt bound = 0;  // 2^(25 k^2)
  bool withinBound = false;
  bool exact = true;  // every ledger entry exact
  Degree rhoDegree;   // chain-map counting (phase, parameter, jet)
  std::int64_t rhoTableDegree = 0;  // sum of vertex notes, lambda excluded, rho_eps not included
  bool bigMOk = false, rhoOk = false, componentsOk = false;
  Rational aggregate;  // B_0 + 1/2 sum B_alpha + k
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;

  bool pass() const { return withinBound && bigMOk && rhoOk && componentsOk; }
};

inline ReduceOptions principalReduceOptions() {
  ReduceOptions o;
  o.budget = WorkBudget{50000, 10000, 200000};
  o.maxKeptTerms = 500;
  return o;
}

inline CyclicityCertificate cyclicityCertificate(const CombinatorialType& t, const Specification& spec = {},
                                                 const ReduceOptions& opt = principalReduceOptions()) {
  PrincipalSystem ps = assemble(t, spec);
  CyclicityCertificate c;
  c.type = t;
  c.dims = ps.dims;
  c.notes = ps.notes;
  const unsigned k = t.k;
  c.bound = BigInt(1) << (25 * k * k);
  c.bigMOk = ps.dims.bigM <= 7 * k;
  if (!c.bigMOk) c.violations.push_back("phase dimension " + std::to_string(ps.dims.bigM) + " > 7k");

  c.rhoDegree = ps.system.rhoDegree();
  for (auto& v : ps.vertices) c.rhoTableDegree += vertexDegrees(v).rho.valueOr(0);
  c.rhoOk = c.rhoDegree <= Degree(14 * k);
  if (!c.rhoOk) c.violations.push_back("deg rho = " + c.rhoDegree.str() + " > 14k = " + std::to_string(14 * k));

  c.report = runSchedule(ps.system, opt);
  c.componentsOk = true;
  for (auto& sysc : c.report.systems) {
    BezoutProduct b = bezoutProduct(sysc);
    c.exact = c.exact && b.exact;
    for (auto& w : b.warnings) c.warnings.push_back("schedule " + std::to_string(sysc.scheduleIndex) + ": " + w);
    c.scheduleProducts.push_back(b.value);
    if (b.value > c.maxProduct) c.maxProduct = b.value;
    for (std::size_t i = 0; i < sysc.components.size(); ++i) {
      Degree d = sysc.components[i].degree;
      if (d.isNegInf()) continue;
      BigInt lim = BigInt(14 * k) << static_cast<mp_bitcnt_t>(i + 1);
      if (BigInt(static_cast<long>(d.value())) > lim) {
        c.componentsOk = false;
        c.violations.push_back("schedule " + std::to_string(sysc.scheduleIndex) + ": deg P" + std::to_string(i + 1) +
                               " = " + d.str() + " > 14k 2^" + std::to_string(i + 1));
      }
    }
  }
  c.value = c.maxProduct + k;
  c.withinBound = c.value <= c.bound;
  if (!c.withinBound) c.violations.push_back("certificate " + c.value.get_str() + " exceeds 2^" + std::to_string(25 * k * k));
  c.aggregate = khovanskiiAggregate(c.report) + Rational(k);
  return c;
}

}  // namespace polycyc
