#pragma once
// Khovanskii reduction: mixed functional-Pfaffian systems, contact and
// covering steps, elimination schedules and the degree ledger.

#include <limits>
#include <random>

#include "polycyc/exterior.hpp"
#include "polycyc/parallel.hpp"

namespace polycyc {

enum class StepKind { contact, covering };

inline const char* stepKindName(StepKind k) { return k == StepKind::contact ? "contact" : "covering"; }

/**
 * @brief One produced (or input) rigid function together with its degree record.
 *
 * When the polynomial could not be materialized within the work budget only
 * a certified upper bound on its degree is kept (exact == false), plus the
 * dependency data needed to bound derivatives at later steps.
 */
struct LedgerEntry {
  std::string label;
  Degree degree;
  bool exact = true;
  Degree bound;  // row-assignment bound of the determinant, when one was formed
  std::optional<Polynomial> poly;
  std::set<VarId> explicitVars;
  std::set<std::uint32_t> jetFunctions;
  std::uint32_t jetOrder = 0;

  bool materialized() const { return poly.has_value(); }
};

/// Ledger entry of a concrete polynomial; degrees count kChainKinds.
inline LedgerEntry measure(const Polynomial& p, std::string label) {
  LedgerEntry e;
  e.label = std::move(label);
  e.degree = p.totalDegree(kChainKinds);
  e.bound = e.degree;
  e.poly = p;
  if (const UniversePtr& u = p.universe()) {
    std::vector<VarId> vs = p.variables();
    u->read([&](const std::deque<Variable>& vars) {
      for (VarId v : vs) {
        const Variable& var = vars[v];
        if (var.kind == VarKind::jet) {
          e.jetFunctions.insert(var.jet->function);
          e.jetOrder = std::max(e.jetOrder, var.jet->order);
        } else if (isBaseKind(var.kind)) {
          e.explicitVars.insert(v);
        }
      }
    });
  }
  return e;
}

/// Upper bound for deg D_v F from the record of F alone.
inline Degree derivativeBound(const LedgerEntry& e, VarId v, const JetSpace& js) {
  if (e.degree.isNegInf()) return Degree::negInf();
  for (auto j : e.jetFunctions)
    if (js.inDependency(j, v)) return e.degree;
  if (e.explicitVars.count(v)) return e.degree.value() >= 1 ? Degree(e.degree.value() - 1) : Degree::negInf();
  return Degree::negInf();
}

/**
 * @brief Max over permutations of the summed entry degrees (Hungarian method).
 *
 * Returns -inf when every permutation meets a -inf entry.
 */
inline Degree maxWeightAssignment(const std::vector<std::vector<Degree>>& w) {
  const std::size_t n = w.size();
  if (n == 0) return Degree(0);
  const std::int64_t big = std::int64_t(1) << 40;
  auto cost = [&](std::size_t i, std::size_t j) -> std::int64_t {
    return w[i - 1][j - 1].isNegInf() ? big : -w[i - 1][j - 1].value();
  };
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      std::size_t i0 = p[j0], j1 = 0;
      std::int64_t delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        std::int64_t cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::int64_t total = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    if (w[p[j] - 1][j - 1].isNegInf()) return Degree::negInf();
    total += w[p[j] - 1][j - 1].value();
  }
  return Degree(total);
}

struct ReductionStep {
  StepKind kind = StepKind::contact;
  std::string eliminated;     // label of the removed form
  std::size_t component = 0;  // index of the produced rigid equation
  std::uint32_t jetOrderAfter = 0;
};

struct RigidEquation {
  LedgerEntry function;
  std::string target;
};

/// Immutable shared list of polynomials; copies share storage.
class FactorList {
 public:
  void push_back(Polynomial p) {
    auto v = items_ ? std::make_shared<std::vector<Polynomial>>(*items_) : std::make_shared<std::vector<Polynomial>>();
    v->push_back(std::move(p));
    items_ = std::move(v);
  }
  std::size_t size() const { return items_ ? items_->size() : 0; }
  bool empty() const { return size() == 0; }
  const Polynomial& operator[](std::size_t i) const { return items_->at(i); }
  std::vector<Polynomial>::const_iterator begin() const { return items_ ? items_->begin() : empty_().begin(); }
  std::vector<Polynomial>::const_iterator end() const { return items_ ? items_->end() : empty_().end(); }

 private:
  static const std::vector<Polynomial>& empty_() {
    static const std::vector<Polynomial> e;
    return e;
  }
  std::shared_ptr<const std::vector<Polynomial>> items_;
};

/**
 * @brief {Omega = 0, F = b, calF = a} on the base of a jet space, with covering function rho.
 *
 * rho is kept as a list of factors; its degree is the sum of the factor degrees.
 */
struct MixedSystem {
  std::shared_ptr<JetSpace> jets;
  std::vector<OneForm> pfaffian;
  std::vector<std::string> pfaffianLabels;
  std::vector<FunctionalEquation> loose;
  std::vector<RigidEquation> rigid;
  FactorList rhoFactors;
  std::vector<std::string> domain;
  std::vector<ReductionStep> history;

  const UniversePtr& universe() const { return jets->universe(); }
  const std::vector<VarId>& coords() const { return jets->coords(); }
  std::size_t baseDim() const { return coords().size(); }
  std::size_t equationCount() const { return pfaffian.size() + loose.size() + rigid.size(); }

  void addForm(OneForm w, std::string label = {}) {
    if (label.empty()) label = "omega" + std::to_string(pfaffian.size() + 1);
    pfaffian.push_back(std::move(w));
    pfaffianLabels.push_back(std::move(label));
  }

  Polynomial rho() const {
    Polynomial r(universe(), 1);
    for (auto& f : rhoFactors) r *= f;
    return r;
  }
  Degree rhoDegree() const {
    Degree d(0);
    for (auto& f : rhoFactors) d = d + f.totalDegree(kChainKinds);
    return d;
  }

  std::uint32_t jetOrder() const {
    std::uint32_t o = 0;
    auto scan = [&](const Polynomial& p) {
      for (VarId v : p.variables())
        if (auto& var = universe()->var(v); var.kind == VarKind::jet) o = std::max(o, var.jet->order);
    };
    for (auto& w : pfaffian)
      for (auto& [v, c] : w.coefficients()) scan(c);
    for (auto& f : loose) scan(f.expression);
    for (auto& r : rigid) o = std::max(o, r.function.jetOrder);
    return o;
  }

  void validate() const {
    if (!jets) throw std::invalid_argument("MixedSystem: no jet space");
    if (pfaffian.size() != pfaffianLabels.size()) throw std::invalid_argument("MixedSystem: form labels out of sync");
    if (equationCount() != baseDim())
      throw std::invalid_argument("MixedSystem: " + std::to_string(pfaffian.size()) + " forms + " +
                                  std::to_string(loose.size()) + " loose + " + std::to_string(rigid.size()) +
                                  " rigid equations on a " + std::to_string(baseDim()) + "-dimensional base");
    std::set<VarId> base(coords().begin(), coords().end());
    for (auto& w : pfaffian)
      for (auto& [v, c] : w.coefficients())
        if (!base.count(v)) throw std::invalid_argument("MixedSystem: form has d" + universe()->name(v) + " outside the base");
  }
};

struct ReduceOptions {
  WorkBudget budget{400000, 40000, 4000000};
  bool materialize = true;
  std::size_t maxKeptTerms = 20000;  // larger results keep their exact degree but drop the polynomial
  unsigned threads = 0;  // 0: POLYCYC_THREADS
};

/// A step failed; carries the ledger accumulated so far.
struct ReductionError : std::runtime_error {
  ReductionError(const std::string& what, std::vector<LedgerEntry> partialLedger)
      : std::runtime_error(what), partial(std::move(partialLedger)) {}
  std::vector<LedgerEntry> partial;
};

/**
 * @brief Replaces every loose equation F_j by the Pfaffian form dF_j.
 *
 * The forms are stored so that popping from the back eliminates
 * omega_k, ..., omega_1 first and then dF_1, dF_2, ... in index order.
 */
inline MixedSystem convertLoose(const MixedSystem& sys) {
  if (sys.loose.empty()) return sys;
  MixedSystem r = sys;
  r.loose.clear();
  r.pfaffian.clear();
  r.pfaffianLabels.clear();
  for (std::size_t j = sys.loose.size(); j-- > 0;)
    r.addForm(sys.jets->exteriorDerivative(sys.loose[j].expression), "dF" + std::to_string(j + 1));
  for (std::size_t i = 0; i < sys.pfaffian.size(); ++i) r.addForm(sys.pfaffian[i], sys.pfaffianLabels[i]);
  return r;
}

namespace detail {

inline void absorb(LedgerEntry& into, const Polynomial& p) {
  LedgerEntry e = measure(p, "");
  into.explicitVars.insert(e.explicitVars.begin(), e.explicitVars.end());
  into.jetFunctions.insert(e.jetFunctions.begin(), e.jetFunctions.end());
  into.jetOrder = std::max(into.jetOrder, e.jetOrder);
}

}  // namespace detail

/**
 * @brief sigma = *(omega_which ^ dF_1 ^ ... ^ dcalF_1 ^ ... ^ remaining omega_i).
 *
 * Rows are the coefficient vectors over the base coordinates in that order.
 * The determinant is expanded exactly when every rigid function is
 * materialized and the work budget allows; otherwise the entry records the
 * row-assignment degree bound.
 */
inline LedgerEntry contactFunction(const MixedSystem& sys, std::size_t which, const ReduceOptions& opt = {}) {
  if (which >= sys.pfaffian.size()) throw std::out_of_range("contactFunction: no Pfaffian form at that index");
  const std::size_t n = sys.baseDim();
  if (sys.equationCount() != n)
    throw std::invalid_argument("contactFunction: dimension mismatch, " + std::to_string(sys.equationCount()) +
                                " forms on a " + std::to_string(n) + "-dimensional base");
  JetSpace& js = *sys.jets;
  const auto& coords = sys.coords();

  std::vector<std::vector<Degree>> deg;
  PolyMatrix mat;
  bool exactPossible = opt.materialize;
  LedgerEntry info;

  auto polyRow = [&](std::vector<Polynomial> row) {
    std::vector<Degree> d;
    for (auto& p : row) {
      d.push_back(p.totalDegree(kChainKinds));
      detail::absorb(info, p);
    }
    deg.push_back(std::move(d));
    mat.push_back(std::move(row));
  };
  auto formRow = [&](const OneForm& w) {
    std::vector<Polynomial> row;
    for (VarId v : coords) row.push_back(w.coeff(v));
    polyRow(std::move(row));
  };

  formRow(sys.pfaffian[which]);
  for (auto& f : sys.loose) formRow(js.exteriorDerivative(f.expression));
  for (auto& r : sys.rigid) {
    const LedgerEntry& e = r.function;
    if (e.materialized()) {
      std::vector<Polynomial> row;
      for (VarId v : coords) row.push_back(js.differentiate(*e.poly, v));
      polyRow(std::move(row));
      continue;
    }
    if (!e.jetFunctions.empty() && e.jetOrder + 1 > js.cap())
      throw JetOrderExceeded("contact step needs jets of order " + std::to_string(e.jetOrder + 1) + " of " +
                             js.type().names[*e.jetFunctions.begin()] + ", cap is " + std::to_string(js.cap()));
    std::vector<Degree> d;
    for (VarId v : coords) d.push_back(derivativeBound(e, v, js));
    deg.push_back(std::move(d));
    info.explicitVars.insert(e.explicitVars.begin(), e.explicitVars.end());
    info.jetFunctions.insert(e.jetFunctions.begin(), e.jetFunctions.end());
    info.jetOrder = std::max(info.jetOrder, e.jetFunctions.empty() ? 0u : e.jetOrder + 1);
    exactPossible = false;
  }
  for (std::size_t i = 0; i < sys.pfaffian.size(); ++i)
    if (i != which) formRow(sys.pfaffian[i]);

  Degree bound = maxWeightAssignment(deg);
  if (bound.isNegInf()) {
    LedgerEntry z = measure(Polynomial(sys.universe()), "contact");
    z.bound = bound;
    return z;
  }
  if (exactPossible) {
    try {
      BudgetGuard guard(opt.budget);
      Polynomial det = determinant(mat);
      LedgerEntry e = measure(det, "contact");
      e.bound = bound;
      if (det.size() > opt.maxKeptTerms) e.poly.reset();
      return e;
    } catch (const BudgetExceeded&) {
    }
  }
  info.label = "contact";
  info.degree = bound;
  info.bound = bound;
  info.exact = false;
  return info;
}

/// T^c: removes the last form and appends its contact function with target eps.
inline MixedSystem applyContactStep(const MixedSystem& sys, std::string target = {}, const ReduceOptions& opt = {}) {
  MixedSystem s = sys.pfaffian.empty() && !sys.loose.empty() ? convertLoose(sys) : sys;
  if (s.pfaffian.empty()) throw std::invalid_argument("applyContactStep: no Pfaffian form left to eliminate");
  const std::size_t which = s.pfaffian.size() - 1;
  LedgerEntry e = contactFunction(s, which, opt);
  std::string label = s.pfaffianLabels[which];
  e.label = "contact(" + label + ")";
  s.pfaffian.pop_back();
  s.pfaffianLabels.pop_back();
  if (target.empty()) target = "eps" + std::to_string(s.rigid.size() + 1);
  s.rigid.push_back({std::move(e), std::move(target)});
  s.history.push_back({StepKind::contact, label, s.rigid.size() - 1, s.jetOrder()});
  return s;
}

/// Ledger entry of rho: exact degree from the factors, polynomial when the product fits the budget.
inline LedgerEntry coveringEntry(const MixedSystem& sys, const ReduceOptions& opt = {}) {
  LedgerEntry e;
  e.label = "covering";
  e.degree = sys.rhoDegree();
  e.bound = e.degree;
  for (auto& f : sys.rhoFactors) {
    if (f.isZero()) e.degree = Degree::negInf();
    detail::absorb(e, f);
  }
  if (opt.materialize) {
    try {
      BudgetGuard guard(opt.budget);
      Polynomial r = sys.rho();
      LedgerEntry m = measure(r, "covering");
      if (r.size() > opt.maxKeptTerms) m.poly.reset();
      return m;
    } catch (const BudgetExceeded&) {
    }
  }
  return e;
}

/// T^infinity: removes the last form and appends rho with target eps.
inline MixedSystem applyCoveringStep(const MixedSystem& sys, std::string target = {}, const ReduceOptions& opt = {}) {
  MixedSystem s = sys.pfaffian.empty() && !sys.loose.empty() ? convertLoose(sys) : sys;
  if (s.pfaffian.empty()) throw std::invalid_argument("applyCoveringStep: no Pfaffian form left to eliminate");
  std::string label = s.pfaffianLabels.back();
  std::uint32_t before = s.jetOrder();
  s.pfaffian.pop_back();
  s.pfaffianLabels.pop_back();
  LedgerEntry e = coveringEntry(s, opt);
  e.label = "covering(" + label + ")";
  if (target.empty()) target = "eps" + std::to_string(s.rigid.size() + 1);
  s.rigid.push_back({std::move(e), std::move(target)});
  s.history.push_back({StepKind::covering, label, s.rigid.size() - 1, std::max(before, s.rigid.back().function.jetOrder)});
  return s;
}

/// Rigid system calF = eps produced by one schedule.
struct ChainMapSystem {
  std::size_t scheduleIndex = 0;
  std::vector<LedgerEntry> components;
  std::vector<std::string> targets;
  std::vector<ReductionStep> steps;

  std::vector<Degree> degreeLedger() const {
    std::vector<Degree> d;
    for (auto& c : components) d.push_back(c.degree);
    return d;
  }
  bool exact() const {
    return std::all_of(components.begin(), components.end(), [](const LedgerEntry& e) { return e.exact; });
  }
};

inline ChainMapSystem chainMapOf(const MixedSystem& s, std::size_t alpha) {
  ChainMapSystem c;
  c.scheduleIndex = alpha;
  for (auto& r : s.rigid) {
    c.components.push_back(r.function);
    c.targets.push_back(r.target);
  }
  c.steps = s.history;
  return c;
}

/**
 * @brief Output of runSchedule: the chain-map systems and the degree check
 * deg P_r <= 2^r (dk + n) for the r-th produced component.
 */
struct ReductionReport {
  std::vector<ChainMapSystem> systems;
  std::int64_t d = 0, k = 0, n = 0;
  std::size_t initialRigid = 0;
  bool boundHolds = true;
  bool tightBoundHolds = true;  // deg P_r <= 2^(r-1) (dk + n)
  std::vector<std::string> violations;

  std::int64_t base() const { return d * k + n; }
};

/// Max degree of the input form coefficients and rho (kChainKinds).
inline std::int64_t inputDegree(const MixedSystem& sys) {
  Degree d(0);
  for (auto& w : sys.pfaffian) d = Degree::max(d, w.degree(kChainKinds));
  if (!sys.rhoFactors.empty()) d = Degree::max(d, sys.rhoDegree());
  return d.valueOr(0);
}

/**
 * @brief Runs schedule 0 (contact only) and schedules j = 1..steps (covering at step j).
 *
 * Loose equations are converted to forms first. Schedule j reuses the first
 * j - 1 contact steps of schedule 0.
 */
inline ReductionReport runSchedule(const MixedSystem& input, const ReduceOptions& opt = {}) {
  input.validate();
  ReductionReport rep;
  rep.n = static_cast<std::int64_t>(input.baseDim());
  rep.k = static_cast<std::int64_t>(input.pfaffian.size());
  rep.d = inputDegree(input);
  rep.initialRigid = input.rigid.size();

  MixedSystem sys = convertLoose(input);
  const std::size_t steps = sys.pfaffian.size();
  auto ledgerOf = [](const MixedSystem& s) {
    std::vector<LedgerEntry> l;
    for (auto& r : s.rigid) l.push_back(r.function);
    return l;
  };

  std::vector<MixedSystem> prefix{sys};
  for (std::size_t r = 0; r < steps; ++r) {
    try {
      prefix.push_back(applyContactStep(prefix.back(), {}, opt));
    } catch (const std::exception& ex) {
      throw ReductionError("schedule 0, step " + std::to_string(r + 1) + ": " + ex.what(), ledgerOf(prefix.back()));
    }
  }
  rep.systems.resize(steps + 1);
  rep.systems[0] = chainMapOf(prefix.back(), 0);

  parallelFor(
      steps,
      [&](std::size_t i) {
        const std::size_t alpha = i + 1;
        MixedSystem s = prefix[alpha - 1];
        std::size_t r = alpha;
        try {
          s = applyCoveringStep(s, {}, opt);
          for (; r < steps; ++r) s = applyContactStep(s, {}, opt);
        } catch (const std::exception& ex) {
          throw ReductionError("schedule " + std::to_string(alpha) + ", step " + std::to_string(r) + ": " + ex.what(),
                               ledgerOf(s));
        }
        rep.systems[alpha] = chainMapOf(s, alpha);
      },
      opt.threads);

  const std::int64_t base = rep.base();
  for (auto& c : rep.systems) {
    for (std::size_t i = rep.initialRigid; i < c.components.size(); ++i) {
      const std::size_t r = i - rep.initialRigid + 1;
      Degree dg = c.components[i].degree;
      if (dg.isNegInf()) continue;
      BigInt lim = BigInt(base) << static_cast<mp_bitcnt_t>(r);
      if (BigInt(static_cast<long>(dg.value())) > lim) {
        rep.boundHolds = false;
        rep.violations.push_back("schedule " + std::to_string(c.scheduleIndex) + " component " + std::to_string(r) +
                                 ": degree " + dg.str() + " > " + lim.get_str());
      }
      if (BigInt(static_cast<long>(dg.value())) > lim / 2) rep.tightBoundHolds = false;
    }
  }
  return rep;
}

struct BezoutProduct {
  BigInt value = 1;
  bool exact = true;
  std::vector<std::string> warnings;
};

/// Product of component degrees; degree 0 or -inf components count as 1 with a warning.
inline BezoutProduct bezoutProduct(const ChainMapSystem& c) {
  BezoutProduct b;
  for (std::size_t i = 0; i < c.components.size(); ++i) {
    const LedgerEntry& e = c.components[i];
    b.exact = b.exact && e.exact;
    if (e.degree.isNegInf() || e.degree.value() == 0) {
      b.warnings.push_back("component " + std::to_string(i + 1) + " (" + e.label + ") has degree " + e.degree.str() +
                           "; counted as 1");
      continue;
    }
    b.value *= BigInt(static_cast<long>(e.degree.value()));
  }
  return b;
}

/// B_0 + 1/2 sum_{alpha >= 1} B_alpha over the schedules of a report.
inline Rational khovanskiiAggregate(const ReductionReport& rep) {
  Rational acc = 0;
  for (auto& c : rep.systems) {
    Rational b(bezoutProduct(c).value);
    acc += c.scheduleIndex == 0 ? b : b / 2;
  }
  acc.canonicalize();
  return acc;
}

/**
 * @brief Random square mixed system on x1..xn: k forms with coefficients of
 * degree <= d, n - k loose equations F_j = f_j with random dependency sets,
 * rho = 1 - sum x_i^2 (or 1 - sum x_i when d = 1).
 */
inline MixedSystem randomMixedSystem(std::mt19937_64& rng, unsigned n, unsigned d, unsigned k) {
  if (n == 0 || k > n || d == 0) throw std::invalid_argument("randomMixedSystem: need n >= 1, k <= n, d >= 1");
  UniversePtr u = Universe::create();
  std::vector<VarId> xs;
  for (unsigned i = 1; i <= n; ++i) xs.push_back(u->add("x" + std::to_string(i), VarKind::phase));
  CartesianType type;
  std::uniform_int_distribution<int> coin(0, 1), pickVar(0, static_cast<int>(n) - 1);
  for (unsigned j = 0; j < n - k; ++j) {
    type.names.push_back("f" + std::to_string(j + 1));
    std::vector<VarId> dep;
    for (VarId v : xs)
      if (coin(rng)) dep.push_back(v);
    if (dep.empty()) dep.push_back(xs[static_cast<std::size_t>(pickVar(rng))]);
    type.dependency.push_back(dep);
  }
  MixedSystem sys;
  sys.jets = std::make_shared<JetSpace>(u, xs, type, n);
  std::uniform_int_distribution<int> num(-4, 4), deg(0, static_cast<int>(d)), nterms(1, 3);
  auto coefficient = [&] {
    std::vector<Polynomial::Term> ts;
    for (int t = nterms(rng); t > 0; --t) {
      std::vector<Monomial::Factor> fs;
      for (int e = deg(rng); e > 0; --e) fs.emplace_back(xs[static_cast<std::size_t>(pickVar(rng))], 1);
      int c = num(rng);
      ts.emplace_back(Monomial::fromFactors(fs), Rational(c == 0 ? 1 : c));
    }
    return Polynomial::fromTerms(u, std::move(ts));
  };
  for (unsigned i = 0; i < k; ++i) {
    OneForm w(u);
    for (VarId v : xs) w.set(v, coefficient());
    sys.addForm(std::move(w));
  }
  for (unsigned j = 0; j < n - k; ++j)
    sys.loose.push_back({sys.jets->value(j), "b" + std::to_string(j + 1)});
  Polynomial rho(u, 1);
  for (VarId v : xs) rho -= Polynomial::variable(u, v, d >= 2 ? 2 : 1);
  sys.rhoFactors.push_back(rho);
  sys.domain.push_back(d >= 2 ? "sum x_i^2 < 1" : "sum x_i < 1");
  return sys;
}

}  // namespace polycyc
