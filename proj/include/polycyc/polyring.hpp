#pragma once
// Exact sparse multivariate polynomials over Q with a shared, append-only
// variable universe.

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace polycyc {

using Rational = mpq_class;
using BigInt = mpz_class;

inline std::string toString(const Rational& q) { return q.get_str(); }
inline std::string toString(const BigInt& z) { return z.get_str(); }

/** @brief Role of a variable; degree ledgers count selected kinds only. */
enum class VarKind : std::uint8_t { phase, parameter, size, spec, jet, multiplier, value };

inline const char* kindName(VarKind k) {
  switch (k) {
    case VarKind::phase: return "phase";
    case VarKind::parameter: return "parameter";
    case VarKind::size: return "size";
    case VarKind::spec: return "spec";
    case VarKind::jet: return "jet";
    case VarKind::multiplier: return "multiplier";
    case VarKind::value: return "value";
  }
  return "?";
}

inline VarKind kindFromName(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(VarKind::value); ++i)
    if (s == kindName(static_cast<VarKind>(i))) return static_cast<VarKind>(i);
  throw std::invalid_argument("unknown variable kind '" + std::string(s) + "'");
}

class KindSet {
 public:
  constexpr KindSet() = default;
  constexpr KindSet(std::initializer_list<VarKind> ks) {
    for (auto k : ks) bits_ |= 1u << static_cast<unsigned>(k);
  }
  static constexpr KindSet all() { KindSet s; s.bits_ = 0x7f; return s; }
  constexpr bool has(VarKind k) const { return bits_ & (1u << static_cast<unsigned>(k)); }
  constexpr KindSet operator|(KindSet o) const { KindSet s; s.bits_ = bits_ | o.bits_; return s; }
 private:
  std::uint32_t bits_ = 0;
};

/// Base variables plus jets: the counting used for chain-map degrees.
inline constexpr KindSet kChainKinds{VarKind::phase, VarKind::parameter, VarKind::jet};

/**
 * @brief Polynomial degree with a distinguished value for the zero polynomial.
 */
class Degree {
 public:
  constexpr Degree() = default;  // -inf
  constexpr explicit Degree(std::int64_t v) : v_(v), finite_(true) {}
  static constexpr Degree negInf() { return Degree(); }
  constexpr bool isNegInf() const { return !finite_; }
  constexpr std::int64_t value() const {
    if (!finite_) throw std::logic_error("degree of the zero polynomial has no integer value");
    return v_;
  }
  constexpr std::int64_t valueOr(std::int64_t d) const { return finite_ ? v_ : d; }
  friend constexpr bool operator==(Degree a, Degree b) {
    return a.finite_ == b.finite_ && (!a.finite_ || a.v_ == b.v_);
  }
  friend constexpr bool operator<(Degree a, Degree b) {
    if (!a.finite_) return b.finite_;
    if (!b.finite_) return false;
    return a.v_ < b.v_;
  }
  friend constexpr bool operator<=(Degree a, Degree b) { return !(b < a); }
  friend constexpr bool operator>(Degree a, Degree b) { return b < a; }
  friend constexpr bool operator>=(Degree a, Degree b) { return !(a < b); }
  friend constexpr Degree operator+(Degree a, Degree b) {
    if (!a.finite_ || !b.finite_) return Degree();
    return Degree(a.v_ + b.v_);
  }
  static constexpr Degree max(Degree a, Degree b) { return a < b ? b : a; }
  std::string str() const { return finite_ ? std::to_string(v_) : "-inf"; }

 private:
  std::int64_t v_ = 0;
  bool finite_ = false;
};

using VarId = std::uint32_t;

/// Derivative data of a jet coordinate: d^|alpha| f_j / dx^alpha.
struct JetData {
  std::uint32_t function = 0;
  std::vector<std::pair<VarId, std::uint32_t>> multi;  // sorted by VarId
  std::uint32_t order = 0;
};

struct Variable {
  std::string name;
  VarKind kind;
  std::optional<JetData> jet;
};

/**
 * @brief Append-only registry of named variables shared by polynomials.
 *
 * Ids are stable; references to entries stay valid as the universe grows.
 */
class Universe {
 public:
  static std::shared_ptr<Universe> create() { return std::make_shared<Universe>(); }

  /// Adds a fresh variable; a duplicate name is an error.
  VarId add(const std::string& name, VarKind kind) {
    std::unique_lock lk(mu_);
    if (index_.count(name)) throw std::invalid_argument("variable '" + name + "' already exists");
    return push(name, kind, std::nullopt);
  }

  /// Returns the existing variable of that name (kind must agree) or adds it.
  VarId intern(const std::string& name, VarKind kind) {
    std::unique_lock lk(mu_);
    if (auto it = index_.find(name); it != index_.end()) {
      if (vars_[it->second].kind != kind)
        throw std::invalid_argument("variable '" + name + "' exists with kind " +
                                    kindName(vars_[it->second].kind));
      return it->second;
    }
    return push(name, kind, std::nullopt);
  }

  VarId internJet(const std::string& name, JetData data) {
    std::unique_lock lk(mu_);
    if (auto it = index_.find(name); it != index_.end()) {
      if (vars_[it->second].kind != VarKind::jet)
        throw std::invalid_argument("variable '" + name + "' exists and is not a jet");
      return it->second;
    }
    return push(name, VarKind::jet, std::move(data));
  }

  std::optional<VarId> find(const std::string& name) const {
    std::shared_lock lk(mu_);
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  VarId require(const std::string& name) const {
    auto v = find(name);
    if (!v) throw std::invalid_argument("unknown variable '" + name + "'");
    return *v;
  }

  const Variable& var(VarId id) const {
    std::shared_lock lk(mu_);
    if (id >= vars_.size()) throw std::out_of_range("variable id out of range");
    return vars_[id];
  }
  const std::string& name(VarId id) const { return var(id).name; }
  VarKind kind(VarId id) const { return var(id).kind; }

  std::size_t size() const {
    std::shared_lock lk(mu_);
    return vars_.size();
  }

  /// Runs f(vars) under one shared lock; f must not add variables.
  template <class F>
  decltype(auto) read(F&& f) const {
    std::shared_lock lk(mu_);
    return f(static_cast<const std::deque<Variable>&>(vars_));
  }

 private:
  VarId push(const std::string& name, VarKind kind, std::optional<JetData> jet) {
    if (name.empty()) throw std::invalid_argument("empty variable name");
    VarId id = static_cast<VarId>(vars_.size());
    vars_.push_back(Variable{name, kind, std::move(jet)});
    index_.emplace(name, id);
    return id;
  }

  mutable std::shared_mutex mu_;
  std::deque<Variable> vars_;
  std::unordered_map<std::string, VarId> index_;
};

using UniversePtr = std::shared_ptr<Universe>;

/**
 * @brief Sparse exponent vector, sorted by variable id, no zero exponents.
 *
 * Ordering is lexicographic with smaller ids more significant, which is a
 * monomial order (needed for exact division).
 */
class Monomial {
 public:
  using Factor = std::pair<VarId, std::uint32_t>;
  Monomial() = default;
  static Monomial of(VarId v, std::uint32_t e = 1) {
    Monomial m;
    if (e) m.f_.emplace_back(v, e);
    return m;
  }
  static Monomial fromFactors(std::vector<Factor> fs) {
    std::sort(fs.begin(), fs.end());
    Monomial m;
    for (auto& [v, e] : fs) {
      if (!e) continue;
      if (!m.f_.empty() && m.f_.back().first == v) m.f_.back().second += e;
      else m.f_.emplace_back(v, e);
    }
    return m;
  }

  const std::vector<Factor>& factors() const { return f_; }
  bool isOne() const { return f_.empty(); }

  std::uint32_t exponent(VarId v) const {
    auto it = std::lower_bound(f_.begin(), f_.end(), Factor{v, 0},
                               [](const Factor& a, const Factor& b) { return a.first < b.first; });
    return (it != f_.end() && it->first == v) ? it->second : 0;
  }

  Monomial operator*(const Monomial& o) const {
    Monomial r;
    r.f_.reserve(f_.size() + o.f_.size());
    std::size_t i = 0, j = 0;
    while (i < f_.size() && j < o.f_.size()) {
      if (f_[i].first < o.f_[j].first) r.f_.push_back(f_[i++]);
      else if (f_[i].first > o.f_[j].first) r.f_.push_back(o.f_[j++]);
      else { r.f_.emplace_back(f_[i].first, f_[i].second + o.f_[j].second); ++i; ++j; }
    }
    while (i < f_.size()) r.f_.push_back(f_[i++]);
    while (j < o.f_.size()) r.f_.push_back(o.f_[j++]);
    return r;
  }

  bool divides(const Monomial& o) const {
    std::size_t j = 0;
    for (auto& [v, e] : f_) {
      while (j < o.f_.size() && o.f_[j].first < v) ++j;
      if (j == o.f_.size() || o.f_[j].first != v || o.f_[j].second < e) return false;
    }
    return true;
  }

  /// o / this, assuming divides(o).
  Monomial quotientOf(const Monomial& o) const {
    Monomial r;
    std::size_t i = 0;
    for (auto& [v, e] : o.f_) {
      while (i < f_.size() && f_[i].first < v) ++i;
      std::uint32_t sub = (i < f_.size() && f_[i].first == v) ? f_[i].second : 0;
      if (e > sub) r.f_.emplace_back(v, e - sub);
    }
    return r;
  }

  /// Removes one power of v (caller guarantees presence).
  Monomial lowered(VarId v, std::uint32_t by = 1) const {
    Monomial r = *this;
    for (std::size_t i = 0; i < r.f_.size(); ++i)
      if (r.f_[i].first == v) {
        if (r.f_[i].second <= by) r.f_.erase(r.f_.begin() + static_cast<std::ptrdiff_t>(i));
        else r.f_[i].second -= by;
        break;
      }
    return r;
  }

  Monomial without(VarId v) const {
    Monomial r;
    for (auto& f : f_) if (f.first != v) r.f_.push_back(f);
    return r;
  }

  std::uint64_t degree() const {
    std::uint64_t d = 0;
    for (auto& f : f_) d += f.second;
    return d;
  }

  /// -1, 0, 1 in the monomial order.
  int compare(const Monomial& o) const {
    std::size_t n = std::min(f_.size(), o.f_.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (f_[i].first != o.f_[i].first) return f_[i].first < o.f_[i].first ? 1 : -1;
      if (f_[i].second != o.f_[i].second) return f_[i].second > o.f_[i].second ? 1 : -1;
    }
    if (f_.size() == o.f_.size()) return 0;
    return f_.size() > o.f_.size() ? 1 : -1;
  }
  bool operator==(const Monomial& o) const { return f_ == o.f_; }

  std::size_t hash() const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto& [v, e] : f_) {
      h ^= (static_cast<std::size_t>(v) << 20 ^ e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }

 private:
  std::vector<Factor> f_;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

/// Thrown when a polynomial operation would exceed the active work budget.
struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * @brief Limits the size of polynomial products on the current thread.
 *
 * Products whose term-pair count exceeds maxProductPairs, or whose result
 * exceeds maxTerms, throw BudgetExceeded while a guard is alive. maxTotalPairs
 * caps the term pairs summed over all products made under one guard.
 * Zero means unlimited.
 */
struct WorkBudget {
  std::size_t maxProductPairs = 0;
  std::size_t maxTerms = 0;
  std::size_t maxTotalPairs = 0;
};

namespace detail {
inline thread_local const WorkBudget* activeBudget = nullptr;
inline thread_local std::size_t budgetUsed = 0;
}

class BudgetGuard {
 public:
  explicit BudgetGuard(const WorkBudget& b) : prev_(detail::activeBudget), prevUsed_(detail::budgetUsed) {
    detail::activeBudget = &b;
    detail::budgetUsed = 0;
  }
  ~BudgetGuard() {
    detail::activeBudget = prev_;
    detail::budgetUsed = prevUsed_;
  }
  BudgetGuard(const BudgetGuard&) = delete;
  BudgetGuard& operator=(const BudgetGuard&) = delete;

 private:
  const WorkBudget* prev_;
  std::size_t prevUsed_;
};

class Polynomial;
Polynomial operator*(const Polynomial& a, const Polynomial& b);

/**
 * @brief Exact sparse polynomial; terms sorted by decreasing monomial order.
 */
class Polynomial {
 public:
  using Term = std::pair<Monomial, Rational>;

  Polynomial() = default;
  explicit Polynomial(UniversePtr u) : u_(std::move(u)) {}
  Polynomial(UniversePtr u, const Rational& c) : u_(std::move(u)) {
    if (c != 0) terms_.emplace_back(Monomial{}, c);
  }
  static Polynomial constant(UniversePtr u, const Rational& c) { return Polynomial(std::move(u), c); }
  static Polynomial variable(UniversePtr u, VarId v, std::uint32_t e = 1) {
    Polynomial p(std::move(u));
    p.terms_.emplace_back(Monomial::of(v, e), Rational(1));
    return p;
  }
  static Polynomial variable(UniversePtr u, const std::string& name) {
    VarId v = u->require(name);
    return variable(std::move(u), v);
  }
  static Polynomial monomial(UniversePtr u, Monomial m, const Rational& c) {
    Polynomial p(std::move(u));
    if (c != 0) p.terms_.emplace_back(std::move(m), c);
    return p;
  }
  /// Builds from arbitrary (possibly duplicated / zero) terms.
  static Polynomial fromTerms(UniversePtr u, std::vector<Term> ts) {
    Polynomial p(std::move(u));
    std::sort(ts.begin(), ts.end(), [](const Term& a, const Term& b) { return a.first.compare(b.first) > 0; });
    for (auto& t : ts) {
      if (!p.terms_.empty() && p.terms_.back().first == t.first) p.terms_.back().second += t.second;
      else {
        if (!p.terms_.empty() && p.terms_.back().second == 0) p.terms_.pop_back();
        p.terms_.push_back(std::move(t));
      }
    }
    if (!p.terms_.empty() && p.terms_.back().second == 0) p.terms_.pop_back();
    return p;
  }

  const UniversePtr& universe() const { return u_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool isZero() const { return terms_.empty(); }
  bool isConstant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].first.isOne()); }
  Rational constantValue() const {
    if (!isConstant()) throw std::logic_error("polynomial is not constant");
    return terms_.empty() ? Rational(0) : terms_[0].second;
  }
  Rational constantTerm() const {
    if (!terms_.empty() && terms_.back().first.isOne()) return terms_.back().second;
    return 0;
  }
  const Term& leadingTerm() const {
    if (terms_.empty()) throw std::logic_error("zero polynomial has no leading term");
    return terms_.front();
  }

  Polynomial zero() const { return Polynomial(u_); }
  Polynomial one() const { return Polynomial(u_, 1); }
  Polynomial constantLike(const Rational& c) const { return Polynomial(u_, c); }

  Polynomial operator-() const {
    Polynomial r = *this;
    for (auto& t : r.terms_) t.second = -t.second;
    return r;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) { return merge(a, b, false); }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return merge(a, b, true); }
  Polynomial& operator+=(const Polynomial& o) { return *this = *this + o; }
  Polynomial& operator-=(const Polynomial& o) { return *this = *this - o; }
  Polynomial& operator*=(const Polynomial& o) { return *this = *this * o; }

  Polynomial scaled(const Rational& c) const {
    if (c == 0) return zero();
    Polynomial r = *this;
    for (auto& t : r.terms_) t.second *= c;
    return r;
  }
  Polynomial mulMonomial(const Monomial& m, const Rational& c) const {
    if (c == 0) return zero();
    Polynomial r(u_);
    r.terms_.reserve(terms_.size());
    for (auto& t : terms_) r.terms_.emplace_back(t.first * m, t.second * c);
    return r;  // order preserved: the order is multiplicative
  }
  friend Polynomial operator*(const Rational& c, const Polynomial& p) { return p.scaled(c); }

  Polynomial pow(unsigned e) const {
    Polynomial result = one(), base = *this;
    if (result.u_ == nullptr) result.u_ = u_;
    while (e) {
      if (e & 1u) result = result * base;
      e >>= 1u;
      if (e) base = base * base;
    }
    return result;
  }

  bool operator==(const Polynomial& o) const {
    if (terms_.size() != o.terms_.size()) return false;
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (!(terms_[i].first == o.terms_[i].first) || terms_[i].second != o.terms_[i].second) return false;
    return true;
  }
  bool operator!=(const Polynomial& o) const { return !(*this == o); }

  /// Formal partial derivative; jet symbols are treated as constants here.
  Polynomial differentiate(VarId v) const {
    std::vector<Term> out;
    for (auto& [m, c] : terms_) {
      auto e = m.exponent(v);
      if (!e) continue;
      out.emplace_back(m.lowered(v), c * e);
    }
    // lowering one variable keeps relative order except possible ties -> normalize
    return fromTerms(u_, std::move(out));
  }

  /// Max over terms of the summed exponents of variables whose kind is counted.
  Degree totalDegree(KindSet counted = KindSet::all()) const {
    if (terms_.empty()) return Degree::negInf();
    return u_->read([&](const std::deque<Variable>& vars) {
      std::int64_t best = 0;
      for (auto& [m, c] : terms_) {
        std::int64_t d = 0;
        for (auto& [v, e] : m.factors())
          if (counted.has(vars[v].kind)) d += e;
        best = std::max(best, d);
      }
      return Degree(best);
    });
  }

  Degree degreeIn(VarId v) const {
    if (terms_.empty()) return Degree::negInf();
    std::int64_t best = 0;
    for (auto& [m, c] : terms_) best = std::max<std::int64_t>(best, m.exponent(v));
    return Degree(best);
  }

  /// Sorted list of variables occurring in some term.
  std::vector<VarId> variables() const {
    std::vector<VarId> vs;
    for (auto& [m, c] : terms_)
      for (auto& f : m.factors()) vs.push_back(f.first);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    return vs;
  }
  bool dependsOn(VarId v) const {
    for (auto& [m, c] : terms_)
      if (m.exponent(v)) return true;
    return false;
  }

  /// Coefficient list in powers of v: result[i] is the coefficient of v^i.
  std::vector<Polynomial> coefficientsIn(VarId v) const {
    std::vector<std::vector<Term>> buckets;
    for (auto& [m, c] : terms_) {
      auto e = m.exponent(v);
      if (buckets.size() <= e) buckets.resize(e + 1);
      buckets[e].emplace_back(m.without(v), c);
    }
    std::vector<Polynomial> out;
    out.reserve(buckets.size());
    for (auto& b : buckets) out.push_back(fromTerms(u_, std::move(b)));
    return out;
  }

  /// Exact evaluation; every occurring variable must be assigned.
  Rational evaluate(const std::unordered_map<VarId, Rational>& at) const {
    Rational acc = 0;
    for (auto& [m, c] : terms_) {
      Rational t = c;
      for (auto& [v, e] : m.factors()) {
        auto it = at.find(v);
        if (it == at.end()) throw std::invalid_argument("evaluate: variable '" + u_->name(v) + "' not assigned");
        Rational pw;
        mpz_pow_ui(pw.get_num_mpz_t(), it->second.get_num_mpz_t(), e);
        mpz_pow_ui(pw.get_den_mpz_t(), it->second.get_den_mpz_t(), e);
        t *= pw;
      }
      acc += t;
    }
    return acc;
  }

  /**
   * @brief Floating evaluation.
   * Coefficients are converted with mpq_get_d (truncation toward zero), then
   * IEEE double arithmetic in the current rounding mode (round to nearest).
   */
  double evaluate(const std::unordered_map<VarId, double>& at) const {
    double acc = 0;
    for (auto& [m, c] : terms_) {
      double t = c.get_d();
      for (auto& [v, e] : m.factors()) {
        auto it = at.find(v);
        if (it == at.end()) throw std::invalid_argument("evaluate: variable '" + u_->name(v) + "' not assigned");
        t *= std::pow(it->second, static_cast<double>(e));
      }
      acc += t;
    }
    return acc;
  }

  /// Simultaneous substitution of variables by polynomials.
  Polynomial substitute(const std::unordered_map<VarId, Polynomial>& s) const {
    std::map<std::pair<VarId, std::uint32_t>, Polynomial> powCache;
    auto power = [&](VarId v, std::uint32_t e) -> const Polynomial& {
      auto key = std::make_pair(v, e);
      auto it = powCache.find(key);
      if (it != powCache.end()) return it->second;
      return powCache.emplace(key, s.at(v).pow(e)).first->second;
    };
    std::vector<Term> direct;
    Polynomial acc(u_);
    for (auto& [m, c] : terms_) {
      Monomial kept;
      std::vector<std::pair<VarId, std::uint32_t>> subs;
      std::vector<Monomial::Factor> keptF;
      for (auto& f : m.factors()) {
        if (s.count(f.first)) subs.push_back(f);
        else keptF.push_back(f);
      }
      kept = Monomial::fromFactors(keptF);
      if (subs.empty()) { direct.emplace_back(kept, c); continue; }
      Polynomial t = Polynomial::monomial(u_, kept, c);
      for (auto& [v, e] : subs) t = t * power(v, e);
      acc += t;
    }
    return acc + fromTerms(u_, std::move(direct));
  }

  Polynomial substitute(VarId v, const Polynomial& q) const { return substitute({{v, q}}); }

  /// Exact quotient; throws if the division leaves a remainder.
  Polynomial divideExact(const Polynomial& q) const {
    if (q.isZero()) throw std::domain_error("division by the zero polynomial");
    if (q.isConstant()) return scaled(Rational(1) / q.constantValue());
    auto cmp = [](const Monomial& a, const Monomial& b) { return a.compare(b) > 0; };
    std::map<Monomial, Rational, decltype(cmp)> rem(cmp);
    for (auto& t : terms_) rem.emplace(t.first, t.second);
    const auto& [lm, lc] = q.leadingTerm();
    std::vector<Term> quot;
    while (!rem.empty()) {
      auto it = rem.begin();
      if (!lm.divides(it->first)) throw std::domain_error("divideExact: not divisible");
      Monomial qm = lm.quotientOf(it->first);
      Rational qc = it->second / lc;
      for (auto& [m, c] : q.terms_) {
        Monomial pm = m * qm;
        auto jt = rem.find(pm);
        Rational delta = c * qc;
        if (jt == rem.end()) rem.emplace(std::move(pm), -delta);
        else {
          jt->second -= delta;
          if (jt->second == 0) rem.erase(jt);
        }
      }
      quot.emplace_back(std::move(qm), std::move(qc));
      if (const WorkBudget* wb = detail::activeBudget) {
        if (wb->maxTerms && rem.size() > wb->maxTerms) throw BudgetExceeded("division remainder exceeds term budget");
        detail::budgetUsed += q.terms_.size();
        if (wb->maxTotalPairs && detail::budgetUsed > wb->maxTotalPairs)
          throw BudgetExceeded("cumulative product work exceeds budget");
      }
    }
    return fromTerms(u_, std::move(quot));
  }

  /// Divides by the gcd of numerators times sign so that coefficients are
  /// coprime integers and the leading coefficient is positive.
  Polynomial primitive() const {
    if (terms_.empty()) return *this;
    BigInt g = 0, l = 1;
    for (auto& t : terms_) {
      mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), t.second.get_num_mpz_t());
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), t.second.get_den_mpz_t());
    }
    Rational f(l, g);
    if (terms_.front().second < 0) f = -f;
    return scaled(f);
  }

  /// Canonical text form: monomials by decreasing degree, then by names.
  std::string str() const;

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  const UniversePtr& adoptUniverse(const Polynomial& o) const { return u_ ? u_ : o.u_; }

 private:
  static void checkUniverse(const Polynomial& a, const Polynomial& b) {
    if (a.u_ && b.u_ && a.u_ != b.u_) throw std::invalid_argument("polynomials from different variable universes");
  }
  static Polynomial merge(const Polynomial& a, const Polynomial& b, bool negateB) {
    checkUniverse(a, b);
    Polynomial r(a.adoptUniverse(b));
    r.terms_.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      int c;
      if (i == a.terms_.size()) c = -1;
      else if (j == b.terms_.size()) c = 1;
      else c = a.terms_[i].first.compare(b.terms_[j].first);
      if (c > 0) r.terms_.push_back(a.terms_[i++]);
      else if (c < 0) {
        r.terms_.push_back(b.terms_[j++]);
        if (negateB) r.terms_.back().second = -r.terms_.back().second;
      } else {
        Rational s = negateB ? Rational(a.terms_[i].second - b.terms_[j].second)
                             : Rational(a.terms_[i].second + b.terms_[j].second);
        if (s != 0) r.terms_.emplace_back(a.terms_[i].first, std::move(s));
        ++i; ++j;
      }
    }
    return r;
  }

  UniversePtr u_;
  std::vector<Term> terms_;
};

inline Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial::checkUniverse(a, b);
  const UniversePtr& u = a.adoptUniverse(b);
  if (a.isZero() || b.isZero()) return Polynomial(u);
  const Polynomial& small = a.size() <= b.size() ? a : b;
  const Polynomial& big = a.size() <= b.size() ? b : a;
  if (small.size() == 1) {
    Polynomial r = big.mulMonomial(small.terms_[0].first, small.terms_[0].second);
    r.u_ = u;
    return r;
  }
  if (const WorkBudget* wb = detail::activeBudget) {
    if (wb->maxProductPairs && small.size() * big.size() > wb->maxProductPairs)
      throw BudgetExceeded("polynomial product exceeds pair budget");
    detail::budgetUsed += small.size() * big.size();
    if (wb->maxTotalPairs && detail::budgetUsed > wb->maxTotalPairs)
      throw BudgetExceeded("cumulative product work exceeds budget");
  }
  std::unordered_map<Monomial, Rational, MonomialHash> acc;
  acc.reserve(small.size() * big.size() / 2 + 16);
  for (auto& [ma, ca] : small.terms_)
    for (auto& [mb, cb] : big.terms_) {
      auto [it, fresh] = acc.try_emplace(ma * mb, 0);
      it->second += ca * cb;
    }
  std::vector<Polynomial::Term> ts;
  ts.reserve(acc.size());
  for (auto& [m, c] : acc)
    if (c != 0) ts.emplace_back(m, c);
  std::sort(ts.begin(), ts.end(), [](const auto& x, const auto& y) { return x.first.compare(y.first) > 0; });
  Polynomial r(u);
  r.terms_ = std::move(ts);
  if (const WorkBudget* wb = detail::activeBudget)
    if (wb->maxTerms && r.size() > wb->maxTerms) throw BudgetExceeded("polynomial product exceeds term budget");
  return r;
}

inline Polynomial operator+(const Polynomial& p, const Rational& c) { return p + p.constantLike(c); }
inline Polynomial operator-(const Polynomial& p, const Rational& c) { return p - p.constantLike(c); }
inline Polynomial operator+(const Rational& c, const Polynomial& p) { return p.constantLike(c) + p; }
inline Polynomial operator-(const Rational& c, const Polynomial& p) { return p.constantLike(c) - p; }

inline std::string monomialString(const Universe& u, const Monomial& m) {
  std::vector<std::pair<std::string, std::uint32_t>> parts;
  for (auto& [v, e] : m.factors()) parts.emplace_back(u.name(v), e);
  std::sort(parts.begin(), parts.end());
  std::string s;
  for (auto& [n, e] : parts) {
    if (!s.empty()) s += '*';
    s += n;
    if (e != 1) s += '^' + std::to_string(e);
  }
  return s;
}

inline std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  struct Row { std::uint64_t deg; std::string mono; const Rational* c; };
  std::vector<Row> rows;
  rows.reserve(terms_.size());
  for (auto& [m, c] : terms_) rows.push_back({m.degree(), monomialString(*u_, m), &c});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.deg != b.deg) return a.deg > b.deg;
    return a.mono < b.mono;
  });
  std::string s;
  bool first = true;
  for (auto& r : rows) {
    Rational c = *r.c;
    bool neg = c < 0;
    if (neg) c = -c;
    if (first) s += neg ? "-" : "";
    else s += neg ? " - " : " + ";
    first = false;
    if (r.mono.empty()) s += c.get_str();
    else if (c == 1) s += r.mono;
    else s += c.get_str() + "*" + r.mono;
  }
  return s;
}

inline std::ostream& operator<<(std::ostream& os, const Polynomial& p) { return os << p.str(); }

// ---------------------------------------------------------------------------
// Parsing

/**
 * @brief Parses + - * / ^ ( ) expressions with integer/decimal literals.
 *
 * Unknown identifiers are interned with `newKind` unless `strict`. An
 * identifier may carry a bracketed suffix (jet names such as f1[y1^2*e1]);
 * such names must already exist. Division is allowed by constants only.
 */
class PolyParser {
 public:
  PolyParser(UniversePtr u, VarKind newKind = VarKind::phase, bool strict = false)
      : u_(std::move(u)), kind_(newKind), strict_(strict) {}

  Polynomial parse(std::string_view text) {
    s_ = text;
    i_ = 0;
    Polynomial p = expr();
    skip();
    if (i_ != s_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("polynomial parse error at offset " + std::to_string(i_) + ": " + msg);
  }
  void skip() { while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_; }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) { ++i_; return true; }
    return false;
  }
  Polynomial expr() {
    Polynomial acc = term();
    for (;;) {
      if (eat('+')) acc = acc + term();
      else if (eat('-')) acc = acc - term();
      else return acc;
    }
  }
  Polynomial term() {
    Polynomial acc = unary();
    for (;;) {
      skip();
      if (eat('*')) acc = acc * unary();
      else if (eat('/')) {
        Polynomial d = unary();
        if (!d.isConstant() || d.isZero()) fail("division by a non-constant or zero");
        acc = acc.scaled(Rational(1) / d.constantValue());
      } else return acc;
    }
  }
  Polynomial unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  Polynomial power() {
    Polynomial b = primary();
    if (eat('^')) {
      skip();
      std::size_t st = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (st == i_) fail("expected integer exponent");
      b = b.pow(static_cast<unsigned>(std::stoul(std::string(s_.substr(st, i_ - st)))));
    }
    return b;
  }
  Polynomial primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of input");
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      Polynomial p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t st = i_;
      while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) ++i_;
      std::string lit(s_.substr(st, i_ - st));
      auto dot = lit.find('.');
      Rational q;
      if (dot == std::string::npos) q = Rational(BigInt(lit, 10));
      else {
        std::string digits = lit.substr(0, dot) + lit.substr(dot + 1);
        if (digits.empty()) fail("bad number");
        BigInt den = 1;
        for (std::size_t k = dot + 1; k < lit.size(); ++k) den *= 10;
        q = Rational(BigInt(digits, 10), den);
        q.canonicalize();
      }
      return Polynomial(u_, q);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t st = i_;
      while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '\''))
        ++i_;
      bool bracket = false;
      if (i_ < s_.size() && s_[i_] == '[') {
        bracket = true;
        int depth = 0;
        do {
          if (s_[i_] == '[') ++depth;
          else if (s_[i_] == ']') --depth;
          ++i_;
        } while (i_ < s_.size() && depth > 0);
        if (depth) fail("unterminated '['");
      }
      std::string name(s_.substr(st, i_ - st));
      auto id = u_->find(name);
      if (!id) {
        if (strict_ || bracket) fail("unknown variable '" + name + "'");
        id = u_->intern(name, kind_);
      }
      return Polynomial::variable(u_, *id);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  UniversePtr u_;
  VarKind kind_;
  bool strict_;
  std::string_view s_;
  std::size_t i_ = 0;
};

inline Polynomial parsePolynomial(const UniversePtr& u, std::string_view text, VarKind newKind = VarKind::phase,
                                  bool strict = false) {
  return PolyParser(u, newKind, strict).parse(text);
}

// ---------------------------------------------------------------------------
// Determinants

using PolyMatrix = std::vector<std::vector<Polynomial>>;

inline void checkSquare(const PolyMatrix& m) {
  for (auto& row : m)
    if (row.size() != m.size()) throw std::invalid_argument("determinant: matrix is not square");
}

namespace detail {
inline UniversePtr matrixUniverse(const PolyMatrix& m) {
  for (auto& r : m)
    for (auto& e : r)
      if (e.universe()) return e.universe();
  return nullptr;
}
}  // namespace detail

/// Laplace expansion along the first row.
inline Polynomial cofactorDeterminant(const PolyMatrix& m) {
  checkSquare(m);
  UniversePtr u = detail::matrixUniverse(m);
  const std::size_t n = m.size();
  if (n == 0) return Polynomial(u, 1);
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Polynomial acc(u);
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].isZero()) continue;
    PolyMatrix minor(n - 1);
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t c = 0; c < n; ++c)
        if (c != j) minor[i - 1].push_back(m[i][c]);
    Polynomial t = m[0][j] * cofactorDeterminant(minor);
    acc = (j % 2 == 0) ? acc + t : acc - t;
  }
  return acc;
}

/// Fraction-free Gaussian elimination (Bareiss) with exact divisions.
inline Polynomial bareissDeterminant(PolyMatrix a) {
  checkSquare(a);
  UniversePtr u = detail::matrixUniverse(a);
  const std::size_t n = a.size();
  if (n == 0) return Polynomial(u, 1);
  bool negate = false;
  Polynomial prev(u, 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    // pivot: nonzero entry with fewest terms
    std::size_t piv = n;
    for (std::size_t i = k; i < n; ++i)
      if (!a[i][k].isZero() && (piv == n || a[i][k].size() < a[piv][k].size())) piv = i;
    if (piv == n) return Polynomial(u);
    if (piv != k) { std::swap(a[piv], a[k]); negate = !negate; }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        Polynomial num = a[k][k] * a[i][j] - a[i][k] * a[k][j];
        a[i][j] = num.divideExact(prev);
      }
      a[i][k] = Polynomial(u);
    }
    prev = a[k][k];
  }
  Polynomial d = a[n - 1][n - 1];
  return negate ? -d : d;
}

/**
 * @brief Exact determinant.
 *
 * Rows or columns with a single nonzero entry are expanded first; the
 * remaining block uses cofactor expansion below size 4 and Bareiss otherwise.
 */
inline Polynomial determinant(const PolyMatrix& m) {
  checkSquare(m);
  UniversePtr u = detail::matrixUniverse(m);
  std::vector<std::size_t> rows(m.size()), cols(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) rows[i] = cols[i] = i;
  Polynomial factor(u, 1);
  bool progress = true;
  while (progress && rows.size() > 0) {
    progress = false;
    // a zero row or column kills the determinant
    for (std::size_t ri = 0; ri < rows.size() && !progress; ++ri) {
      std::size_t nz = 0, at = 0;
      for (std::size_t ci = 0; ci < cols.size(); ++ci)
        if (!m[rows[ri]][cols[ci]].isZero()) { ++nz; at = ci; }
      if (nz == 0) return Polynomial(u);
      if (nz == 1) {
        Polynomial e = m[rows[ri]][cols[at]];
        if ((ri + at) % 2) e = -e;
        factor = factor * e;
        rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(ri));
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(at));
        progress = true;
      }
    }
    for (std::size_t ci = 0; ci < cols.size() && !progress; ++ci) {
      std::size_t nz = 0, at = 0;
      for (std::size_t ri = 0; ri < rows.size(); ++ri)
        if (!m[rows[ri]][cols[ci]].isZero()) { ++nz; at = ri; }
      if (nz == 0) return Polynomial(u);
      if (nz == 1) {
        Polynomial e = m[rows[at]][cols[ci]];
        if ((ci + at) % 2) e = -e;
        factor = factor * e;
        rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(at));
        cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(ci));
        progress = true;
      }
    }
  }
  PolyMatrix sub(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (auto c : cols) sub[i].push_back(m[rows[i]][c]);
  Polynomial rest = sub.size() < 4 ? cofactorDeterminant(sub) : bareissDeterminant(sub);
  return factor * rest;
}

/// Sylvester resultant with respect to v.
inline Polynomial resultant(const Polynomial& f, const Polynomial& g, VarId v) {
  auto a = f.coefficientsIn(v), b = g.coefficientsIn(v);
  while (!a.empty() && a.back().isZero()) a.pop_back();
  while (!b.empty() && b.back().isZero()) b.pop_back();
  UniversePtr u = f.adoptUniverse(g);
  if (a.empty() || b.empty()) return Polynomial(u);
  const std::size_t m = a.size() - 1, n = b.size() - 1;
  if (m == 0) return a[0].pow(static_cast<unsigned>(n));
  if (n == 0) return b[0].pow(static_cast<unsigned>(m));
  const std::size_t N = m + n;
  PolyMatrix s(N, std::vector<Polynomial>(N, Polynomial(u)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= m; ++j) s[i][i + j] = a[m - j];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= n; ++j) s[n + i][i + j] = b[n - j];
  return determinant(s);
}

}  // namespace polycyc
