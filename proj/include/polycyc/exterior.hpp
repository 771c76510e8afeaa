#pragma once
// Polynomial 1-forms, the asterisk of a top wedge, and Cartesian jets.

#include <map>
#include <set>

#include "polycyc/polyring.hpp"

namespace polycyc {

inline bool isBaseKind(VarKind k) { return k == VarKind::phase || k == VarKind::parameter; }

/**
 * @brief A 1-form sum_v c_v dv over base variables.
 */
class OneForm {
 public:
  OneForm() = default;
  explicit OneForm(UniversePtr u) : u_(std::move(u)) {}

  static OneForm differential(UniversePtr u, VarId v) {
    OneForm f(u);
    f.set(v, Polynomial(u, 1));
    return f;
  }

  void set(VarId v, Polynomial c) {
    if (!u_) u_ = c.universe();
    if (!isBaseKind(u_->kind(v)))
      throw std::invalid_argument("d" + u_->name(v) + ": differentials exist only for base variables");
    if (c.isZero()) c_.erase(v);
    else c_[v] = std::move(c);
  }
  void add(VarId v, const Polynomial& c) { set(v, coeff(v) + c); }

  Polynomial coeff(VarId v) const {
    auto it = c_.find(v);
    return it == c_.end() ? Polynomial(u_) : it->second;
  }
  const std::map<VarId, Polynomial>& coefficients() const { return c_; }
  const UniversePtr& universe() const { return u_; }
  bool isZero() const { return c_.empty(); }

  OneForm scaled(const Polynomial& p) const {
    OneForm r(u_);
    for (auto& [v, c] : c_) r.set(v, c * p);
    return r;
  }
  friend OneForm operator+(const OneForm& a, const OneForm& b) {
    OneForm r = a;
    if (!r.u_) r.u_ = b.u_;
    for (auto& [v, c] : b.c_) r.add(v, c);
    return r;
  }

  /// Max coefficient degree over the counted kinds.
  Degree degree(KindSet counted) const {
    Degree d = Degree::negInf();
    for (auto& [v, c] : c_) d = Degree::max(d, c.totalDegree(counted));
    return d;
  }

  /// "c1 dx1 + c2 dx2" in the order of the given coordinates.
  std::string str(const std::vector<VarId>& order) const {
    std::string s;
    for (VarId v : order) {
      auto it = c_.find(v);
      if (it == c_.end()) continue;
      if (!s.empty()) s += " + ";
      s += "(" + it->second.str() + ") d" + u_->name(v);
    }
    return s.empty() ? "0" : s;
  }
  std::string str() const {
    std::vector<VarId> order;
    for (auto& [v, c] : c_) order.push_back(v);
    return str(order);
  }

 private:
  UniversePtr u_;
  std::map<VarId, Polynomial> c_;
};

/**
 * @brief Asterisk of w_1 ^ ... ^ w_n against dx_1 ^ ... ^ dx_n in `coords` order.
 */
inline Polynomial wedgeAsterisk(const std::vector<OneForm>& forms, const std::vector<VarId>& coords) {
  if (forms.size() != coords.size())
    throw std::invalid_argument("wedgeAsterisk: " + std::to_string(forms.size()) + " forms on a " +
                                std::to_string(coords.size()) + "-dimensional base");
  std::set<VarId> allowed(coords.begin(), coords.end());
  PolyMatrix m;
  for (auto& f : forms) {
    for (auto& [v, c] : f.coefficients())
      if (!allowed.count(v)) throw std::invalid_argument("wedgeAsterisk: form has a dv outside the base coordinates");
    std::vector<Polynomial> row;
    for (VarId v : coords) row.push_back(f.coeff(v));
    m.push_back(std::move(row));
  }
  return determinant(m);
}

/**
 * @brief Cartesian type: f_j depends only on the coordinates in I_j.
 */
struct CartesianType {
  std::vector<std::string> names;             // function names f_1..f_n
  std::vector<std::vector<VarId>> dependency;  // I_1..I_n

  std::size_t size() const { return names.size(); }
  void validate(const std::vector<VarId>& coords) const {
    if (names.size() != dependency.size()) throw std::invalid_argument("CartesianType: names/dependency size mismatch");
    std::set<VarId> base(coords.begin(), coords.end());
    for (std::size_t j = 0; j < dependency.size(); ++j) {
      if (dependency[j].empty()) throw std::invalid_argument("CartesianType: empty dependency set for " + names[j]);
      for (VarId v : dependency[j])
        if (!base.count(v)) throw std::invalid_argument("CartesianType: dependency outside the base for " + names[j]);
    }
  }
};

struct JetOrderExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * @brief Jet coordinates of a Cartesian tuple of black-box functions.
 *
 * Jet symbols are interned into the shared universe as kind-jet variables.
 * The object caches the map (jet, base variable) -> differentiated jet.
 */
class JetSpace {
 public:
  JetSpace(UniversePtr u, std::vector<VarId> coords, CartesianType type, std::uint32_t cap)
      : u_(std::move(u)), coords_(std::move(coords)), type_(std::move(type)), cap_(cap) {
    type_.validate(coords_);
    for (VarId v : coords_)
      if (!isBaseKind(u_->kind(v))) throw std::invalid_argument("JetSpace: coordinate '" + u_->name(v) + "' is not a base variable");
    for (std::size_t j = 0; j < type_.size(); ++j) {
      std::set<VarId> s(type_.dependency[j].begin(), type_.dependency[j].end());
      deps_.push_back(std::move(s));
    }
  }

  const UniversePtr& universe() const { return u_; }
  const std::vector<VarId>& coords() const { return coords_; }
  const CartesianType& type() const { return type_; }
  std::uint32_t cap() const { return cap_; }
  void setCap(std::uint32_t c) { cap_ = c; }
  bool inDependency(std::uint32_t j, VarId v) const { return deps_.at(j).count(v) > 0; }

  /// Jet variable for d^alpha f_j.
  VarId jet(std::uint32_t j, std::vector<std::pair<VarId, std::uint32_t>> multi) {
    if (j >= type_.size()) throw std::out_of_range("jet: function index out of range");
    std::sort(multi.begin(), multi.end());
    JetData d;
    d.function = j;
    for (auto& [v, e] : multi) {
      if (!e) continue;
      if (!inDependency(j, v)) throw std::invalid_argument("jet: variable outside the dependency set");
      d.multi.emplace_back(v, e);
      d.order += e;
    }
    if (d.order > cap_)
      throw JetOrderExceeded("jet order " + std::to_string(d.order) + " of " + type_.names[j] + " exceeds cap " +
                             std::to_string(cap_));
    return u_->internJet(jetName(d), d);
  }
  Polynomial value(std::uint32_t j) { return Polynomial::variable(u_, jet(j, {})); }

  /// Total derivative D_v treating jets as coordinates on jet space.
  Polynomial differentiate(const Polynomial& p, VarId v) {
    std::vector<Polynomial::Term> out;
    for (auto& [m, c] : p.terms()) {
      for (auto& [w, e] : m.factors()) {
        if (w == v) {
          out.emplace_back(m.lowered(v), c * e);
          continue;
        }
        const Variable& var = u_->var(w);
        if (var.kind != VarKind::jet) continue;
        if (!inDependency(var.jet->function, v)) continue;
        VarId shifted = shift(w, v);
        out.emplace_back(m.lowered(w) * Monomial::of(shifted), c * e);
      }
    }
    return Polynomial::fromTerms(p.universe() ? p.universe() : u_, std::move(out));
  }

  /// dF = sum_v D_v F dv over the coordinates.
  OneForm exteriorDerivative(const Polynomial& f) {
    OneForm w(u_);
    for (VarId v : coords_) w.set(v, differentiate(f, v));
    return w;
  }

  /// Variables of coords that can be hit by D_v of a polynomial containing jets of f_j.
  const std::set<VarId>& dependency(std::uint32_t j) const { return deps_.at(j); }

  /**
   * @brief Replaces every jet symbol of p by the matching partial derivative
   * of the concrete polynomial fs[j].
   */
  Polynomial instantiate(const Polynomial& p, const std::vector<Polynomial>& fs) const {
    if (fs.size() != type_.size()) throw std::invalid_argument("instantiate: wrong number of functions");
    std::unordered_map<VarId, Polynomial> subs;
    for (VarId v : p.variables()) {
      const Variable& var = u_->var(v);
      if (var.kind != VarKind::jet) continue;
      Polynomial d = fs[var.jet->function];
      for (auto& [w, e] : var.jet->multi)
        for (std::uint32_t k = 0; k < e; ++k) d = d.differentiate(w);
      subs.emplace(v, d);
    }
    return subs.empty() ? p : p.substitute(subs);
  }

  std::string jetName(const JetData& d) const {
    std::string s = type_.names[d.function];
    if (d.multi.empty()) return s;
    s += '[';
    bool first = true;
    for (auto& [v, e] : d.multi) {
      if (!first) s += '*';
      first = false;
      s += u_->name(v);
      if (e != 1) s += '^' + std::to_string(e);
    }
    return s + ']';
  }

 private:
  VarId shift(VarId jetVar, VarId v) {
    {
      std::lock_guard lk(cacheMu_);
      auto it = shiftCache_.find({jetVar, v});
      if (it != shiftCache_.end()) return it->second;
    }
    const JetData& d = *u_->var(jetVar).jet;
    auto multi = d.multi;
    bool found = false;
    for (auto& [w, e] : multi)
      if (w == v) { ++e; found = true; }
    if (!found) multi.emplace_back(v, 1);
    VarId r = jet(d.function, multi);
    std::lock_guard lk(cacheMu_);
    shiftCache_[{jetVar, v}] = r;
    return r;
  }

  UniversePtr u_;
  std::vector<VarId> coords_;
  CartesianType type_;
  std::uint32_t cap_;
  std::vector<std::set<VarId>> deps_;
  std::mutex cacheMu_;
  std::map<std::pair<VarId, VarId>, VarId> shiftCache_;
};

/// Functional equation F (polynomial in base variables and order-0 jets) with its target symbol.
struct FunctionalEquation {
  Polynomial expression;
  std::string target;
};

}  // namespace polycyc
