#pragma once
// Verification suites shared by the command line tool and the acceptance binary.
// Every suite returns a JSON report; reports contain no timings so that equal
// configurations give byte-identical output.

#include <cfloat>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "polycyc/cones.hpp"
#include "polycyc/numerics.hpp"
#include "polycyc/principal.hpp"

namespace polycyc::tools {

struct Tolerances {
  double newton = 1e-10;      // Newton step at convergence
  double residual = 1e-10;    // preimage residual
  double separating = 1e-8;   // separating-solution residual
  double symmetry = 1e-12;    // Q_P symmetry and the sin^2 grid inequality
};

struct RunConfig {
  std::string command;
  std::string suite;
  std::uint64_t seed = 1;
  unsigned q = 2;
  double eps1 = 1e-2;
  Tolerances tol;
  std::string out;
  Json flags = Json::object();

  Json toJson() const {
    Json j;
    j["command"] = command;
    if (!suite.empty()) j["suite"] = suite;
    j["seed"] = std::to_string(seed);
    j["q"] = q;
    j["eps1"] = eps1;
    j["tolerances"] = {{"newton", tol.newton}, {"residual", tol.residual}, {"separating", tol.separating},
                       {"symmetry", tol.symmetry}};
    if (!out.empty()) j["out"] = out;
    if (!flags.empty()) j["flags"] = flags;
    return j;
  }

  /// Overrides fields present in a parsed config file.
  void apply(const Json& j) {
    if (j.contains("seed")) seed = j["seed"].is_string() ? std::stoull(j["seed"].get<std::string>()) : j["seed"].get<std::uint64_t>();
    if (j.contains("q")) q = j["q"].get<unsigned>();
    if (j.contains("eps1")) eps1 = j["eps1"].get<double>();
    if (j.contains("tolerances")) {
      auto& t = j["tolerances"];
      tol.newton = t.value("newton", tol.newton);
      tol.residual = t.value("residual", tol.residual);
      tol.separating = t.value("separating", tol.separating);
      tol.symmetry = t.value("symmetry", tol.symmetry);
    }
    for (auto& [key, _] : j.items())
      if (key != "seed" && key != "q" && key != "eps1" && key != "tolerances")
        throw std::invalid_argument("config: unknown key '" + key + "'");
  }
};

namespace detail {

/// Flat TOML: `key = value` lines, `[table]` headers, `#` comments, numbers, booleans and strings.
inline Json parseTomlSubset(std::istream& in) {
  Json root = Json::object();
  Json* table = &root;
  std::string line;
  int lineNo = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineNo;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(lineNo) + ": bad table header");
      table = &root[trim(line.substr(1, line.size() - 2))];
      *table = Json::object();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineNo) + ": expected key = value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"') (*table)[key] = val.substr(1, val.size() - 2);
    else if (val == "true" || val == "false") (*table)[key] = val == "true";
    else {
      val.erase(std::remove(val.begin(), val.end(), '_'), val.end());
      try {
        (*table)[key] = Json::parse(val);
      } catch (const Json::exception&) {
        throw std::invalid_argument("config line " + std::to_string(lineNo) + ": bad value '" + val + "'");
      }
    }
  }
  return root;
}

}  // namespace detail

/// Reads a .json or .toml config file.
inline Json readConfigFile(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::invalid_argument("cannot open config " + p.string());
  if (p.extension() == ".toml") return detail::parseTomlSubset(in);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("config " + p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// helpers

inline std::mt19937_64 sectionRng(const RunConfig& cfg, std::uint64_t section) {
  std::seed_seq s{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                  static_cast<std::uint32_t>(section)};
  return std::mt19937_64(s);
}

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

inline Json vectorJson(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

inline NewtonConfig newtonFrom(const RunConfig& cfg) {
  NewtonConfig n;
  n.tol = cfg.tol.newton;
  n.residualTol = cfg.tol.residual;
  return n;
}

/// Wraps a suite body with schema, config and the failure list.
inline Json report(const RunConfig& cfg, Json body, const std::vector<std::string>& failures) {
  Json j;
  j["schema"] = "1";
  j["config"] = cfg.toJson();
  for (auto& [k, v] : body.items()) j[k] = v;
  j["failures"] = failures;
  j["pass"] = failures.empty();
  return j;
}

inline Json countJson(const CountResult& r) {
  Json j;
  j["count"] = r.count;
  j["confidence"] = r.confidence;
  double worst = 0;
  for (double x : r.residuals) worst = std::max(worst, x);
  j["max_residual"] = worst;
  j["seeds"] = r.seeds;
  j["converged"] = r.converged;
  j["stalled"] = r.stalled;
  return j;
}

// ---------------------------------------------------------------------------
// idealistic example

inline Json idealisticBody(const RunConfig& cfg, std::vector<std::string>& failures) {
  auto e = idealisticExample(cfg.seed);
  auto nc = newtonFrom(cfg);
  Json body;
  body["map"] = {e.P[0].str(), e.P[1].str()};
  Json F = Json::array();
  for (auto& f : e.family.F) F.push_back(f.str());
  body["F"] = F;
  Json runs = Json::array();
  std::optional<std::size_t> first;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    auto tF = compositeTask(e, e.family.F, vec2(eps, 0), 0.5, nc);
    auto tL = compositeTask(e, e.family.LF, vec2(eps, 0), 0.5, nc);
    auto rF = countPreimages(tF), rL = countPreimages(tL);
    BigInt bz = bezoutBound(tF.system);
    Json run;
    run["eps"] = eps;
    run["F"] = countJson(rF);
    run["LF"] = countJson(rL);
    run["bezout"] = bz.get_str();
    runs.push_back(run);
    if (!first) first = rF.count;
    const std::string tag = "idealistic count at eps " + Json(eps).dump();
    if (rF.count != 4) failures.push_back(tag + ": F gives " + std::to_string(rF.count));
    if (rL.count != rF.count) failures.push_back(tag + ": linear part gives " + std::to_string(rL.count));
    for (auto* r : {&rF, &rL})
      for (double res : r->residuals)
        if (res > cfg.tol.residual) failures.push_back(tag + ": residual " + Json(res).dump());
    if (BigInt(static_cast<long>(rF.count)) > bz) failures.push_back(tag + ": count exceeds Bezout bound " + bz.get_str());
  }
  body["runs"] = runs;
  Json decay = Json::array();
  std::set<unsigned> qs{2, 3, 4, cfg.q};
  for (unsigned q : qs) {
    auto eps = DecaySchedule{cfg.eps1, q}.values(2);
    auto r = countPreimages(compositeTask(e, e.family.F, vec2(eps[0], eps[1]), 0.5, nc));
    decay.push_back({{"q", q}, {"target", {eps[0], eps[1]}}, {"count", r.count}, {"confidence", r.confidence}});
    if (r.count != 4) failures.push_back("decay schedule q = " + std::to_string(q) + ": count " + std::to_string(r.count));
  }
  body["decay"] = decay;
  body["count"] = *first;
  body["expected"] = 4;
  return body;
}

inline Json idealisticSuite(const RunConfig& cfg) {
  std::vector<std::string> f;
  Json b = idealisticBody(cfg, f);
  return report(cfg, b, f);
}

// ---------------------------------------------------------------------------
// homotopy invariance

inline Json homotopyJson(const HomotopyVerdict& v) {
  Json j;
  j["ts"] = v.ts;
  j["counts"] = v.counts;
  Json ms = Json::array();
  for (double s : v.minSingular) ms.push_back(std::isfinite(s) ? Json(s) : Json(nullptr));
  j["min_singular"] = ms;
  j["constant"] = v.constant;
  j["transversal"] = v.transversal;
  j["verdict"] = v.pass ? "holds" : "fails";
  if (v.tStar) {
    j["t_star"] = *v.tStar;
    j["bracket"] = {v.bracket.first, v.bracket.second};
  }
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

inline Json homotopyBody(const RunConfig& cfg, std::vector<std::string>& failures) {
  auto nc = newtonFrom(cfg);
  Json body;
  auto ideal = homotopyInvarianceCheck(idealisticExample(cfg.seed), vec2(1e-3, 0), 0.5, {}, nc);
  body["idealistic"] = homotopyJson(ideal);
  if (!ideal.pass) failures.push_back("idealistic family: " + ideal.reason);
  for (auto c : ideal.counts)
    if (c != 4) {
      failures.push_back("idealistic family: count " + std::to_string(c) + " along the path");
      break;
    }
  const double eps = 1e-2, r = 0.5;
  auto tan = homotopyInvarianceCheck(tangencyExample(), vec2(eps, 0), r, {}, nc);
  Json tj = homotopyJson(tan);
  const double predicted = 0.5 * (1 + eps / (r * r));
  tj["predicted_t_star"] = predicted;
  body["tangency"] = tj;
  if (tan.pass) failures.push_back("tangency family: failure not detected");
  else if (!tan.tStar) failures.push_back("tangency family: failure not localized");
  else if (std::fabs(*tan.tStar - predicted) > 1e-3) failures.push_back("tangency family: t* = " + Json(*tan.tStar).dump());
  auto lin = homotopyInvarianceCheck(linearExample(), vec2(0.1, -0.05), 0.5, {}, nc);
  body["linear"] = homotopyJson(lin);
  if (!lin.pass) failures.push_back("linear family: " + lin.reason);
  return body;
}

inline Json homotopySuite(const RunConfig& cfg) {
  std::vector<std::string> f;
  Json b = homotopyBody(cfg, f);
  return report(cfg, b, f);
}

// ---------------------------------------------------------------------------
// Rolle counts

inline Json rolleBody(const RunConfig& cfg, std::vector<std::string>& failures, std::size_t trials = 200) {
  auto rng = sectionRng(cfg, 7);
  std::uniform_real_distribution<double> unit(0, 1);
  const double eps = 1e-4;
  Json body;
  body["trials"] = trials;
  body["eps"] = eps;
  for (Domain dom : {Domain::circle, Domain::segment}) {
    const bool circle = dom == Domain::circle;
    std::size_t done = 0, resampled = 0, failed = 0, maxSolutions = 0;
    Json bad = Json::array();
    while (done < trials) {
      TrigPoly p = TrigPoly::random(rng, 6);
      Function1D fn = p.function();
      if (!circle) {
        // one full period across [0, 1]
        TrigPoly d1 = p.derivative(), d2 = d1.derivative();
        const double w = 2 * M_PI;
        fn = {[p, w](double x) { return p(w * x); }, [d1, w](double x) { return w * d1(w * x); },
              [d2, w](double x) { return w * w * d2(w * x); }};
      }
      double lo = 1e300, hi = -1e300;
      for (int i = 0; i <= 1000; ++i) {
        double v = fn.f((circle ? 2 * M_PI : 1.0) * i / 1000);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      double a = lo + (hi - lo) * unit(rng);
      RolleResult r;
      try {
        r = rolleCount(fn, dom, a, eps);
      } catch (const MorseError&) {
        ++resampled;
        continue;
      }
      ++done;
      maxSolutions = std::max(maxSolutions, r.solutions);
      if (!r.holds) {
        ++failed;
        if (bad.size() < 5)
          bad.push_back({{"trial", done}, {"solutions", r.solutions}, {"derivative_solutions", r.derivativeSolutions}});
      }
    }
    Json d;
    d["resampled"] = resampled;
    d["failures"] = failed;
    d["slack"] = circle ? 0 : 1;
    d["max_solutions"] = maxSolutions;
    if (!bad.empty()) d["examples"] = bad;
    body[circle ? "circle" : "segment"] = d;
    if (failed) failures.push_back(std::string("Rolle inequality on the ") + (circle ? "circle" : "segment") + ": " +
                                   std::to_string(failed) + " failures");
  }
  return body;
}

inline Json rolleSuite(const RunConfig& cfg) {
  std::vector<std::string> f;
  Json b = rolleBody(cfg, f);
  return report(cfg, b, f);
}

// ---------------------------------------------------------------------------
// cones

namespace detail {

inline Rational exactRational(long double v) {
  int e = 0;
  long double mant = std::frexp(v, &e);
  long double scaled = std::ldexp(mant, 64);
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  auto hi = static_cast<unsigned long>(scaled / 4294967296.0L);
  auto lo = static_cast<unsigned long>(scaled - static_cast<long double>(hi) * 4294967296.0L);
  Rational q(BigInt(hi) * BigInt(4294967296UL) + BigInt(lo));
  if (e - 64 >= 0) q *= Rational(BigInt(1) << static_cast<mp_bitcnt_t>(e - 64));
  else q /= Rational(BigInt(1) << static_cast<mp_bitcnt_t>(64 - e));
  return neg ? Rational(-q) : q;
}

/// Sign of p at x: long double with a forward error bound, exact rational arithmetic when undecided.
inline int certifiedSign(const Polynomial& p, const std::vector<VarId>& xs, const std::vector<long double>& x, bool& exactUsed) {
  long double acc = 0, mag = 0;
  std::size_t ops = p.size();
  for (auto& [mono, c] : p.terms()) {
    long double t = static_cast<long double>(c.get_d());
    std::size_t deg = 0;
    for (auto& [v, e] : mono.factors()) {
      auto i = static_cast<std::size_t>(std::find(xs.begin(), xs.end(), v) - xs.begin());
      for (std::uint32_t r = 0; r < e; ++r) t *= x[i];
      deg += e;
    }
    ops = std::max(ops, p.size() + deg + 2);
    acc += t;
    mag += std::fabs(t);
  }
  // double coefficients add 2^-53 relative error per term
  long double bound = mag * (static_cast<long double>(ops) * LDBL_EPSILON + 1.2e-16L) * 2;
  if (std::fabs(acc) > bound) return acc > 0 ? 1 : -1;
  exactUsed = true;
  std::unordered_map<VarId, Rational> at;
  for (std::size_t i = 0; i < xs.size(); ++i) at[xs[i]] = exactRational(x[i]);
  return sgn(p.evaluate(at));
}

inline Polynomial randomDense(std::mt19937_64& rng, const UniversePtr& u, const std::vector<VarId>& x, unsigned deg) {
  std::uniform_int_distribution<int> coef(-5, 5), keep(0, 2);
  Polynomial p(u);
  std::function<void(std::size_t, unsigned, Monomial)> rec = [&](std::size_t i, unsigned left, Monomial m) {
    if (i == x.size()) {
      if (keep(rng) == 0) {
        int c = coef(rng);
        if (c) p = p + Polynomial::monomial(u, m, c);
      }
      return;
    }
    for (unsigned e = 0; e <= left; ++e) rec(i + 1, left - e, e ? m * Monomial::of(x[i], e) : m);
  };
  while (p.isZero() || p.totalDegree() == Degree(0)) {
    p = Polynomial(u);
    rec(0, deg, Monomial{});
  }
  return p;
}

}  // namespace detail

inline Json coneJson(const ConeCertificate& c) {
  Json j;
  j["certified"] = c.certified;
  j["m"] = c.cone.m;
  j["delta"] = c.cone.delta.get_str();
  j["halvings"] = c.halvings;
  j["leading"] = c.leading.get_str();
  j["tail_bound"] = c.tailBound.get_str();
  j["factor_exponent"] = c.factorExponent;
  Json lv = Json::array();
  for (auto& l : c.levels) lv.push_back({{"dim", l.dim}, {"poly", l.poly}, {"stripped", l.stripped}, {"m", l.m}});
  j["levels"] = lv;
  j["log"] = c.log;
  return j;
}

inline Json conesBody(const RunConfig& cfg, std::vector<std::string>& failures, std::size_t count = 50,
                      std::uint64_t samples = 10000, int probes = 100) {
  auto rng = sectionRng(cfg, 8);
  Json cones = Json::array();
  std::size_t exactFallbacks = 0;
  for (std::size_t trial = 0; trial < count; ++trial) {
    const std::size_t k = 1 + trial % 3;
    auto u = Universe::create();
    std::vector<VarId> x;
    for (std::size_t i = 1; i <= k; ++i) x.push_back(u->add("a" + std::to_string(i), VarKind::value));
    const unsigned deg = 1 + static_cast<unsigned>(rng() % 4);
    Polynomial d = detail::randomDense(rng, u, x, deg);
    const std::string tag = "cone " + std::to_string(trial + 1) + " (" + d.str() + ")";
    Json cj;
    cj["d"] = d.str();
    ConeCertificate cert;
    try {
      cert = constructCone(d, x);
    } catch (const std::exception& ex) {
      failures.push_back(tag + ": " + ex.what());
      cj["error"] = ex.what();
      cones.push_back(cj);
      continue;
    }
    cj["certified"] = cert.certified;
    cj["m"] = cert.cone.m;
    cj["delta"] = cert.cone.delta.get_str();
    if (!cert.certified) failures.push_back(tag + ": not certified");
    std::vector<int> sign(samples + 1, 0);
    std::vector<char> inside(samples + 1, 0), exact(samples + 1, 0);
    std::vector<std::vector<int>> orth(samples + 1);
    parallelFor(samples, [&](std::size_t i) {
      auto a = coneSample(cert.cone, i + 1);
      inside[i] = cert.cone.contains(a);
      bool ex = false;
      sign[i] = detail::certifiedSign(d, x, a, ex);
      exact[i] = ex;
      for (std::size_t j = 1; j < k; ++j) orth[i].push_back(a[j] > 0 ? 1 : -1);
    });
    std::size_t zeros = 0, outside = 0, flips = 0, ex = 0;
    std::map<std::vector<int>, int> orthSign;
    for (std::size_t i = 0; i < samples; ++i) {
      zeros += sign[i] == 0;
      outside += !inside[i];
      ex += exact[i];
      if (sign[i] == 0) continue;
      auto [it, fresh] = orthSign.emplace(orth[i], sign[i]);
      if (it->second != sign[i]) ++flips;
    }
    exactFallbacks += ex;
    std::size_t probeFails = 0;
    const long double delta = static_cast<long double>(cert.cone.delta.get_d());
    for (int i = 0; i < probes; ++i) {
      long double t = delta * std::pow(10.0L, -3.0L * (1.0L - i / static_cast<long double>(probes - 1))) * (1 - 1e-9L);
      try {
        if (!cert.cone.contains(probeCurve(cert.cone, t))) ++probeFails;
      } catch (const std::exception&) {
        ++probeFails;
      }
    }
    cj["zeros"] = zeros;
    cj["outside"] = outside;
    cj["orthant_sign_changes"] = flips;
    cj["probe_failures"] = probeFails;
    if (zeros) failures.push_back(tag + ": vanishes at " + std::to_string(zeros) + " samples");
    if (outside) failures.push_back(tag + ": " + std::to_string(outside) + " samples outside the cone");
    if (flips) failures.push_back(tag + ": sign changes within an orthant");
    if (probeFails) failures.push_back(tag + ": probe curve left the cone " + std::to_string(probeFails) + " times");
    cones.push_back(cj);
  }
  Json body;
  body["samples_per_cone"] = samples;
  body["probes_per_cone"] = probes;
  body["exact_fallbacks"] = exactFallbacks;
  body["cones"] = cones;
  return body;
}

inline Json conesSuite(const RunConfig& cfg) {
  std::vector<std::string> f;
  Json b = conesBody(cfg, f);
  return report(cfg, b, f);
}

// ---------------------------------------------------------------------------
// stratification

namespace detail {

struct MapSpace {
  UniversePtr u = Universe::create();
  std::vector<VarId> x;
  std::vector<Polynomial> P;
  MapSpace(std::size_t n, std::initializer_list<const char*> polys) {
    for (std::size_t i = 1; i <= n; ++i) x.push_back(u->add("x" + std::to_string(i), VarKind::phase));
    for (auto s : polys) P.push_back(parsePolynomial(u, s, VarKind::phase, true));
  }
  std::vector<std::string> strs() const {
    std::vector<std::string> s;
    for (auto& p : P) s.push_back(p.str());
    return s;
  }
};

inline Eigen::VectorXd randomPoint(std::mt19937_64& rng, std::size_t n, double r) {
  std::uniform_real_distribution<double> d(-r, r);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = d(rng);
  return z;
}

}  // namespace detail

/// Q_P symmetry, D^0 <= D^1, the triangle-like inequality and the sin^2 grid inequality.
inline Json pseudodistanceBody(const RunConfig& cfg, std::vector<std::string>& failures, std::size_t triples = 100) {
  auto rng = sectionRng(cfg, 9);
  std::vector<detail::MapSpace> maps;
  maps.emplace_back(2, std::initializer_list<const char*>{"x1^2 + x2"});
  maps.emplace_back(2, std::initializer_list<const char*>{"x1*x2 + x1"});
  maps.emplace_back(2, std::initializer_list<const char*>{"x1 + x2^3 - x2"});
  maps.emplace_back(3, std::initializer_list<const char*>{"x1^2 + x2", "x1*x2 + x3"});
  Json body;

  double asym = 0;
  for (auto& m : maps) {
    CompiledMap P(m.P, m.x);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd x = detail::randomPoint(rng, m.x.size(), 1), y = detail::randomPoint(rng, m.x.size(), 1);
      try {
        asym = std::max(asym, std::fabs(qDistance(P, x, y) - qDistance(P, y, x)));
      } catch (const FrameError&) {
      }
    }
  }
  body["q_symmetry"] = {{"max_asymmetry", asym}, {"tolerance", cfg.tol.symmetry}};
  if (!(asym <= cfg.tol.symmetry)) failures.push_back("Q_P symmetry: " + Json(asym).dump());

  SamplerConfig sc;
  sc.gridPerAxis = 10;
  sc.dedupRadius = 0.03;
  std::size_t checked = 0, attempts = 0, orderFails = 0, triangleFails = 0, skipped = 0;
  double worstRatio = std::numeric_limits<double>::infinity();
  Json bad = Json::array();
  while (checked < triples && attempts < 4 * triples) {
    auto& m = maps[attempts % 3];
    ++attempts;
    CompiledMap P(m.P, m.x);
    Eigen::VectorXd a = P.value(detail::randomPoint(rng, 2, 0.6)), b = P.value(detail::randomPoint(rng, 2, 0.6)),
                    c = P.value(detail::randomPoint(rng, 2, 0.6));
    PseudoDistances ab, bc, ac;
    try {
      ab = pseudoDistances(P, a, b, sc);
      bc = pseudoDistances(P, b, c, sc);
      ac = pseudoDistances(P, a, c, sc);
    } catch (const FrameError&) {
      ++skipped;  // critical point among the samples: not a regular triple
      continue;
    }
    ++checked;
    for (auto* d : {&ab, &bc, &ac})
      if (d->D0 > d->D1 + 1e-12) ++orderFails;
    double lhs = 2 * (ab.D1 + bc.D1);
    if (ac.D1 > 0) worstRatio = std::min(worstRatio, lhs / ac.D1);
    if (!(lhs > ac.D1)) {
      ++triangleFails;
      if (bad.size() < 5) bad.push_back({{"map", m.strs()}, {"a", a[0]}, {"b", b[0]}, {"c", c[0]}, {"lhs", lhs}, {"rhs", ac.D1}});
    }
  }
  body["triples"] = {{"checked", checked}, {"skipped", skipped}, {"order_failures", orderFails},
                     {"triangle_failures", triangleFails}, {"min_ratio", std::isfinite(worstRatio) ? Json(worstRatio) : Json(nullptr)}};
  if (!bad.empty()) body["triples"]["examples"] = bad;
  if (checked < triples) failures.push_back("pseudodistance: only " + std::to_string(checked) + " regular triples");
  if (orderFails) failures.push_back("pseudodistance: D0 > D1 on " + std::to_string(orderFails) + " pairs");
  if (triangleFails) failures.push_back("pseudodistance: triangle-like inequality fails on " + std::to_string(triangleFails) + " triples");

  double slack = sinSquaredSlack(400);
  body["sin_squared"] = {{"grid", 400}, {"min_slack", slack}};
  if (slack < -cfg.tol.symmetry) failures.push_back("sin^2 inequality: slack " + Json(slack).dump());
  return body;
}

inline std::filesystem::path defaultFixtureDir() {
#ifdef POLYCYC_DATA_DIR
  return std::filesystem::path(POLYCYC_DATA_DIR) / "fixtures";
#else
  return "data/fixtures";
#endif
}

inline Json fixturesBody(std::vector<std::string>& failures, const std::filesystem::path& dir = defaultFixtureDir()) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(dir))
    for (auto& e : std::filesystem::directory_iterator(dir))
      if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) failures.push_back("no fixtures under " + dir.string());
  Json out = Json::array();
  for (auto& f : files) {
    Json r = runFixture(loadFixture(f));
    if (!r["pass"].get<bool>()) failures.push_back("fixture " + r["name"].get<std::string>() + " differs from its expectation");
    out.push_back(r);
  }
  return out;
}

/// Cones of three small maps and pseudodistances of same-first-coordinate pairs inside them.
inline Json existenceBody(const RunConfig& cfg, std::vector<std::string>& failures) {
  auto rng = sectionRng(cfg, 11);
  std::uniform_real_distribution<double> mult(-1, 1);
  std::vector<detail::MapSpace> maps;
  maps.emplace_back(2, std::initializer_list<const char*>{"x1 + x2^2", "x2"});
  maps.emplace_back(3, std::initializer_list<const char*>{"x1 + x2*x3", "x2"});
  maps.emplace_back(3, std::initializer_list<const char*>{"x1 + x2*x3", "x2 + x1^2"});
  Json out = Json::array();
  for (auto& m : maps) {
    Json mj;
    mj["map"] = m.strs();
    const std::string tag = "existence check for (" + m.strs()[0] + ", " + m.strs()[1] + ")";
    RegularityOptions ro;
    ro.includeBall = true;
    ro.seed = cfg.seed;
    auto reg = regularityPolynomial(m.P, m.x, ro);
    if (!reg.d) {
      failures.push_back(tag + ": no regularity polynomial");
      out.push_back(mj);
      continue;
    }
    mj["d"] = reg.d->str();
    mj["symbolic"] = reg.symbolic;
    auto cert = constructCone(*reg.d, reg.values);
    mj["m"] = cert.cone.m;
    mj["delta"] = cert.cone.delta.get_str();
    if (!cert.certified) failures.push_back(tag + ": cone not certified");
    CompiledMap P(m.P, m.x);
    Json pairs = Json::array();
    for (double t : {1e-1, 1e-2, 1e-3}) {
      if (!(t < cert.cone.delta.get_d())) {
        failures.push_back(tag + ": t = " + Json(t).dump() + " outside the cone");
        continue;
      }
      for (int s = 0; s < 3; ++s) {
        long double l1 = mult(rng), l2 = mult(rng);
        if (l1 == 0) l1 = 0.5L;
        if (l2 == 0) l2 = -0.5L;
        auto a = conePoint(cert.cone, t, {l1}), b = conePoint(cert.cone, t, {l2});
        Eigen::VectorXd av = vec2(static_cast<double>(a[0]), static_cast<double>(a[1]));
        Eigen::VectorXd bv = vec2(static_cast<double>(b[0]), static_cast<double>(b[1]));
        Json pj{{"t", t}, {"a", vectorJson(av)}, {"b", vectorJson(bv)}};
        try {
          auto d = pseudoDistances(P, av, bv);
          pj["D0"] = d.D0;
          pj["D1"] = d.D1;
          bool ok = cert.cone.contains(a) && cert.cone.contains(b) && d.D0 < t && d.D1 < t;
          pj["pass"] = ok;
          if (!ok) failures.push_back(tag + ": t = " + Json(t).dump() + " gives D0 " + Json(d.D0).dump() + ", D1 " + Json(d.D1).dump());
        } catch (const std::exception& ex) {
          pj["error"] = ex.what();
          failures.push_back(tag + ": t = " + Json(t).dump() + ": " + ex.what());
        }
        pairs.push_back(pj);
      }
    }
    mj["pairs"] = pairs;
    out.push_back(mj);
  }
  return out;
}

inline Json strataSuite(const RunConfig& cfg) {
  std::vector<std::string> f;
  Json b;
  b["pseudodistance"] = pseudodistanceBody(cfg, f);
  b["fixtures"] = fixturesBody(f);
  b["existence"] = existenceBody(cfg, f);
  return report(cfg, b, f);
}

// ---------------------------------------------------------------------------
// degrees, reduction bound and separating solutions

inline std::vector<SingularityType> catalogTypes(unsigned maxMu) {
  std::vector<SingularityType> ts{SingularityType::s0()};
  for (unsigned mu = 1; mu <= maxMu; ++mu) {
    ts.push_back(SingularityType::saddle(mu));
    ts.push_back(SingularityType::saddle(mu, 1, 2));
    ts.push_back(SingularityType::dc(mu));
    ts.push_back(SingularityType::dh(mu));
  }
  return ts;
}

inline Json degreeNotesBody(std::vector<std::string>& failures, unsigned maxMu = 6) {
  Json out = Json::array();
  for (auto& t : catalogTypes(maxMu)) {
    auto d = vertexDegrees(buildVertex(t));
    Json j{{"type", t.label()}, {"omega", d.omega.str()}, {"expected_omega", d.expectedOmega},
           {"rho", d.rho.str()}, {"expected_rho", d.expectedRho}};
    if (!d.note.empty()) j["note"] = d.note;
    if (t.kind == VertexKind::S0) {
      // discrepancy between the closed form at mu = 0 and the constructed covering function
      j["discrepancy"] = !d.rhoMatches;
      if (!d.omegaMatches) failures.push_back("S0: form degree " + d.omega.str());
    } else {
      if (!d.omegaMatches) failures.push_back(t.label() + ": form degree " + d.omega.str() + " != " + std::to_string(d.expectedOmega));
      if (!d.rhoMatches) failures.push_back(t.label() + ": covering degree " + d.rho.str() + " != " + std::to_string(d.expectedRho));
    }
    out.push_back(j);
  }
  return out;
}

inline Json reductionBoundBody(const RunConfig& cfg, std::vector<std::string>& failures, std::size_t runs = 100) {
  auto rng = sectionRng(cfg, 4);
  Json out = Json::array();
  std::size_t holding = 0;
  for (std::size_t i = 0; i < runs; ++i) {
    unsigned n = 1 + static_cast<unsigned>(rng() % 4), d = 1 + static_cast<unsigned>(rng() % 3);
    unsigned k = 1 + static_cast<unsigned>(rng() % n);
    Json j{{"n", n}, {"d", d}, {"k", k}};
    try {
      auto sys = randomMixedSystem(rng, n, d, k);
      auto rep = runSchedule(sys);
      Json deg = Json::array();
      for (auto& c : rep.systems) {
        Json row = Json::array();
        for (auto& e : c.components) row.push_back(e.degree.str());
        deg.push_back(row);
      }
      j["base"] = rep.base();
      j["degrees"] = deg;
      j["bound_holds"] = rep.boundHolds;
      if (rep.boundHolds) ++holding;
      else
        for (auto& v : rep.violations) failures.push_back("reduction run " + std::to_string(i + 1) + ": " + v);
    } catch (const std::exception& ex) {
      j["error"] = ex.what();
      failures.push_back("reduction run " + std::to_string(i + 1) + ": " + ex.what());
    }
    out.push_back(j);
  }
  return Json{{"runs", runs}, {"holding", holding}, {"systems", out}};
}

inline Json separatingBody(const RunConfig& cfg, std::vector<std::string>& failures, unsigned maxMu = 6) {
  Json out = Json::array();
  double worst = 0;
  for (auto& t : catalogTypes(maxMu)) {
    auto v = buildVertex(t);
    Json samples = Json::array();
    for (auto& lam : defaultParameterSamples(v)) {
      auto rep = checkSeparatingSolution(v, 8, lam, defaultSize(v));
      worst = std::max(worst, rep.maxResidual);
      samples.push_back({{"lambda", lam}, {"max_residual", rep.maxResidual}});
      if (!(rep.maxResidual < cfg.tol.separating))
        failures.push_back(t.label() + ": separating residual " + Json(rep.maxResidual).dump());
    }
    out.push_back({{"type", t.label()}, {"samples", samples}});
  }
  return Json{{"max_residual", worst}, {"tolerance", cfg.tol.separating}, {"vertices", out}};
}

inline Json degreesSuite(const RunConfig& cfg) {
  std::vector<std::string> f;
  Json b;
  b["degree_notes"] = degreeNotesBody(f);
  b["reduction_bound"] = reductionBoundBody(cfg, f);
  b["separating"] = separatingBody(cfg, f);
  return report(cfg, b, f);
}

inline const std::vector<std::string>& suiteNames() {
  static const std::vector<std::string> n{"rolle", "idealistic", "homotopy", "cones", "strata", "degrees"};
  return n;
}

inline Json runSuite(const RunConfig& cfg) {
  if (cfg.suite == "rolle") return rolleSuite(cfg);
  if (cfg.suite == "idealistic") return idealisticSuite(cfg);
  if (cfg.suite == "homotopy") return homotopySuite(cfg);
  if (cfg.suite == "cones") return conesSuite(cfg);
  if (cfg.suite == "strata") return strataSuite(cfg);
  if (cfg.suite == "degrees") return degreesSuite(cfg);
  throw std::invalid_argument("unknown suite '" + cfg.suite + "'");
}

// ---------------------------------------------------------------------------
// certificates

inline Json certificateJson(const CyclicityCertificate& c) {
  Json j;
  j["type"] = c.type.label();
  j["k"] = c.type.k;
  j["dims"] = {{"n", c.dims.n}, {"s", c.dims.s}, {"k", c.dims.k}, {"m", c.dims.m}, {"M", c.dims.bigM}};
  j["value"] = c.value.get_str();
  j["bound"] = c.bound.get_str();
  j["log2_value"] = std::log2(c.value.get_d());
  j["max_product"] = c.maxProduct.get_str();
  Json sp = Json::array();
  for (auto& p : c.scheduleProducts) sp.push_back(p.get_str());
  j["schedule_products"] = sp;
  Json deg = Json::array();
  for (auto& s : c.report.systems) {
    Json row = Json::array();
    for (auto& e : s.components) row.push_back(e.degree.str());
    deg.push_back(row);
  }
  j["component_degrees"] = deg;
  j["rho_degree"] = c.rhoDegree.str();
  j["rho_table_degree"] = c.rhoTableDegree;
  j["aggregate"] = c.aggregate.get_str();
  j["exact"] = c.exact;
  j["within_bound"] = c.withinBound;
  j["M_ok"] = c.bigMOk;
  j["rho_ok"] = c.rhoOk;
  j["components_ok"] = c.componentsOk;
  j["violations"] = c.violations;
  j["warnings"] = c.warnings;
  j["pass"] = c.pass();
  return j;
}

/// Parses "S0-S1(1:2)-Dc1" into a combinatorial type with the given k.
inline CombinatorialType parseType(const std::string& s, unsigned k) {
  CombinatorialType t;
  t.k = k;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto dash = s.find('-', start);
    std::string part = s.substr(start, dash == std::string::npos ? std::string::npos : dash - start);
    t.vertices.push_back(SingularityType::parse(part));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  t.validate();
  return t;
}

}  // namespace polycyc::tools
