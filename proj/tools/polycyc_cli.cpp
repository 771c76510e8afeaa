// polycyc: certificates, reductions, catalog dumps, cones and verification suites as JSON.

#include <iostream>

#include "CLI11.hpp"
#include "suites.hpp"

using namespace polycyc;
using namespace polycyc::tools;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string readTextOrFile(const std::string& s) {
  if (std::filesystem::is_regular_file(s)) {
    std::ifstream in(s);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return s;
}

std::vector<std::string> splitList(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

Specification specFrom(const Json& j) {
  Specification s;
  if (j.contains("r")) s.r = Rational(j["r"].get<std::string>());
  if (j.contains("c"))
    for (auto& c : j["c"]) s.c.push_back(c.is_null() ? std::optional<Rational>() : Rational(c.get<std::string>()));
  if (j.value("convention", "table") == "equation") s.convention = ResonantConvention::equationP;
  return s;
}

/// Type given as a label ("S0-S1") or as JSON {"vertices": [...], "k": 2, "spec": {...}}.
std::pair<CombinatorialType, Specification> typeFrom(const std::string& arg, unsigned k) {
  std::string text = readTextOrFile(arg);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    Json j = Json::parse(text);
    CombinatorialType t;
    t.k = j.value("k", k);
    for (auto& v : j.at("vertices")) t.vertices.push_back(SingularityType::parse(v.get<std::string>()));
    t.validate();
    return {t, specFrom(j.value("spec", Json::object()))};
  }
  return {parseType(text, k), Specification{}};
}

Json reportJson(const ReductionReport& rep, bool withPolys) {
  Json j;
  j["d"] = rep.d;
  j["k"] = rep.k;
  j["n"] = rep.n;
  j["base"] = rep.base();
  j["initial_rigid"] = rep.initialRigid;
  Json systems = Json::array();
  for (auto& s : rep.systems) {
    Json sj;
    sj["schedule"] = s.scheduleIndex;
    Json comps = Json::array();
    for (std::size_t i = 0; i < s.components.size(); ++i) {
      auto& e = s.components[i];
      Json c{{"label", e.label}, {"target", s.targets[i]}, {"degree", e.degree.str()}, {"exact", e.exact}};
      if (!e.bound.isNegInf()) c["bound"] = e.bound.str();
      if (withPolys && e.poly) c["poly"] = e.poly->str();
      comps.push_back(c);
    }
    sj["components"] = comps;
    Json steps = Json::array();
    for (auto& st : s.steps) steps.push_back({{"kind", stepKindName(st.kind)}, {"eliminated", st.eliminated}, {"component", st.component}});
    sj["steps"] = steps;
    auto b = bezoutProduct(s);
    sj["bezout"] = b.value.get_str();
    sj["bezout_exact"] = b.exact;
    systems.push_back(sj);
  }
  j["systems"] = systems;
  j["aggregate"] = khovanskiiAggregate(rep).get_str();
  j["bound_holds"] = rep.boundHolds;
  j["tight_bound_holds"] = rep.tightBoundHolds;
  j["violations"] = rep.violations;
  return j;
}

/// Mixed system from JSON: coordinates, functions with dependency sets, forms, loose equations, rho factors.
MixedSystem systemFrom(const Json& j) {
  auto u = Universe::create();
  std::vector<VarId> xs;
  for (auto& c : j.at("coordinates")) xs.push_back(u->add(c.get<std::string>(), VarKind::phase));
  CartesianType type;
  for (auto& f : j.value("functions", Json::array())) {
    type.names.push_back(f.at("name").get<std::string>());
    std::vector<VarId> dep;
    for (auto& v : f.at("depends")) dep.push_back(u->require(v.get<std::string>()));
    type.dependency.push_back(dep);
  }
  MixedSystem sys;
  sys.jets = std::make_shared<JetSpace>(u, xs, type, j.value("jet_cap", static_cast<std::uint32_t>(xs.size())));
  for (std::uint32_t i = 0; i < type.size(); ++i) sys.jets->value(i);
  auto poly = [&](const Json& s) { return parsePolynomial(u, s.get<std::string>(), VarKind::phase, true); };
  for (auto& f : j.value("forms", Json::array())) {
    OneForm w(u);
    for (auto& [v, c] : f.items()) w.set(u->require(v), poly(c));
    sys.addForm(std::move(w));
  }
  for (auto& l : j.value("loose", Json::array())) sys.loose.push_back({poly(l.at("expression")), l.at("target").get<std::string>()});
  for (auto& r : j.value("rho", Json::array())) sys.rhoFactors.push_back(poly(r));
  for (auto& d : j.value("domain", Json::array())) sys.domain.push_back(d.get<std::string>());
  return sys;
}

Json vertexJson(const VertexUnfolding& v) {
  Json j;
  j["type"] = v.type.label();
  j["coordinates"] = Json::array();
  for (VarId c : v.phaseCoords()) j["coordinates"].push_back(v.u->name(c));
  j["parameters"] = Json::array();
  for (VarId l : v.lambda) j["parameters"].push_back(v.u->name(l));
  j["field"] = {{"xdot", v.xdot.str()}, {"ydot", v.ydot.str()}};
  Json forms = Json::array();
  for (std::size_t i = 0; i < v.forms.size(); ++i)
    forms.push_back({{"normal_form", i < v.formLabels.size() ? v.formLabels[i] : ""}, {"form", v.forms[i].str(v.phaseCoords())}});
  j["forms"] = forms;
  j["rho"] = v.rho.str();
  j["rho_tilde"] = v.rhoTilde.str();
  Json dom = Json::array();
  for (auto& d : v.domain)
    dom.push_back({{"text", d.text}, {"expr", d.expr.str()}, {"relation", d.relation == DomainConstraint::Relation::positive ? "> 0" : "!= 0"}});
  j["domain"] = dom;
  auto d = vertexDegrees(v);
  j["degrees"] = {{"omega", d.omega.str()}, {"expected_omega", d.expectedOmega}, {"omega_matches", d.omegaMatches},
                  {"rho", d.rho.str()}, {"expected_rho", d.expectedRho}, {"rho_matches", d.rhoMatches}};
  if (!d.note.empty()) j["degrees"]["note"] = d.note;
  return j;
}

Json coneCommand(const std::string& polyText, const std::string& vars, const std::string& mapText, bool ball, std::uint64_t seed) {
  Json j;
  if (!mapText.empty()) {
    auto u = Universe::create();
    std::vector<VarId> xs;
    for (auto& n : splitList(vars, ',')) xs.push_back(u->add(n, VarKind::phase));
    if (xs.empty()) throw UsageError("cone --map needs --vars");
    std::vector<Polynomial> P;
    for (auto& p : splitList(mapText, ';')) P.push_back(parsePolynomial(u, p, VarKind::phase, true));
    RegularityOptions ro;
    ro.includeBall = ball;
    ro.seed = seed;
    auto reg = regularityPolynomial(P, xs, ro);
    j["map"] = splitList(mapText, ';');
    j["symbolic"] = reg.symbolic;
    j["regularity_log"] = reg.log;
    if (!reg.d) {
      j["d"] = nullptr;
      return j;
    }
    j["d"] = reg.d->str();
    j["cone"] = coneJson(constructCone(*reg.d, reg.values));
    return j;
  }
  auto u = Universe::create();
  std::vector<VarId> xs;
  for (auto& n : splitList(vars, ',')) xs.push_back(u->add(n, VarKind::value));
  Polynomial d = parsePolynomial(u, polyText, VarKind::value, !xs.empty());
  if (xs.empty()) xs = d.variables();
  j["d"] = d.str();
  j["coordinates"] = Json::array();
  for (VarId v : xs) j["coordinates"].push_back(u->name(v));
  j["cone"] = coneJson(constructCone(d, xs));
  return j;
}

void emit(const Json& j, const RunConfig& cfg) {
  std::string text = j.dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + cfg.out);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polycycle cyclicity certificates and verification suites"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string configPath;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> q;
  std::optional<double> eps1;
  app.add_option("--config", configPath, "JSON or TOML config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed");
  app.add_option("--q", q, "decay exponent of the epsilon schedule");
  app.add_option("--eps1", eps1, "first epsilon of the schedule");
  app.add_option("--out", cfg.out, "write the JSON report to this file");

  auto* bound = app.add_subcommand("bound", "cyclicity certificates for combinatorial types");
  unsigned k = 1;
  std::string typeArg;
  bound->add_option("--k", k, "number of vertices bound")->required()->check(CLI::Range(1u, 6u));
  bound->add_option("--type", typeArg, "type label such as S0-S1(1:1), or JSON text/file");

  auto* reduce = app.add_subcommand("reduce", "run the reduction schedules of a mixed system");
  std::string reduceType, reduceInput, reduceRandom;
  unsigned reduceK = 1;
  bool withPolys = false;
  reduce->add_option("--type", reduceType, "principal system of this combinatorial type");
  reduce->add_option("--k", reduceK, "k for --type")->check(CLI::Range(1u, 6u));
  reduce->add_option("--input", reduceInput, "mixed system as JSON text or file");
  reduce->add_option("--random", reduceRandom, "random mixed system n,d,k");
  reduce->add_flag("--polys", withPolys, "include materialized chain-map polynomials");

  auto* catalog = app.add_subcommand("catalog", "dump a catalog vertex");
  std::string catType;
  catalog->add_option("--type", catType, "S0, S<mu>, S<mu>(n:m), Dc<mu> or Dh<mu>")->required();

  auto* cone = app.add_subcommand("cone", "construct a cone where a polynomial does not vanish");
  std::string conePoly, coneVars, coneMap;
  bool coneBall = false;
  cone->add_option("--poly", conePoly, "polynomial d in text form");
  cone->add_option("--vars", coneVars, "comma separated coordinate order");
  cone->add_option("--map", coneMap, "map P as ';' separated polynomials; d is its regularity polynomial");
  cone->add_flag("--ball", coneBall, "include the unit sphere in the critical set");

  auto* verify = app.add_subcommand("verify", "verification suites");
  std::string suite;
  verify->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(suiteNames()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!configPath.empty()) cfg.apply(readConfigFile(configPath));
    if (seed) cfg.seed = *seed;
    if (q) cfg.q = *q;
    if (eps1) cfg.eps1 = *eps1;
    if (cfg.q < 2) throw UsageError("--q must be at least 2");
    if (!(cfg.eps1 > 0 && cfg.eps1 < 1)) throw UsageError("--eps1 must lie in (0, 1)");

    Json out;
    bool ok = true;
    if (*bound) {
      cfg.command = "bound";
      cfg.flags["k"] = k;
      std::vector<std::pair<CombinatorialType, Specification>> types;
      if (!typeArg.empty()) {
        cfg.flags["type"] = typeArg;
        types.push_back(typeFrom(typeArg, k));
      } else
        for (auto& t : enumerateTypes(k)) types.emplace_back(t, Specification{});
      Json certs = Json::array();
      std::vector<std::string> failures;
      for (auto& [t, s] : types) {
        auto c = cyclicityCertificate(t, s);
        certs.push_back(certificateJson(c));
        for (auto& v : c.violations) failures.push_back("cyclicity bound, " + t.label() + ": " + v);
      }
      out = report(cfg, Json{{"k", k}, {"count", certs.size()}, {"certificates", certs}}, failures);
    } else if (*reduce) {
      cfg.command = "reduce";
      MixedSystem sys;
      Json body;
      int given = !reduceType.empty() + !reduceInput.empty() + !reduceRandom.empty();
      if (given != 1) throw UsageError("reduce needs exactly one of --type, --input, --random");
      if (!reduceType.empty()) {
        cfg.flags["type"] = reduceType;
        cfg.flags["k"] = reduceK;
        auto [t, s] = typeFrom(reduceType, reduceK);
        auto ps = assemble(t, s);
        body["type"] = t.label();
        body["dims"] = {{"n", ps.dims.n}, {"s", ps.dims.s}, {"k", ps.dims.k}, {"m", ps.dims.m}, {"M", ps.dims.bigM}};
        body["notes"] = ps.notes;
        sys = ps.system;
        body["report"] = reportJson(runSchedule(sys, principalReduceOptions()), withPolys);
      } else {
        if (!reduceInput.empty()) {
          cfg.flags["input"] = reduceInput;
          sys = systemFrom(Json::parse(readTextOrFile(reduceInput)));
        } else {
          cfg.flags["random"] = reduceRandom;
          auto parts = splitList(reduceRandom, ',');
          if (parts.size() != 3) throw UsageError("--random expects n,d,k");
          auto rng = sectionRng(cfg, 4);
          sys = randomMixedSystem(rng, std::stoul(parts[0]), std::stoul(parts[1]), std::stoul(parts[2]));
        }
        Json forms = Json::array();
        for (auto& w : sys.pfaffian) forms.push_back(w.str(sys.coords()));
        body["forms"] = forms;
        body["rho"] = sys.rho().str();
        body["report"] = reportJson(runSchedule(sys), withPolys);
      }
      std::vector<std::string> failures;
      for (auto& v : body["report"]["violations"]) failures.push_back("reduction degree bound: " + v.get<std::string>());
      out = report(cfg, body, failures);
    } else if (*catalog) {
      cfg.command = "catalog";
      cfg.flags["type"] = catType;
      out = report(cfg, Json{{"vertex", vertexJson(buildVertex(SingularityType::parse(catType)))}}, {});
    } else if (*cone) {
      cfg.command = "cone";
      if (conePoly.empty() == coneMap.empty()) throw UsageError("cone needs exactly one of --poly, --map");
      if (!conePoly.empty()) cfg.flags["poly"] = conePoly;
      if (!coneMap.empty()) cfg.flags["map"] = coneMap;
      if (!coneVars.empty()) cfg.flags["vars"] = coneVars;
      if (coneBall) cfg.flags["ball"] = true;
      Json body = coneCommand(conePoly, coneVars, coneMap, coneBall, cfg.seed);
      std::vector<std::string> failures;
      if (body.contains("cone") && !body["cone"]["certified"].get<bool>()) failures.push_back("cone certification failed");
      if (body["d"].is_null()) failures.push_back("no regularity polynomial found");
      out = report(cfg, body, failures);
    } else {
      cfg.command = "verify";
      cfg.suite = suite;
      out = runSuite(cfg);
    }
    ok = out["pass"].get<bool>();
    emit(out, cfg);
    if (!ok) {
      std::cerr << "verification failed:";
      for (auto& f : out["failures"]) std::cerr << "\n  " << f.get<std::string>();
      std::cerr << "\n";
    }
    return ok ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "invalid JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
