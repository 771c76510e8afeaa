#pragma once
// Stratification fixtures stored as JSON under data/fixtures.

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "polycyc/strata.hpp"

namespace polycyc::tools {

using Json = nlohmann::ordered_json;

struct Fixture {
  std::string name, kind, description;
  UniversePtr u;
  std::vector<VarId> x;
  std::vector<Polynomial> map;
  Stratum upper;
  std::optional<Stratum> lower;
  Eigen::VectorXd point;
  std::vector<Eigen::VectorXd> sequence, lowerSequence;
  Json expect;
};

namespace detail {

inline std::vector<Eigen::VectorXd> parseSequence(const Json& j, const UniversePtr& u,
                                                  const std::unordered_map<VarId, Rational>& params) {
  VarId s = u->intern(j.at("variable").get<std::string>(), VarKind::value);
  std::vector<Polynomial> pts;
  for (auto& p : j.at("points")) pts.push_back(parsePolynomial(u, p.get<std::string>(), VarKind::value, true));
  std::vector<Eigen::VectorXd> out;
  for (int k = j.at("from").get<int>(); k <= j.at("to").get<int>(); ++k) {
    auto at = params;
    at[s] = Rational(1, 1) / Rational(BigInt(1) << static_cast<mp_bitcnt_t>(k));
    Eigen::VectorXd z(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) z[static_cast<Eigen::Index>(i)] = pts[i].evaluate(at).get_d();
    out.push_back(z);
  }
  return out;
}

}  // namespace detail

inline Fixture loadFixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture " + path.string());
  Json j = Json::parse(in);
  Fixture f;
  f.name = j.at("name").get<std::string>();
  f.kind = j.at("kind").get<std::string>();
  f.description = j.value("description", "");
  f.u = Universe::create();
  for (auto& c : j.at("coordinates")) f.x.push_back(f.u->add(c.get<std::string>(), VarKind::phase));
  std::unordered_map<VarId, Rational> params;
  for (auto& [name, val] : j.at("parameters").items()) params[f.u->add(name, VarKind::value)] = Rational(val.get<std::string>());
  auto polys = [&](const Json& arr) {
    std::vector<Polynomial> out;
    for (auto& p : arr) out.push_back(parsePolynomial(f.u, p.get<std::string>(), VarKind::phase, true));
    return out;
  };
  if (j.contains("map")) f.map = polys(j.at("map"));
  f.upper.equations = polys(j.at("upper"));
  if (j.contains("lower")) f.lower = Stratum{polys(j.at("lower"))};
  std::vector<Polynomial> pt;
  for (auto& p : j.at("point")) pt.push_back(parsePolynomial(f.u, p.get<std::string>(), VarKind::value, true));
  f.point.resize(static_cast<Eigen::Index>(pt.size()));
  for (std::size_t i = 0; i < pt.size(); ++i) f.point[static_cast<Eigen::Index>(i)] = pt[i].evaluate(params).get_d();
  f.sequence = detail::parseSequence(j.at("sequence"), f.u, params);
  if (j.contains("lower_sequence")) f.lowerSequence = detail::parseSequence(j.at("lower_sequence"), f.u, params);
  f.expect = j.value("expect", Json::object());
  if (f.kind != "ap_probe" && f.kind != "whitney") throw std::invalid_argument("fixture " + f.name + ": unknown kind " + f.kind);
  return f;
}

/// Runs the probe of a fixture and compares with its expectations.
inline Json runFixture(const Fixture& f) {
  Json r;
  r["name"] = f.name;
  r["kind"] = f.kind;
  bool pass = true;
  if (f.kind == "ap_probe") {
    auto v = apRegularityProbe(f.map, f.x, f.upper, f.lower.value_or(Stratum{}), f.point, f.sequence);
    r["regular"] = v.regular;
    r["angle"] = v.angle;
    r["kernel_jump"] = v.kernelJump;
    r["rank_stable"] = v.rankStable;
    r["lower_kernel_dim"] = v.lowerKernelDim;
    r["kernel_dims"] = v.kernelDims;
    if (f.expect.contains("regular")) pass = pass && v.regular == f.expect["regular"].get<bool>();
    if (f.expect.contains("min_angle")) pass = pass && v.angle >= f.expect["min_angle"].get<double>();
    if (f.expect.contains("kernel_jump")) pass = pass && v.kernelJump == f.expect["kernel_jump"].get<bool>();
  } else {
    auto w = whitneyCheck(f.x, f.upper, f.lower, f.point, f.sequence, f.lowerSequence);
    r["a_holds"] = w.aHolds;
    r["b_holds"] = w.bHolds;
    r["a_angle"] = w.aAngle;
    r["b_angle"] = w.bAngle;
    r["tangent_drift"] = w.tangentDrift;
    if (f.expect.contains("a_holds")) pass = pass && w.aHolds == f.expect["a_holds"].get<bool>();
    if (f.expect.contains("b_holds")) pass = pass && w.bHolds == f.expect["b_holds"].get<bool>();
    if (f.expect.contains("min_b_angle")) pass = pass && w.bAngle >= f.expect["min_b_angle"].get<double>();
  }
  r["expect"] = f.expect;
  r["pass"] = pass;
  return r;
}

}  // namespace polycyc::tools
