// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>

#include <unistd.h>

#include "suites.hpp"

using namespace polycyc;
using namespace polycyc::tools;

namespace {

// pinned limits
constexpr double kIdealisticSeconds = 5;
constexpr double kHomotopySeconds = 10;
constexpr double kReductionSeconds = 60;
constexpr double kCertificateSeconds = 300;
constexpr double kSeparatingResidual = 1e-8;
constexpr double kSymmetryTolerance = 1e-12;
constexpr double kNewtonTolerance = 1e-10;
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

RunConfig pinnedConfig() {
  RunConfig c;
  c.command = "acceptance";
  c.seed = kSeed;
  c.tol.newton = kNewtonTolerance;
  c.tol.residual = kNewtonTolerance;
  c.tol.separating = kSeparatingResidual;
  c.tol.symmetry = kSymmetryTolerance;
  return c;
}

std::string firstFailures(const std::vector<std::string>& f, std::size_t n = 3) {
  std::string s;
  for (std::size_t i = 0; i < std::min(n, f.size()); ++i) s += (i ? "; " : "") + f[i];
  if (f.size() > n) s += "; ... " + std::to_string(f.size() - n) + " more";
  return s;
}

Outcome fromFailures(const std::vector<std::string>& f, const std::string& ok) {
  return {f.empty(), f.empty() ? ok : firstFailures(f)};
}

Outcome idealistic() {
  std::vector<std::string> f;
  Json b = idealisticBody(pinnedConfig(), f);
  std::string counts;
  for (auto& r : b["runs"]) counts += (counts.empty() ? "" : ", ") + std::to_string(r["F"]["count"].get<std::size_t>());
  return fromFailures(f, "counts " + counts + " for eps 1e-2, 1e-3, 1e-4; linear part agrees");
}

Outcome homotopy() {
  std::vector<std::string> f;
  Json b = homotopyBody(pinnedConfig(), f);
  std::string t = b["tangency"].contains("t_star") ? b["tangency"]["t_star"].dump() : "none";
  return fromFailures(f, "idealistic family constant at 4; tangency fails at t* = " + t);
}

Outcome degreeNotes() {
  std::vector<std::string> f;
  Json b = degreeNotesBody(f);
  std::string s0;
  for (auto& e : b)
    if (e["type"] == "S0") s0 = "S0 covering degree " + e["rho"].get<std::string>() + " vs closed form " + e["expected_rho"].dump();
  return fromFailures(f, std::to_string(b.size() - 1) + " degenerate vertices match; reported discrepancy: " + s0);
}

Outcome reductionBound() {
  std::vector<std::string> f;
  Json b = reductionBoundBody(pinnedConfig(), f);
  return fromFailures(f, b["holding"].dump() + "/" + b["runs"].dump() + " random systems within 2^r (dk + n)");
}

Outcome certificates() {
  std::size_t total = 0, passing = 0;
  std::vector<std::string> failing;
  for (unsigned k = 1; k <= 3; ++k) {
    for (auto& t : enumerateTypes(k)) {
      ++total;
      try {
        auto c = cyclicityCertificate(t);
        if (c.pass()) ++passing;
        else failing.push_back(t.label() + " [" + firstFailures(c.violations, 2) + "]");
      } catch (const std::exception& ex) {
        failing.push_back(t.label() + " [" + ex.what() + "]");
      }
    }
  }
  std::string d = std::to_string(passing) + "/" + std::to_string(total) + " types certified";
  if (!failing.empty()) d += "; failing: " + firstFailures(failing, 4);
  return {failing.empty(), d};
}

Outcome separating() {
  std::vector<std::string> f;
  Json b = separatingBody(pinnedConfig(), f);
  return fromFailures(f, b["vertices"].size() == 0 ? "no vertices" : std::to_string(b["vertices"].size()) +
                                                                     " vertices x 3 samples, max residual " + b["max_residual"].dump());
}

Outcome rolle() {
  std::vector<std::string> f;
  Json b = rolleBody(pinnedConfig(), f);
  return fromFailures(f, "200 circle + 200 segment trials, 0 failures (resampled " + b["circle"]["resampled"].dump() + " + " +
                             b["segment"]["resampled"].dump() + " non-Morse)");
}

Outcome cones() {
  std::vector<std::string> f;
  Json b = conesBody(pinnedConfig(), f);
  return fromFailures(f, std::to_string(b["cones"].size()) + " cones, 10^4 nonvanishing samples and 100 probe points each");
}

Outcome pseudodistance() {
  std::vector<std::string> f;
  Json b = pseudodistanceBody(pinnedConfig(), f);
  return fromFailures(f, "asymmetry " + b["q_symmetry"]["max_asymmetry"].dump() + ", " + b["triples"]["checked"].dump() +
                             " triples, min ratio " + b["triples"]["min_ratio"].dump() + ", sin^2 slack " +
                             b["sin_squared"]["min_slack"].dump());
}

Outcome fixtures() {
  std::vector<std::string> f;
  Json a = fixturesBody(f), b = fixturesBody(f);
  if (a.dump() != b.dump()) f.push_back("fixture verdicts differ between runs");
  bool grinberg = false, thom = false;
  std::string d;
  for (auto& r : a) {
    if (r["name"] == "grinberg") {
      grinberg = !r["regular"].get<bool>() && r["angle"].get<double>() >= 0.3;
      d += "Grinberg angle " + r["angle"].dump();
    }
    if (r["name"] == "thom") {
      thom = r["kernel_jump"].get<bool>();
      d += std::string(d.empty() ? "" : ", ") + "Thom kernel jump " + (thom ? "seen" : "missing");
    }
  }
  if (!grinberg) f.push_back("Grinberg probe did not fail with angle >= 0.3");
  if (!thom) f.push_back("Thom probe did not report the kernel jump");
  return fromFailures(f, d);
}

Outcome existence() {
  std::vector<std::string> f;
  Json b = existenceBody(pinnedConfig(), f);
  double worst = 0;
  std::size_t pairs = 0;
  for (auto& m : b)
    for (auto& p : m.value("pairs", Json::array()))
      if (p.contains("D1")) {
        worst = std::max(worst, p["D1"].get<double>() / p["t"].get<double>());
        ++pairs;
      }
  return fromFailures(f, std::to_string(pairs) + " pairs over 3 maps, max D1/t = " + Json(worst).dump());
}

Outcome reproducibility() {
  std::vector<std::string> f;
  const std::string cli = POLYCYC_CLI_PATH;
  auto tmp = std::filesystem::temp_directory_path() / ("polycyc_repro_" + std::to_string(::getpid()));
  std::filesystem::create_directories(tmp);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (auto& s : suiteNames()) {
    std::string outs[2];
    for (int run = 0; run < 2; ++run) {
      // same path both times: the output path is part of the embedded config
      auto path = tmp / (s + ".json");
      std::filesystem::remove(path);
      std::string cmd = "\"" + cli + "\" --seed " + std::to_string(kSeed) + " verify " + s + " --out \"" + path.string() + "\" 2>/dev/null";
      int rc = std::system(cmd.c_str());
      if (rc == -1 || !std::filesystem::exists(path)) {
        f.push_back("verify " + s + ": run " + std::to_string(run + 1) + " produced no report");
        continue;
      }
      outs[run] = slurp(path);
    }
    if (outs[0].empty() || outs[0] != outs[1]) f.push_back("verify " + s + ": reports differ");
  }
  std::filesystem::remove_all(tmp);
  return fromFailures(f, "6 suites byte-identical across two runs");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
    double limit;  // seconds, 0 for none
  };
  const std::vector<Criterion> criteria{
      {1, "idealistic preimage count", idealistic, kIdealisticSeconds},
      {2, "homotopy invariance", homotopy, kHomotopySeconds},
      {3, "vertex degree notes", degreeNotes, 0},
      {4, "reduction degree bound", reductionBound, kReductionSeconds},
      {5, "cyclicity certificates k <= 3", certificates, kCertificateSeconds},
      {6, "separating-solution residuals", separating, 0},
      {7, "Rolle property", rolle, 0},
      {8, "cone soundness", cones, 0},
      {9, "pseudodistance properties", pseudodistance, 0},
      {10, "counterexample fixtures", fixtures, 0},
      {11, "existence desk check", existence, 0},
      {12, "reproducibility", reproducibility, 0},
  };
  int passed = 0;
  for (auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit > 0 && secs > c.limit) {
      o.pass = false;
      o.detail += "; took " + std::to_string(secs) + " s, limit " + std::to_string(c.limit) + " s";
    }
    passed += o.pass;
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.1f s", secs);
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail << " [" << timing
              << "]" << std::endl;
  }
  std::cout << passed << "/" << criteria.size() << " criteria pass" << std::endl;
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
