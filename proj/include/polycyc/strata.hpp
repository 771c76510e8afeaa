#pragma once
// Gradient frames, C0/C1 level-set pseudodistances, a_P-regularity and
// Whitney probes, Lagrange multiplier systems.

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "polycyc/polyring.hpp"

namespace polycyc {

/// Polynomials compiled to dense exponent rows for fast double evaluation.
class CompiledMap {
 public:
  CompiledMap() = default;
  CompiledMap(const std::vector<Polynomial>& P, const std::vector<VarId>& x) : x_(x), symbolic_(P) {
    for (auto& p : P) {
      for (VarId v : p.variables())
        if (std::find(x.begin(), x.end(), v) == x.end())
          throw std::invalid_argument("CompiledMap: '" + p.universe()->name(v) + "' is not a coordinate");
      comps_.push_back(compile(p));
      std::vector<Compiled> row;
      for (VarId v : x) row.push_back(compile(p.differentiate(v)));
      grads_.push_back(std::move(row));
    }
  }

  std::size_t N() const { return x_.size(); }
  std::size_t k() const { return comps_.size(); }
  const std::vector<VarId>& coords() const { return x_; }
  const std::vector<Polynomial>& polynomials() const { return symbolic_; }

  Eigen::VectorXd value(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(k()));
    for (std::size_t i = 0; i < k(); ++i) out[static_cast<Eigen::Index>(i)] = eval(comps_[i], z);
    return out;
  }
  /// k x N Jacobian.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(k()), static_cast<Eigen::Index>(N()));
    for (std::size_t i = 0; i < k(); ++i)
      for (std::size_t j = 0; j < N(); ++j) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval(grads_[i][j], z);
    return J;
  }

 private:
  struct Compiled {
    std::vector<double> coef;
    std::vector<std::vector<std::uint32_t>> exps;
  };
  Compiled compile(const Polynomial& p) const {
    Compiled c;
    for (auto& [m, q] : p.terms()) {
      std::vector<std::uint32_t> e(x_.size(), 0);
      for (auto& [v, d] : m.factors()) e[static_cast<std::size_t>(std::find(x_.begin(), x_.end(), v) - x_.begin())] = d;
      c.coef.push_back(q.get_d());
      c.exps.push_back(std::move(e));
    }
    return c;
  }
  static double eval(const Compiled& c, const Eigen::VectorXd& z) {
    double acc = 0;
    for (std::size_t t = 0; t < c.coef.size(); ++t) {
      double v = c.coef[t];
      for (std::size_t i = 0; i < c.exps[t].size(); ++i)
        for (std::uint32_t e = 0; e < c.exps[t][i]; ++e) v *= z[static_cast<Eigen::Index>(i)];
      acc += v;
    }
    return acc;
  }

  std::vector<VarId> x_;
  std::vector<Polynomial> symbolic_;
  std::vector<Compiled> comps_;
  std::vector<std::vector<Compiled>> grads_;
};

struct FrameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// (v_1*, ..., v_k*) with v_j* = v_j - sum_{i<j} (v_j, v_i*)/(v_i*, v_i*) v_i*.
struct GradientFrame {
  std::vector<Eigen::VectorXd> vectors;
};

inline GradientFrame grammSchmidt(const std::vector<Eigen::VectorXd>& v, double maxCondition = 1e12) {
  if (v.empty()) throw std::invalid_argument("grammSchmidt: no vectors");
  const auto N = v[0].size();
  Eigen::MatrixXd M(N, static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j].size() != N) throw std::invalid_argument("grammSchmidt: vectors of different lengths");
    M.col(static_cast<Eigen::Index>(j)) = v[j];
  }
  if (static_cast<std::size_t>(N) < v.size()) throw FrameError("grammSchmidt: more vectors than dimensions");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  auto s = svd.singularValues();
  if (!(s[s.size() - 1] > 0) || s[0] / s[s.size() - 1] > maxCondition)
    throw FrameError("grammSchmidt: vectors are numerically dependent");
  GradientFrame f;
  for (auto& vj : v) {
    Eigen::VectorXd w = vj;
    for (auto& u : f.vectors) w -= (vj.dot(u) / u.dot(u)) * u;
    f.vectors.push_back(w);
  }
  return f;
}

inline GradientFrame frameAt(const CompiledMap& P, const Eigen::VectorXd& x) {
  Eigen::MatrixXd J = P.jacobian(x);
  std::vector<Eigen::VectorXd> g;
  for (Eigen::Index i = 0; i < J.rows(); ++i) g.push_back(J.row(i).transpose());
  return grammSchmidt(g);
}

/// R_P = sum_j (1 - cos^2 of the angle between matching frame vectors).
inline double rDistance(const GradientFrame& fx, const GradientFrame& fy) {
  double r = 0;
  for (std::size_t j = 0; j < fx.vectors.size(); ++j) {
    const auto& a = fx.vectors[j];
    const auto& b = fy.vectors[j];
    double c = a.dot(b);
    r += 1 - (c * c) / (a.squaredNorm() * b.squaredNorm());
  }
  return std::max(0.0, r);
}

inline double qDistance(const CompiledMap& P, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return (x - y).squaredNorm() + rDistance(frameAt(P, x), frameAt(P, y));
}

/// Smallest value of 2(sin^2 a + sin^2 b) - sin^2(a + b) over an n x n grid of [0, pi]^2.
inline double sinSquaredSlack(int n) {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      double a = M_PI * i / n, b = M_PI * j / n;
      double sa = std::sin(a), sb = std::sin(b), sab = std::sin(a + b);
      worst = std::min(worst, 2 * (sa * sa + sb * sb) - sab * sab);
    }
  return worst;
}

/**
 * @brief Smallest normalized squared inner product between matching frame
 * vectors. The planes spanned by two frames coincide when this equals 1 for
 * every vector, so a family of frames converges when it tends to 1.
 */
inline double frameAlignment(const GradientFrame& a, const GradientFrame& b) {
  double m = 1;
  for (std::size_t j = 0; j < a.vectors.size(); ++j) {
    double c = a.vectors[j].dot(b.vectors[j]);
    m = std::min(m, c * c / (a.vectors[j].squaredNorm() * b.vectors[j].squaredNorm()));
  }
  return m;
}

/// Orthonormal basis of the null space, rank tolerance relTol times the largest singular value.
inline Eigen::MatrixXd nullSpace(const Eigen::MatrixXd& A, double relTol = 1e-8) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  auto s = svd.singularValues();
  double tol = relTol * (s.size() ? s[0] : 0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

/// Largest angle from a unit vector of span(A) to span(B); both orthonormal column bases.
inline double containmentAngle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() == 0) return 0;
  if (B.cols() == 0) return M_PI / 2;
  Eigen::MatrixXd R = A - B * (B.transpose() * A);
  double s = Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues()[0];
  return std::asin(std::min(1.0, s));
}

/// Symmetric distance between planes of equal dimension (largest principal angle).
inline double planeAngle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols()) return M_PI / 2;
  return std::max(containmentAngle(A, B), containmentAngle(B, A));
}

// ---------------------------------------------------------------------------
// Level sets and pseudodistances

struct SamplerConfig {
  unsigned gridPerAxis = 14;     // seeds per axis in [-1, 1]^N
  double newtonTol = 1e-12;      // |P - a| at acceptance
  unsigned newtonIters = 40;
  double dedupRadius = 0.02;     // sample resolution
  unsigned refineStarts = 2;     // local refinements per inf
  unsigned refineIters = 40;
};

struct LevelSetSample {
  Eigen::VectorXd a;
  std::vector<Eigen::VectorXd> points;  // in the closed unit ball
  std::size_t seeds = 0;
  std::size_t boundaryPoints = 0;
};

namespace detail {

/// Minimum-norm Newton projection onto {P = a} (and |z| = 1 when onSphere).
inline std::optional<Eigen::VectorXd> projectToLevel(const CompiledMap& P, const Eigen::VectorXd& a, Eigen::VectorXd z,
                                                     bool onSphere, const SamplerConfig& cfg) {
  for (unsigned it = 0; it < cfg.newtonIters; ++it) {
    Eigen::VectorXd g = P.value(z) - a;
    Eigen::MatrixXd J = P.jacobian(z);
    if (onSphere) {
      g.conservativeResize(g.size() + 1);
      g[g.size() - 1] = z.squaredNorm() - 1;
      J.conservativeResize(J.rows() + 1, Eigen::NoChange);
      J.row(J.rows() - 1) = 2 * z.transpose();
    }
    if (g.norm() < cfg.newtonTol) return z;
    Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-g);
    z += step;
    if (!z.allFinite() || z.norm() > 10) return std::nullopt;
  }
  Eigen::VectorXd g = P.value(z) - a;
  if (g.norm() < cfg.newtonTol * 10 && (!onSphere || std::fabs(z.squaredNorm() - 1) < 1e-11)) return z;
  return std::nullopt;
}

inline void addDistinct(std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& z, double r) {
  for (auto& p : pts)
    if ((p - z).norm() < r) return;
  pts.push_back(z);
}

}  // namespace detail

/// Grid seeds projected onto L_a, kept inside the unit ball, plus projections onto L_a on the sphere.
inline LevelSetSample sampleLevelSet(const CompiledMap& P, const Eigen::VectorXd& a, const SamplerConfig& cfg = {}) {
  LevelSetSample s;
  s.a = a;
  const std::size_t N = P.N();
  std::vector<unsigned> idx(N, 0);
  const bool sphere = N > P.k();
  while (true) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) z[static_cast<Eigen::Index>(i)] = -1 + 2.0 * (idx[i] + 0.5) / cfg.gridPerAxis;
    ++s.seeds;
    if (auto p = detail::projectToLevel(P, a, z, false, cfg); p && p->norm() <= 1) detail::addDistinct(s.points, *p, cfg.dedupRadius);
    if (sphere)
      if (auto p = detail::projectToLevel(P, a, z / std::max(1e-3, z.norm()), true, cfg)) {
        std::size_t before = s.points.size();
        detail::addDistinct(s.points, *p, cfg.dedupRadius);
        s.boundaryPoints += s.points.size() - before;
      }
    std::size_t i = 0;
    while (i < N && ++idx[i] == cfg.gridPerAxis) idx[i++] = 0;
    if (i == N) break;
  }
  return s;
}

/**
 * @brief Local minimum of f on L_a intersected with the unit ball.
 *
 * Projected gradient steps with a Newton retraction; when the step leaves
 * the ball the point is retracted onto L_a on the sphere instead. The
 * gradient of f is a central difference.
 */
inline Eigen::VectorXd minimizeOnLevel(const CompiledMap& P, const Eigen::VectorXd& a,
                                       const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd y,
                                       const SamplerConfig& cfg = {}) {
  const auto N = static_cast<Eigen::Index>(P.N());
  double fy = f(y);
  double stepLen = 0.05;
  for (unsigned it = 0; it < cfg.refineIters; ++it) {
    Eigen::VectorXd g(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      double h = 1e-6;
      Eigen::VectorXd yp = y, ym = y;
      yp[i] += h;
      ym[i] -= h;
      g[i] = (f(yp) - f(ym)) / (2 * h);
    }
    Eigen::MatrixXd C = P.jacobian(y);
    const bool onSphere = std::fabs(y.norm() - 1) < 1e-9;
    if (onSphere && g.dot(y) < 0) {
      C.conservativeResize(C.rows() + 1, Eigen::NoChange);
      C.row(C.rows() - 1) = y.transpose();
    }
    Eigen::MatrixXd T = nullSpace(C, 1e-10);
    Eigen::VectorXd p = -(T * (T.transpose() * g));
    if (p.norm() < 1e-12) break;
    bool accepted = false;
    for (int bt = 0; bt < 30 && !accepted; ++bt) {
      Eigen::VectorXd cand = y + (stepLen / p.norm()) * p;
      auto r = detail::projectToLevel(P, a, cand, false, cfg);
      if (r && r->norm() > 1) r = detail::projectToLevel(P, a, *r / r->norm(), true, cfg);
      if (r && r->norm() <= 1 + 1e-12) {
        double fr = f(*r);
        if (fr < fy) {
          y = *r;
          fy = fr;
          accepted = true;
          stepLen *= 1.5;
          break;
        }
      }
      stepLen *= 0.5;
    }
    if (!accepted || stepLen < 1e-14) break;
  }
  return y;
}

struct DistanceEstimate {
  double value = 0;
  std::size_t samplesA = 0, samplesB = 0;
  double resolution = 0;
};

/// Estimates of d_0(a, b) and d_{1,P}(a, b): sup over x in L_b of inf over y in L_a.
struct DirectedDistances {
  double c0 = 0, c1 = 0;
};

inline DirectedDistances directedDistances(const CompiledMap& P, const LevelSetSample& La, const LevelSetSample& Lb,
                                           const SamplerConfig& cfg = {}) {
  if (La.points.empty() || Lb.points.empty()) throw std::runtime_error("pseudodistance: empty level set in the unit ball");
  std::vector<GradientFrame> fa;
  for (auto& y : La.points) fa.push_back(frameAt(P, y));
  DirectedDistances out;
  for (auto& x : Lb.points) {
    GradientFrame fx = frameAt(P, x);
    auto d0 = [&](const Eigen::VectorXd& y) { return (x - y).squaredNorm(); };
    auto q = [&](const Eigen::VectorXd& y) {
      try {
        return (x - y).squaredNorm() + rDistance(fx, frameAt(P, y));
      } catch (const FrameError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    std::vector<std::size_t> order(La.points.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> qv(order.size()), dv(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      dv[i] = d0(La.points[i]);
      qv[i] = dv[i] + rDistance(fx, fa[i]);
    }
    double best0 = *std::min_element(dv.begin(), dv.end());
    double best1 = *std::min_element(qv.begin(), qv.end());
    auto refine = [&](const std::vector<double>& vals, const std::function<double(const Eigen::VectorXd&)>& f,
                      double& best, std::vector<Eigen::VectorXd>* found) {
      std::vector<std::size_t> o = order;
      std::partial_sort(o.begin(), o.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(cfg.refineStarts, o.size())),
                        o.end(), [&](std::size_t i, std::size_t j) { return vals[i] < vals[j]; });
      for (std::size_t s = 0; s < std::min<std::size_t>(cfg.refineStarts, o.size()); ++s) {
        Eigen::VectorXd y = minimizeOnLevel(P, La.a, f, La.points[o[s]], cfg);
        best = std::min(best, f(y));
        if (found) found->push_back(y);
      }
    };
    std::vector<Eigen::VectorXd> qMinimizers;
    refine(qv, q, best1, &qMinimizers);
    refine(dv, d0, best0, nullptr);
    // every point tried for Q is also a candidate for the plain distance
    for (auto& y : qMinimizers) best0 = std::min(best0, d0(y));
    out.c0 = std::max(out.c0, best0);
    out.c1 = std::max(out.c1, best1);
  }
  return out;
}

struct PseudoDistances {
  double D0 = 0, D1 = 0;
  std::size_t samplesA = 0, samplesB = 0;
  double resolution = 0;
};

/// D^0_P(a, b) and D^1_P(a, b), both symmetrized.
inline PseudoDistances pseudoDistances(const CompiledMap& P, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                       const SamplerConfig& cfg = {}) {
  LevelSetSample La = sampleLevelSet(P, a, cfg), Lb = sampleLevelSet(P, b, cfg);
  auto ab = directedDistances(P, La, Lb, cfg), ba = directedDistances(P, Lb, La, cfg);
  PseudoDistances d;
  d.D0 = 0.5 * (ab.c0 + ba.c0);
  d.D1 = 0.5 * (ab.c1 + ba.c1);
  d.samplesA = La.points.size();
  d.samplesB = Lb.points.size();
  d.resolution = cfg.dedupRadius;
  return d;
}

inline double c1PseudoDistance(const CompiledMap& P, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                               const SamplerConfig& cfg = {}) {
  return pseudoDistances(P, a, b, cfg).D1;
}

// ---------------------------------------------------------------------------
// Lagrange multiplier systems

struct LagrangeSystem {
  enum class Which { first, second } which = Which::first;
  std::vector<Polynomial> equations;
  std::vector<VarId> unknowns;     // eliminated block followed by c
  std::vector<VarId> multipliers;  // lambda_1..lambda_{k+1}
  std::vector<VarId> parameters;   // fixed point and values
  std::vector<std::string> notes;
};

/// Q_P(x, y) = T / S with polynomial T, S (not reduced to lowest terms).
struct QRational {
  Polynomial T, S;
  std::vector<VarId> x, y;
};

/**
 * @brief Fraction-free frames: N_j = (prod_{i<j} |N_i|^2) v_j - sum_i (v_j.N_i) (prod_{l<j, l!=i} |N_l|^2) N_i,
 * a positive multiple of v_j*, so the cos^2 ratios of R_P are unchanged.
 */
inline std::vector<std::vector<Polynomial>> fractionFreeFrame(const std::vector<Polynomial>& P, const std::vector<VarId>& x) {
  auto dot = [](const std::vector<Polynomial>& a, const std::vector<Polynomial>& b) {
    Polynomial s(a[0].universe());
    for (std::size_t i = 0; i < a.size(); ++i) s = s + a[i] * b[i];
    return s;
  };
  std::vector<std::vector<Polynomial>> Nv;
  std::vector<Polynomial> norms;
  for (auto& p : P) {
    std::vector<Polynomial> v;
    for (VarId xi : x) v.push_back(p.differentiate(xi));
    const std::size_t j = Nv.size();
    Polynomial all(p.universe(), 1);
    for (std::size_t i = 0; i < j; ++i) all = all * norms[i];
    std::vector<Polynomial> w;
    for (auto& c : v) w.push_back(all * c);
    for (std::size_t i = 0; i < j; ++i) {
      Polynomial coef = dot(v, Nv[i]);
      for (std::size_t l = 0; l < j; ++l)
        if (l != i) coef = coef * norms[l];
      for (std::size_t t = 0; t < w.size(); ++t) w[t] = w[t] - coef * Nv[i][t];
    }
    norms.push_back(dot(w, w));
    Nv.push_back(std::move(w));
  }
  return Nv;
}

inline QRational qRational(const std::vector<Polynomial>& P, const std::vector<VarId>& x) {
  if (P.empty()) throw std::invalid_argument("qRational: empty map");
  UniversePtr u = P[0].universe();
  QRational q;
  q.x = x;
  std::unordered_map<VarId, Polynomial> toY;
  for (VarId v : x) {
    VarId y = u->intern(u->name(v) + "_y", VarKind::phase);
    q.y.push_back(y);
    toY.emplace(v, Polynomial::variable(u, y));
  }
  auto Fx = fractionFreeFrame(P, x);
  std::vector<Polynomial> A, B;
  for (auto& n : Fx) {
    Polynomial dxy(u), nx(u), ny(u);
    for (auto& c : n) {
      Polynomial cy = c.substitute(toY);
      dxy = dxy + c * cy;
      nx = nx + c * c;
      ny = ny + cy * cy;
    }
    A.push_back(dxy * dxy);
    B.push_back(nx * ny);
  }
  Polynomial S(u, 1);
  for (auto& b : B) S = S * b;
  Polynomial dist(u);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Polynomial d = Polynomial::variable(u, x[i]) - Polynomial::variable(u, q.y[i]);
    dist = dist + d * d;
  }
  Polynomial T = (dist + Polynomial(u, Rational(static_cast<long>(P.size())))) * S;
  for (std::size_t j = 0; j < A.size(); ++j) {
    Polynomial others(u, 1);
    for (std::size_t i = 0; i < B.size(); ++i)
      if (i != j) others = others * B[i];
    T = T - A[j] * others;
  }
  q.T = T;
  q.S = S;
  return q;
}

/**
 * @brief The two Lagrange systems for the extremal values of Q_P.
 *
 * First: S grad_y T - T grad_y S + S^2 [sum lambda_j grad P_j(y) - lambda_{k+1} grad r(y)] = 0,
 * P(y) = a, T - c S = 0, lambda_{k+1} r(y) = 0, in (y, lambda, c) with x and a fixed.
 * Second, given a polynomial Rt(x, a, c) vanishing on the first system's
 * extremal values: d_x Rt + [sum lambda_j grad P_j(x) - lambda_{k+1} grad r(x)] d_c Rt = 0,
 * Rt = 0, P(x) = a', lambda_{k+1} r(x) = 0.
 */
inline std::pair<LagrangeSystem, LagrangeSystem> buildLagrangeSystems(const std::vector<Polynomial>& P, const std::vector<VarId>& x,
                                                                      const std::optional<Polynomial>& Rt = std::nullopt,
                                                                      const std::string& prefix = "") {
  UniversePtr u = P.at(0).universe();
  const std::size_t k = P.size(), N = x.size();
  QRational q = qRational(P, x);
  Polynomial S = q.S, T = q.T;
  if (S.isZero()) throw std::invalid_argument("buildLagrangeSystems: S_P vanishes identically");

  std::vector<VarId> lam, a, a2;
  for (std::size_t j = 1; j <= k + 1; ++j) lam.push_back(u->intern(prefix + "mult" + std::to_string(j), VarKind::multiplier));
  for (std::size_t j = 1; j <= k; ++j) a.push_back(u->intern(prefix + "a" + std::to_string(j), VarKind::value));
  for (std::size_t j = 1; j <= k; ++j) a2.push_back(u->intern(prefix + "b" + std::to_string(j), VarKind::value));
  VarId c = u->intern(prefix + "c", VarKind::value);
  Polynomial C = Polynomial::variable(u, c);

  std::unordered_map<VarId, Polynomial> toY;
  for (std::size_t i = 0; i < N; ++i) toY.emplace(x[i], Polynomial::variable(u, q.y[i]));
  auto r = [&](const std::vector<VarId>& z) {
    Polynomial s(u, 1);
    for (VarId v : z) s = s - Polynomial::variable(u, v, 2);
    return s;
  };

  LagrangeSystem first;
  first.which = LagrangeSystem::Which::first;
  Polynomial ry = r(q.y), S2 = S * S;
  for (std::size_t i = 0; i < N; ++i) {
    VarId yi = q.y[i];
    Polynomial e = S * T.differentiate(yi) - T * S.differentiate(yi);
    Polynomial bracket(u);
    for (std::size_t j = 0; j < k; ++j) bracket = bracket + Polynomial::variable(u, lam[j]) * P[j].substitute(toY).differentiate(yi);
    bracket = bracket - Polynomial::variable(u, lam[k]) * ry.differentiate(yi);
    first.equations.push_back(e + S2 * bracket);
  }
  for (std::size_t j = 0; j < k; ++j) first.equations.push_back(P[j].substitute(toY) - Polynomial::variable(u, a[j]));
  first.equations.push_back(T - C * S);
  first.equations.push_back(Polynomial::variable(u, lam[k]) * ry);
  first.unknowns = q.y;
  first.unknowns.push_back(c);
  first.multipliers = lam;
  first.parameters = x;
  first.parameters.insert(first.parameters.end(), a.begin(), a.end());
  first.notes.push_back("gradients of P and r are taken at y, the optimization variable");

  LagrangeSystem second;
  second.which = LagrangeSystem::Which::second;
  second.multipliers = lam;
  second.unknowns = x;
  second.unknowns.push_back(c);
  second.parameters = a;
  second.parameters.insert(second.parameters.end(), a2.begin(), a2.end());
  if (!Rt) {
    second.notes.push_back("needs the eliminant Rt(x, a, c) of the first system; not built");
  } else {
    Polynomial rx = r(x);
    Polynomial dc = Rt->differentiate(c);
    for (std::size_t i = 0; i < N; ++i) {
      Polynomial bracket(u);
      for (std::size_t j = 0; j < k; ++j) bracket = bracket + Polynomial::variable(u, lam[j]) * P[j].differentiate(x[i]);
      bracket = bracket - Polynomial::variable(u, lam[k]) * rx.differentiate(x[i]);
      second.equations.push_back(Rt->differentiate(x[i]) + bracket * dc);
    }
    second.equations.push_back(*Rt);
    for (std::size_t j = 0; j < k; ++j) second.equations.push_back(P[j] - Polynomial::variable(u, a2[j]));
    second.equations.push_back(Polynomial::variable(u, lam[k]) * rx);
    second.notes.push_back("gradient equation from the implicit function theorem: d_x c = -d_x Rt / d_c Rt");
  }
  return {first, second};
}

struct MultiplierFit {
  std::vector<double> multipliers;
  double residual = 0;  // max |equation| after the fit
};

/**
 * @brief Least-squares fit of the multipliers (the equations are affine in
 * them) at a point assigning every other variable, then the max residual.
 */
inline MultiplierFit fitMultipliers(const LagrangeSystem& sys, std::unordered_map<VarId, double> at) {
  const std::size_t m = sys.multipliers.size(), E = sys.equations.size();
  for (VarId l : sys.multipliers) at[l] = 0;
  Eigen::VectorXd b(static_cast<Eigen::Index>(E));
  for (std::size_t i = 0; i < E; ++i) b[static_cast<Eigen::Index>(i)] = sys.equations[i].evaluate(at);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(E), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    at[sys.multipliers[j]] = 1;
    for (std::size_t i = 0; i < E; ++i)
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sys.equations[i].evaluate(at) - b[static_cast<Eigen::Index>(i)];
    at[sys.multipliers[j]] = 0;
  }
  Eigen::VectorXd lam = A.completeOrthogonalDecomposition().solve(-b);
  MultiplierFit fit;
  for (std::size_t j = 0; j < m; ++j) {
    fit.multipliers.push_back(lam[static_cast<Eigen::Index>(j)]);
    at[sys.multipliers[j]] = lam[static_cast<Eigen::Index>(j)];
  }
  for (auto& e : sys.equations) fit.residual = std::max(fit.residual, std::fabs(e.evaluate(at)));
  return fit;
}

// ---------------------------------------------------------------------------
// a_P-regularity and Whitney conditions

/// Stratum given by polynomial equations (inequalities are left to the caller's sequences).
struct Stratum {
  std::vector<Polynomial> equations;
};

struct APVerdict {
  bool regular = true;
  double angle = 0;  // tail minimum of the containment angle
  std::vector<double> angles;
  std::vector<Eigen::Index> kernelDims;
  Eigen::Index lowerKernelDim = 0;
  bool kernelJump = false;   // kernel at x larger than along the sequence
  bool rankStable = true;    // kernel dimension constant along the sequence
};

namespace detail {

inline Eigen::MatrixXd stackedGradients(const std::vector<Polynomial>& F, const std::vector<VarId>& x, const Eigen::VectorXd& z) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(F.size()), static_cast<Eigen::Index>(x.size()));
  std::unordered_map<VarId, double> at;
  for (std::size_t i = 0; i < x.size(); ++i) at[x[i]] = z[static_cast<Eigen::Index>(i)];
  for (std::size_t r = 0; r < F.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = F[r].differentiate(x[c]).evaluate(at);
  return M;
}

/// Kernel of dP restricted to the tangent space of the stratum, computed inside that tangent space.
inline Eigen::MatrixXd restrictedKernel(const std::vector<Polynomial>& eqs, const std::vector<Polynomial>& P,
                                        const std::vector<VarId>& x, const Eigen::VectorXd& z) {
  Eigen::MatrixXd T = eqs.empty() ? Eigen::MatrixXd::Identity(z.size(), z.size()) : nullSpace(stackedGradients(eqs, x, z));
  if (T.cols() == 0) return T;
  return T * nullSpace(stackedGradients(P, x, z) * T, 1e-13);
}

}  // namespace detail

/**
 * @brief Probes a_P-regularity of the upper stratum over the lower one at x:
 * along the sequence, the kernels of dP on the upper stratum should converge
 * to a plane containing the kernel of dP on the lower stratum at x. The
 * verdict fails when the containment angle stays at least minAngle over the
 * last tail entries of the sequence.
 */
inline APVerdict apRegularityProbe(const std::vector<Polynomial>& P, const std::vector<VarId>& x, const Stratum& upper,
                                   const Stratum& lower, const Eigen::VectorXd& point, const std::vector<Eigen::VectorXd>& seq,
                                   double minAngle = 1e-3, std::size_t tail = 3) {
  if (seq.empty()) throw std::invalid_argument("apRegularityProbe: empty sequence");
  APVerdict v;
  Eigen::MatrixXd Kx = detail::restrictedKernel(lower.equations, P, x, point);
  v.lowerKernelDim = Kx.cols();
  for (auto& z : seq) {
    Eigen::MatrixXd K = detail::restrictedKernel(upper.equations, P, x, z);
    v.kernelDims.push_back(K.cols());
    v.angles.push_back(containmentAngle(Kx, K));
  }
  for (auto d : v.kernelDims)
    if (d != v.kernelDims.front()) v.rankStable = false;
  v.kernelJump = v.lowerKernelDim > v.kernelDims.back();
  tail = std::min(tail, seq.size());
  v.angle = *std::min_element(v.angles.end() - static_cast<std::ptrdiff_t>(tail), v.angles.end());
  v.regular = v.angle < minAngle;
  return v;
}

struct WhitneyVerdict {
  bool vacuous = false;
  bool aHolds = true, bHolds = true;
  double aAngle = 0, bAngle = 0;  // tail minima
  double tangentDrift = 0;        // plane angle between the last two tangent planes
  std::vector<double> aAngles, bAngles;
};

/**
 * @brief Conditions (a) and (b) of the upper stratum over the lower one at x,
 * along witness sequences x_k in the upper and y_k in the lower stratum. The
 * limit plane is estimated by the last tangent plane. Condition (b) implies
 * (a), so a (b) pass with an (a) failure is reported as an (a) failure.
 */
inline WhitneyVerdict whitneyCheck(const std::vector<VarId>& x, const Stratum& upper, const std::optional<Stratum>& lower,
                                   const Eigen::VectorXd& point, const std::vector<Eigen::VectorXd>& xs,
                                   const std::vector<Eigen::VectorXd>& ys, double minAngle = 1e-3, std::size_t tail = 3) {
  WhitneyVerdict w;
  if (!lower) {
    w.vacuous = true;
    return w;
  }
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("whitneyCheck: witness sequences must be nonempty and of equal length");
  Eigen::MatrixXd Tb = nullSpace(detail::stackedGradients(lower->equations, x, point));
  std::vector<Eigen::MatrixXd> planes;
  for (auto& z : xs) planes.push_back(nullSpace(detail::stackedGradients(upper.equations, x, z)));
  const Eigen::MatrixXd& tau = planes.back();
  if (planes.size() > 1) w.tangentDrift = planeAngle(planes[planes.size() - 2], tau);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    w.aAngles.push_back(containmentAngle(Tb, planes[i]));
    Eigen::VectorXd l = xs[i] - ys[i];
    if (l.norm() == 0) throw std::invalid_argument("whitneyCheck: x_k = y_k");
    Eigen::MatrixXd L = l.normalized();
    w.bAngles.push_back(containmentAngle(L, planes[i]));
  }
  tail = std::min(tail, xs.size());
  auto tailMin = [&](const std::vector<double>& v) { return *std::min_element(v.end() - static_cast<std::ptrdiff_t>(tail), v.end()); };
  w.aAngle = tailMin(w.aAngles);
  w.bAngle = tailMin(w.bAngles);
  w.aHolds = w.aAngle < minAngle;
  w.bHolds = w.bAngle < minAngle && w.aHolds;
  return w;
}

// ---------------------------------------------------------------------------
// Inductive chain

/**
 * @brief P_j^0 = P_j - (P_1 ... P_{j-1})^{m_j} for j = 2..k and the maps
 * P^s = (P_1, P_2^0, ..., P_s^0, P_{s+1}, ..., P_k), s = 1..k.
 */
inline std::vector<std::vector<Polynomial>> inductiveChain(const std::vector<Polynomial>& P, const std::vector<unsigned>& m) {
  if (m.size() != P.size()) throw std::invalid_argument("inductiveChain: m must have one entry per component");
  std::vector<Polynomial> P0{P[0]};
  Polynomial prod = P[0];
  for (std::size_t j = 1; j < P.size(); ++j) {
    P0.push_back(P[j] - prod.pow(m[j]));
    prod = prod * P[j];
  }
  std::vector<std::vector<Polynomial>> chain;
  for (std::size_t s = 1; s <= P.size(); ++s) {
    std::vector<Polynomial> Ps(P0.begin(), P0.begin() + static_cast<std::ptrdiff_t>(s));
    Ps.insert(Ps.end(), P.begin() + static_cast<std::ptrdiff_t>(s), P.end());
    chain.push_back(std::move(Ps));
  }
  return chain;
}

/// Value of P matching the value b of P^s: a_1 = b_1, a_j = b_j + (a_1 ... a_{j-1})^{m_j} for j <= s.
inline std::vector<double> chainValueToOriginal(const std::vector<double>& b, const std::vector<unsigned>& m, std::size_t s) {
  std::vector<double> a = b;
  double prod = a[0];
  for (std::size_t j = 1; j < a.size(); ++j) {
    if (j < s) a[j] = b[j] + std::pow(prod, m[j]);
    prod *= a[j];
  }
  return a;
}

}  // namespace polycyc
