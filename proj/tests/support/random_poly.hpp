#pragma once
#include <random>

#include "polycyc/polyring.hpp"

namespace testsupport {

using namespace polycyc;

inline Rational randomRational(std::mt19937_64& rng, int range = 5) {
  std::uniform_int_distribution<int> num(-range, range), den(1, 3);
  Rational q(num(rng), den(rng));
  q.canonicalize();
  return q;
}

/// Random polynomial with up to `terms` terms, total degree <= deg.
inline Polynomial randomPoly(std::mt19937_64& rng, const UniversePtr& u, const std::vector<VarId>& vars, int deg,
                             int terms) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vars.size()) - 1), dd(0, deg);
  std::vector<Polynomial::Term> ts;
  for (int t = 0; t < terms; ++t) {
    int d = dd(rng);
    std::vector<Monomial::Factor> fs;
    for (int i = 0; i < d; ++i) fs.emplace_back(vars[pick(rng)], 1);
    ts.emplace_back(Monomial::fromFactors(fs), randomRational(rng));
  }
  return Polynomial::fromTerms(u, std::move(ts));
}

/// Leibniz permutation-sum determinant: independent of the library's expansion.
inline Polynomial leibnizDeterminant(const PolyMatrix& m, const UniversePtr& u) {
  std::vector<int> perm(m.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  Polynomial acc(u);
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = i + 1; j < perm.size(); ++j)
        if (perm[i] > perm[j]) ++inversions;
    Polynomial t(u, 1);
    for (std::size_t i = 0; i < perm.size(); ++i) t = t * m[i][perm[i]];
    acc = inversions % 2 ? acc - t : acc + t;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

}  // namespace testsupport
