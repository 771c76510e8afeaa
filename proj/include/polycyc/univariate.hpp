#pragma once
// Dense univariate polynomials in double precision.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace polycyc {

/// c[i] is the coefficient of u^i.
struct UniPoly {
  std::vector<double> c;

  double operator()(double u) const {
    double acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * u + *it;
    return acc;
  }
  UniPoly derivative() const {
    UniPoly d;
    for (std::size_t i = 1; i < c.size(); ++i) d.c.push_back(static_cast<double>(i) * c[i]);
    return d;
  }
  int degree() const {
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i)
      if (c[i] != 0) return i;
    return -1;
  }

  /// Real roots from the companion matrix, sorted, imaginary parts below tol dropped.
  std::vector<double> realRoots(double tol = 1e-9) const {
    int d = degree();
    std::vector<double> out;
    if (d <= 0) return out;
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
    for (int i = 1; i < d; ++i) comp(i, i - 1) = 1;
    for (int i = 0; i < d; ++i) comp(i, d - 1) = -c[i] / c[d];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (int i = 0; i < d; ++i) {
      auto z = es.eigenvalues()[i];
      if (std::fabs(z.imag()) <= tol * std::max(1.0, std::abs(z))) out.push_back(polish(z.real()));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// True when the polynomial has no real root in the closed interval [a, b].
  bool nonvanishingOn(double a, double b) const {
    if (a > b) std::swap(a, b);
    if ((*this)(a) == 0 || (*this)(b) == 0) return false;
    for (double r : realRoots())
      if (r >= a && r <= b) return false;
    return true;
  }

 private:
  double polish(double x) const {
    UniPoly d = derivative();
    for (int it = 0; it < 3; ++it) {
      double dv = d(x);
      if (dv == 0) break;
      x -= (*this)(x) / dv;
    }
    return x;
  }
};

}  // namespace polycyc
