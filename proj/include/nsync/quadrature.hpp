#pragma once

// Gaussian expectations by quadrature. Used as the independent reference for
// the closed-form equivalent gains; nothing here calls erf.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nsync::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the standard normal weight (probabilists' Hermite),
/// weights summing to one. Golub-Welsch on the symmetric Jacobi matrix.
inline Rule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
    jacobi(i - 1, i) = jacobi(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = v0 * v0;
  }
  return r;
}

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// E[f(X)], X ~ N(m, v), by an n-point Gauss-Hermite rule. Exact for
/// polynomials of degree < 2n.
template <class F>
double expectation(F&& f, double m, double v, int nodes) {
  if (v < 0.0) throw std::invalid_argument("expectation: variance must be >= 0");
  if (nodes < 2) throw std::invalid_argument("expectation: need at least 2 nodes");
  const Rule r = gauss_hermite(nodes);
  const double sd = std::sqrt(v);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) acc += r.weights[i] * f(m + sd * r.nodes[i]);
  return acc;
}

/// E[f(X)], X ~ N(m, v), for f smooth between the given breakpoints. The
/// Gaussian measure is truncated at +-`span` standard deviations, cut at each
/// breakpoint and into panels no wider than one standard deviation, and every
/// panel gets an n-point Gauss-Legendre rule against the normal density.
template <class F>
double piecewise_expectation(F&& f, double m, double v, int nodes,
                             std::span<const double> breakpoints, double span = 12.0) {
  if (v < 0.0) throw std::invalid_argument("piecewise_expectation: variance must be >= 0");
  if (v == 0.0) return f(m);
  const double sd = std::sqrt(v);
  std::vector<double> cuts{-span, span};
  for (double b : breakpoints) {
    const double z = (b - m) / sd;
    if (z > -span && z < span) cuts.push_back(z);
  }
  std::sort(cuts.begin(), cuts.end());
  const Rule gl = gauss_legendre(nodes);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    const int panels = std::max(1, static_cast<int>(std::ceil(b - a)));
    const double w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * w;
      for (int i = 0; i < nodes; ++i) {
        const double z = lo + 0.5 * w * (gl.nodes[i] + 1.0);
        acc += 0.5 * w * gl.weights[i] * norm * std::exp(-0.5 * z * z) * f(m + sd * z);
      }
    }
  }
  return acc;
}

}  // namespace nsync::quad
