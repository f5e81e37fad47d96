#pragma once

#include <numbers>
#include <span>

#include "dsrn/common.hpp"

namespace dsrn {

struct Quadrature1d {
  Vec nodes, weights;  // on [-1, 1]
};

/// Gauss-Legendre nodes by Newton iteration on P_n; deterministic.
inline Quadrature1d gauss_legendre(int n) {
  if (n < 1) throw SpecError("quadrature order must be positive");
  Quadrature1d q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[i] = x;
    q.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return q;
}

/// Tensor quadrature over a box; visits points in a fixed axis-major order.
template <typename F>
void tensor_quadrature(const Quadrature1d& q, std::span<const double> lo, std::span<const double> hi, F&& visit) {
  const int d = static_cast<int>(lo.size());
  const int n = static_cast<int>(q.nodes.size());
  std::vector<int> idx(d, 0);
  Vec y(d);
  for (;;) {
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      double half = 0.5 * (hi[j] - lo[j]);
      y[j] = lo[j] + half * (q.nodes[idx[j]] + 1.0);
      w *= half * q.weights[idx[j]];
    }
    visit(std::span<const double>(y), w);
    int j = 0;
    while (j < d && ++idx[j] == n) idx[j++] = 0;
    if (j == d) break;
  }
}

}  // namespace dsrn
