#pragma once

#include <map>

#include "dsrn/quadrature.hpp"
#include "dsrn/regions.hpp"
#include "dsrn/targets.hpp"

namespace dsrn {

struct BallSpec {
  Vec center;
  double radius = 0.0;

  void validate() const {
    if (radius <= 0) throw SpecError("ball radius must be positive");
  }
};

/// Polynomial sum_{|alpha| <= n-1} c_alpha x^alpha in the global monomial
/// basis.
struct AvgTaylorPoly {
  int n = 1;
  int dim = 1;
  std::vector<MultiIndex> alphas;
  Vec coeffs;

  double value(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) acc += coeffs[t] * pow_multi(x, alphas[t]);
    return acc;
  }

  /// D^kappa of the polynomial at x.
  double derivative(const MultiIndex& kappa, std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
      const MultiIndex& a = alphas[t];
      double term = coeffs[t];
      bool alive = true;
      for (int j = 0; j < dim && alive; ++j) {
        int p = a[j], k = kappa[j];
        if (k > p) {
          alive = false;
          break;
        }
        for (int t2 = 0; t2 < k; ++t2) term *= p - t2;
        for (int t2 = 0; t2 < p - k; ++t2) term *= x[j];
      }
      if (alive) acc += term;
    }
    return acc;
  }

  Jet2 jet(std::span<const double> x) const {
    Jet2 j(dim);
    j.value = value(x);
    std::vector<int> e(dim, 0);
    for (int a = 0; a < dim; ++a) {
      e[a] = 1;
      j.grad[a] = derivative(MultiIndex(e), x);
      for (int b = a; b < dim; ++b) {
        e[b] += 1;
        double v = derivative(MultiIndex(e), x);
        j.hess[static_cast<std::size_t>(a) * dim + b] = v;
        j.hess[static_cast<std::size_t>(b) * dim + a] = v;
        e[b] -= 1;
      }
      e[a] = 0;
    }
    return j;
  }
};

struct TaylorOptions {
  int points_per_axis = 0;  // 0 = auto: 20 in 1D, 32 per axis in 2D+
  bool refinement_check = true;
  double refinement_tol = 1e-6;

  int resolved_points(int dim) const {
    if (points_per_axis > 0) return points_per_axis;
    return dim >= 2 ? 32 : 20;
  }
};

namespace detail {

inline double factorial_multi(const MultiIndex& a) {
  double r = 1.0;
  for (int j = 0; j < a.dim(); ++j)
    for (int t = 2; t <= a[j]; ++t) r *= t;
  return r;
}

inline bool leq_multi(const MultiIndex& a, const MultiIndex& b) {
  for (int j = 0; j < a.dim(); ++j)
    if (a[j] > b[j]) return false;
  return true;
}

inline MultiIndex sub_multi(const MultiIndex& b, const MultiIndex& a) {
  std::vector<int> e(b.dim());
  for (int j = 0; j < b.dim(); ++j) e[j] = b[j] - a[j];
  return MultiIndex(e);
}

/// One pass of the bump-weighted Taylor averaging at a fixed resolution.
inline Vec averaged_taylor_pass(const TargetFunction& f, const BallSpec& ball, int n,
                                const std::vector<MultiIndex>& alphas, int points_per_axis) {
  const int d = f.dim;
  Quadrature1d q = gauss_legendre(points_per_axis);
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    lo[j] = ball.center[j] - ball.radius;
    hi[j] = ball.center[j] + ball.radius;
  }
  // moments[t][u]: integral of D^{beta_t} f(y) * (-y)^{alpha_u judged by
  // kappa} collected per (beta, alpha <= beta) pair
  std::vector<std::vector<double>> moments(alphas.size(), std::vector<double>(alphas.size(), 0.0));
  double mass = 0.0;
  tensor_quadrature(q, lo, hi, [&](std::span<const double> y, double w) {
    double r2 = 0.0;
    for (int j = 0; j < d; ++j) r2 += sqr((y[j] - ball.center[j]) / ball.radius);
    if (r2 >= 1.0) return;
    double rho = std::exp(-1.0 / (1.0 - r2));
    mass += w * rho;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
      double df = f.derivative(alphas[t], y);
      for (std::size_t u = 0; u < alphas.size(); ++u) {
        if (!leq_multi(alphas[u], alphas[t])) continue;
        MultiIndex kappa = sub_multi(alphas[t], alphas[u]);
        double mono = 1.0;
        for (int j = 0; j < d; ++j)
          for (int p = 0; p < kappa[j]; ++p) mono *= -y[j];
        moments[t][u] += w * rho * df * mono;
      }
    }
  });
  if (mass <= 0) throw AccuracyError("bump quadrature captured no mass");
  Vec coeffs(alphas.size(), 0.0);
  for (std::size_t u = 0; u < alphas.size(); ++u) {
    double acc = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
      if (!leq_multi(alphas[u], alphas[t])) continue;
      MultiIndex kappa = sub_multi(alphas[t], alphas[u]);
      acc += moments[t][u] / (factorial_multi(alphas[u]) * factorial_multi(kappa));
    }
    coeffs[u] = acc / mass;
  }
  return coeffs;
}

}  // namespace detail

/// Taylor polynomial of order n averaged against the normalized bump b_r
/// over the ball: Q^n f = integral of T^n_y f(x) b_r(y) dy, returned as
/// monomial-basis coefficients. The bump normalization is computed with
/// the same quadrature rule, so polynomials of degree <= n-1 are
/// reproduced to machine precision.
inline AvgTaylorPoly averaged_taylor(const TargetFunction& f, const BallSpec& ball, int n,
                                     const TaylorOptions& opt = {}) {
  ball.validate();
  if (n < 1) throw SpecError("Taylor order must be >= 1");
  if (f.smoothness < n - 1) throw SpecError("derivative oracle order too low");
  AvgTaylorPoly p;
  p.n = n;
  p.dim = f.dim;
  p.alphas = multi_indices_up_to(f.dim, n - 1);
  const int pts = opt.resolved_points(f.dim);
  p.coeffs = detail::averaged_taylor_pass(f, ball, n, p.alphas, pts);
  if (opt.refinement_check) {
    Vec fine = detail::averaged_taylor_pass(f, ball, n, p.alphas, 2 * pts);
    double scale = 1.0, diff = 0.0;
    for (std::size_t t = 0; t < p.coeffs.size(); ++t) {
      scale = std::max(scale, std::abs(fine[t]));
      diff = std::max(diff, std::abs(fine[t] - p.coeffs[t]));
    }
    if (diff / scale > opt.refinement_tol)
      throw AccuracyError("averaged-Taylor quadrature did not converge");
    p.coeffs = std::move(fine);
  }
  return p;
}

/// Cutoff family of the Proposition-2 proof: h(4K(x - (8i+3)/(8K))),
/// equal to 1 on the cell [i/K, (3+4i)/(4K)]. The ramp spans the full
/// 1/(4K) gap between consecutive plateaus (|t| from 3/2 to 5/2 with unit
/// slope) so that the family sums to 1. Diagnostics only.
inline double cutoff_h(int K, int i, double x) {
  double t = std::abs(4.0 * K * (x - (8.0 * i + 3.0) / (8.0 * K)));
  if (t <= 1.5) return 1.0;
  if (t >= 2.5) return 0.0;
  return 2.5 - t;
}

/// Piecewise polynomial f_{K,m} = sum_alpha g_{f,alpha,m}(x) x^alpha with
/// g constant on each cell Omega_{m,i}.
struct PiecewisePolyApproximant {
  int K = 1;
  std::vector<int> m;
  int d = 1;
  int n = 1;
  std::vector<MultiIndex> alphas;
  std::vector<Vec> cell_coeffs;  // flat cell index, base K+1; empty = unused

  int flat_index(std::span<const int> idx) const {
    int f = 0;
    for (int j = d - 1; j >= 0; --j) f = f * (K + 1) + idx[j];
    return f;
  }

  const Vec* coeffs_at(std::span<const double> x) const {
    RegionSpec spec{K, m, d};
    auto idx = cell_of(x, spec);
    if (!idx) return nullptr;
    const Vec& c = cell_coeffs[flat_index(*idx)];
    return c.empty() ? nullptr : &c;
  }

  /// Analytic jet of the containing cell's polynomial.
  Jet2 eval(std::span<const double> x) const {
    const Vec* c = coeffs_at(x);
    if (!c) throw DomainError("point lies outside every cell of Omega_m");
    AvgTaylorPoly poly{n, d, alphas, *c};
    return poly.jet(x);
  }

  /// Largest |coefficient| of x^alpha over all cells; 0 when absent.
  double coefficient_bound(std::size_t alpha_idx) const {
    double B = 0.0;
    for (const Vec& c : cell_coeffs)
      if (!c.empty()) B = std::max(B, std::abs(c[alpha_idx]));
    return B;
  }
};

/// Builds f_{K,m}: averaged Taylor coefficients per cell, on the ball of
/// radius 1/(4K) centered at the (unclipped) cell center.
inline PiecewisePolyApproximant build_f_K_m(const TargetFunction& f, int K, const std::vector<int>& m, int n,
                                            const TaylorOptions& opt = {}) {
  const int d = f.dim;
  RegionSpec spec{K, m, d};
  spec.validate();
  if (n < 2) throw SpecError("smoothness order must be >= 2");
  PiecewisePolyApproximant approx;
  approx.K = K;
  approx.m = m;
  approx.d = d;
  approx.n = n;
  approx.alphas = multi_indices_up_to(d, n - 1);
  int cells = 1;
  for (int j = 0; j < d; ++j) cells *= K + 1;
  approx.cell_coeffs.resize(cells);

  std::vector<int> idx(d, 0);
  for (;;) {
    bool valid = true;
    for (int j = 0; j < d; ++j)
      if (m[j] == 1 && idx[j] > K - 1) valid = false;  // degenerate boundary sliver
    if (valid) {
      BallSpec ball;
      ball.center.resize(d);
      ball.radius = 1.0 / (4.0 * K);
      for (int j = 0; j < d; ++j) {
        CellInterval c = cell_interval(K, m[j], idx[j]);
        ball.center[j] = 0.5 * (c.lo + c.hi);
        if (ball.center[j] - ball.radius < f.domain_lo || ball.center[j] + ball.radius > f.domain_hi)
          throw DomainError("averaging ball exits the target's domain of definition");
      }
      AvgTaylorPoly p = averaged_taylor(f, ball, n, opt);
      approx.cell_coeffs[approx.flat_index(idx)] = std::move(p.coeffs);
    }
    int j = 0;
    while (j < d && ++idx[j] == K + 1) idx[j++] = 0;
    if (j == d) break;
  }
  return approx;
}

/// eval_piecewise of the spec: jet of the containing cell's polynomial.
inline Jet2 eval_piecewise(const PiecewisePolyApproximant& approx, std::span<const double> x) {
  return approx.eval(x);
}

struct BrambleHilbertRow {
  double h = 0.0;         // cube side
  double numerator = 0.0;  // |f - Q^n f|_{W^{k,p}} seminorm on the cube
  double denominator = 0.0;
  double ratio = 0.0;
};

struct BrambleHilbertOptions {
  Vec center;              // cube center; default filled with 0.5
  int grid_per_axis = 64;  // dense sampling for the seminorms
  TaylorOptions taylor;
};

/// For each cube side h: |f - Q^n f|_{W^{k,p}} / (h^{n-k} |f|_{W^{n,p}})
/// on an axis-aligned cube with the inner averaging ball of radius h/3
/// (chunkiness 2*sqrt(d) configuration).
inline std::vector<BrambleHilbertRow> bramble_hilbert_check(const TargetFunction& f, int n, int k, double p,
                                                            const Vec& h_sequence,
                                                            BrambleHilbertOptions opt = {}) {
  if (k < 0 || k > 2) throw SpecError("seminorm order k must be <= 2");
  if (f.smoothness < n) throw SpecError("derivative oracle order too low");
  const int d = f.dim;
  if (opt.center.empty()) opt.center.assign(d, 0.5);
  std::vector<BrambleHilbertRow> rows;
  auto kappas_k = multi_indices_up_to(d, k);
  std::erase_if(kappas_k, [&](const MultiIndex& a) { return a.order() != k; });
  auto kappas_n = multi_indices_up_to(d, n);
  std::erase_if(kappas_n, [&](const MultiIndex& a) { return a.order() != n; });

  for (double h : h_sequence) {
    BallSpec ball;
    ball.center = opt.center;
    ball.radius = h / 3.0;
    AvgTaylorPoly Q = averaged_taylor(f, ball, n, opt.taylor);

    // midpoint grid over the cube; max for p = inf, L^p quadrature otherwise
    const int R = opt.grid_per_axis;
    double cell_vol = 1.0;
    for (int j = 0; j < d; ++j) cell_vol *= h / R;
    double num_acc = 0.0, den_acc = 0.0;
    std::vector<int> idx(d, 0);
    Vec x(d);
    for (;;) {
      for (int j = 0; j < d; ++j) x[j] = opt.center[j] - h / 2 + (idx[j] + 0.5) * h / R;
      for (const auto& kap : kappas_k) {
        double e = std::abs(f.derivative(kap, x) - Q.derivative(kap, x));
        if (std::isinf(p))
          num_acc = std::max(num_acc, e);
        else
          num_acc += std::pow(e, p) * cell_vol;
      }
      for (const auto& kap : kappas_n) {
        double e = std::abs(f.derivative(kap, x));
        if (std::isinf(p))
          den_acc = std::max(den_acc, e);
        else
          den_acc += std::pow(e, p) * cell_vol;
      }
      int j = 0;
      while (j < d && ++idx[j] == R) idx[j++] = 0;
      if (j == d) break;
    }
    BrambleHilbertRow row;
    row.h = h;
    row.numerator = std::isinf(p) ? num_acc : std::pow(num_acc, 1.0 / p);
    row.denominator = std::pow(h, n - k) * (std::isinf(p) ? den_acc : std::pow(den_acc, 1.0 / p));
    row.ratio = row.denominator > 0 ? row.numerator / row.denominator : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dsrn
