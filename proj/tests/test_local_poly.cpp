#include "dsrn/local_poly.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "test_util.hpp"

using namespace dsrn;

namespace {

constexpr std::uint64_t kSeed = 90210;

TargetFunction constant_target(double c) {
  TargetFunction f;
  f.name = "const";
  f.dim = 1;
  f.smoothness = 10;
  f.domain_lo = -1e9;
  f.domain_hi = 1e9;
  f.value = [c](std::span<const double>) { return c; };
  f.derivative = [c](const MultiIndex& a, std::span<const double>) { return a.order() == 0 ? c : 0.0; };
  return f;
}

// least-squares slope of log(err) against log(K)
double fit_log_slope(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [K, e] : pts) {
    double x = std::log(K), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = static_cast<double>(pts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// dense-grid W^{s,inf} seminorm of (f - approx) over Omega_m
double dense_seminorm_error(const TargetFunction& f, const PiecewisePolyApproximant& approx, int order,
                            int samples) {
  RegionSpec spec{approx.K, approx.m, approx.d};
  double worst = 0.0;
  for (int i = 0; i <= samples; ++i) {
    Vec x{static_cast<double>(i) / samples};
    if (!in_region(x, spec)) continue;
    Jet2 ja = approx.eval(x);
    Jet2 jf = f.jet(x);
    double e = 0.0;
    if (order == 0) e = std::abs(jf.value - ja.value);
    if (order == 1) e = std::abs(jf.grad[0] - ja.grad[0]);
    if (order == 2) e = std::abs(jf.hess[0] - ja.hess[0]);
    worst = std::max(worst, e);
  }
  return worst;
}

}  // namespace

TEST(AveragedTaylor, ReproducesSquare) {
  TargetFunction f = make_poly_target({0.0, 0.0, 1.0});  // x^2
  BallSpec ball{{0.4}, 0.15};
  AvgTaylorPoly q = averaged_taylor(f, ball, 3);
  for (double x : {-0.5, 0.0, 0.3, 0.9}) {
    EXPECT_NEAR(q.value(Vec{x}), x * x, 1e-8);
  }
}

TEST(AveragedTaylor, ConstantFunctionOrderOne) {
  TargetFunction f = constant_target(2.5);
  BallSpec ball{{0.5}, 0.2};
  AvgTaylorPoly q = averaged_taylor(f, ball, 1);
  ASSERT_EQ(q.coeffs.size(), 1u);
  EXPECT_NEAR(q.coeffs[0], 2.5, 1e-12);
}

TEST(AveragedTaylor, ReproducesRandomPolynomials) {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 5; ++rep) {
    Vec coeffs{u(rng), u(rng), u(rng), u(rng)};  // degree 3 = n-1
    TargetFunction f = make_poly_target(coeffs);
    BallSpec ball{{u(rng) * 0.2 + 0.5}, 0.05 + 0.1 * rep};
    AvgTaylorPoly q = averaged_taylor(f, ball, 4);
    for (int t = 0; t < 20; ++t) {
      double x = u(rng) * 0.5;
      EXPECT_NEAR(q.value(Vec{x}), f.value(Vec{x}), 1e-8);
    }
  }
}

TEST(AveragedTaylor, CoefficientsBoundedAsRadiusShrinks) {
  // coefficient-bound lemma with p = inf: d/p = 0, so max|c| stays bounded
  // along a dyadic radius sequence
  TargetFunction f = make_sin_pi();
  double first_max = 0.0;
  for (int lev = 0; lev < 4; ++lev) {
    BallSpec ball{{0.5}, 0.1 / (1 << lev)};
    AvgTaylorPoly q = averaged_taylor(f, ball, 3);
    double mx = 0.0;
    for (double c : q.coeffs) mx = std::max(mx, std::abs(c));
    if (lev == 0) first_max = mx;
    EXPECT_LE(mx, 4.0 * first_max + 4.0);
  }
}

TEST(BuildFKm, ConstantReproducedExactly) {
  TargetFunction f = constant_target(1.0);
  PiecewisePolyApproximant a = build_f_K_m(f, 4, {1}, 3);
  for (double x : {0.05, 0.3, 0.55, 0.9}) {
    if (!a.coeffs_at(Vec{x})) continue;
    Jet2 j = a.eval(Vec{x});
    EXPECT_NEAR(j.value, 1.0, 1e-12);
    EXPECT_NEAR(j.grad[0], 0.0, 1e-12);
    EXPECT_NEAR(j.hess[0], 0.0, 1e-12);
  }
  const Vec* c = a.coeffs_at(Vec{0.3});
  ASSERT_NE(c, nullptr);
  EXPECT_NEAR((*c)[0], 1.0, 1e-12);
  for (std::size_t t = 1; t < c->size(); ++t) EXPECT_NEAR((*c)[t], 0.0, 1e-12);
}

TEST(BuildFKm, CellGeometryMatchesDefinition) {
  // d=1, K=2, m=(1): cells [i/2, 3/8 + i/2]
  EXPECT_DOUBLE_EQ(cell_interval(2, 1, 0).lo, 0.0);
  EXPECT_DOUBLE_EQ(cell_interval(2, 1, 0).hi, 0.375);
  EXPECT_DOUBLE_EQ(cell_interval(2, 1, 1).lo, 0.5);
  EXPECT_DOUBLE_EQ(cell_interval(2, 1, 1).hi, 0.875);
  // m=(2) cells: [i/K - 1/(2K), i/K + 1/(4K)]
  EXPECT_DOUBLE_EQ(cell_interval(2, 2, 1).lo, 0.25);
  EXPECT_DOUBLE_EQ(cell_interval(2, 2, 1).hi, 0.625);
}

TEST(BuildFKm, SinErrorDecaysAtBrambleHilbertRates) {
  TargetFunction f = make_sin_pi();
  std::vector<std::pair<double, double>> e0, e1, e2;
  for (int K : {4, 8, 16}) {
    PiecewisePolyApproximant a = build_f_K_m(f, K, {1}, 4);
    e0.emplace_back(K, dense_seminorm_error(f, a, 0, 64 * K));
    e1.emplace_back(K, dense_seminorm_error(f, a, 1, 64 * K));
    e2.emplace_back(K, dense_seminorm_error(f, a, 2, 64 * K));
  }
  EXPECT_NEAR(fit_log_slope(e0), -4.0, 0.6);
  EXPECT_NEAR(fit_log_slope(e1), -3.0, 0.6);
  EXPECT_NEAR(fit_log_slope(e2), -2.0, 0.6);
}

TEST(EvalPiecewise, MonomialCalculus) {
  PiecewisePolyApproximant a;
  a.K = 1;
  a.m = {1};
  a.d = 1;
  a.n = 3;
  a.alphas = multi_indices_up_to(1, 2);
  a.cell_coeffs.resize(2);
  Vec c(a.alphas.size(), 0.0);
  for (std::size_t t = 0; t < a.alphas.size(); ++t)
    if (a.alphas[t].order() == 2) c[t] = 1.0;  // x^2
  a.cell_coeffs[0] = c;
  Jet2 j = eval_piecewise(a, Vec{0.3});
  EXPECT_NEAR(j.value, 0.09, 1e-15);
  EXPECT_NEAR(j.grad[0], 0.6, 1e-15);
  EXPECT_NEAR(j.hess[0], 2.0, 1e-15);
}

TEST(EvalPiecewise, OutsideCellsIsDomainError) {
  TargetFunction f = constant_target(1.0);
  PiecewisePolyApproximant a = build_f_K_m(f, 2, {1}, 3);
  EXPECT_THROW(a.eval(Vec{0.45}), DomainError);  // gap of Omega_1 at K=2
}

TEST(BuildFKm, BallOutsideDomainIsRejected) {
  TargetFunction f = constant_target(1.0);
  f.domain_lo = -0.25;
  f.domain_hi = 1.25;  // enlarged box only
  // K=1, m=2: first cell ball reaches -3/8 < -1/4
  EXPECT_THROW(build_f_K_m(f, 1, {2}, 3), DomainError);
}

TEST(Cutoffs, PartitionOfUnityAndPlateau) {
  const int K = 4;
  for (int t = 0; t <= 400; ++t) {
    double x = static_cast<double>(t) / 400;
    double sum = 0.0;
    for (int i = 0; i <= K; ++i) sum += cutoff_h(K, i, x);
    EXPECT_NEAR(sum, 1.0, 1e-12) << x;
  }
  for (int i = 0; i < K; ++i) {
    CellInterval c = cell_interval(K, 1, i);
    for (int t = 0; t <= 10; ++t) {
      double x = c.lo + (c.hi - c.lo) * t / 10;
      EXPECT_DOUBLE_EQ(cutoff_h(K, i, x), 1.0);
    }
  }
}

TEST(BrambleHilbert, PolynomialNumeratorVanishes) {
  TargetFunction f = make_poly_target({0.3, -1.0, 0.5, 2.0});  // degree 3 = n-1
  auto rows = bramble_hilbert_check(f, 4, 1, std::numeric_limits<double>::infinity(), {0.2, 0.1});
  for (const auto& r : rows) EXPECT_LE(r.numerator, 1e-8);
}

TEST(BrambleHilbert, RatiosStableUnderHalving) {
  TargetFunction f = make_sin_2pi();
  Vec hs{0.2, 0.1, 0.05, 0.025};
  for (int k : {0, 1, 2}) {
    auto rows = bramble_hilbert_check(f, 4, k, std::numeric_limits<double>::infinity(), hs);
    double lo = rows[0].ratio, hi = rows[0].ratio;
    for (const auto& r : rows) {
      lo = std::min(lo, r.ratio);
      hi = std::max(hi, r.ratio);
      EXPECT_GT(r.ratio, 0.0);
    }
    EXPECT_LE(hi / lo, 1.4 / 0.6) << "k=" << k;
  }
}

TEST(BrambleHilbert, L2ErrorFallsSixteenfoldPerHalving) {
  TargetFunction f = make_sin_2pi();
  Vec hs{0.2, 0.1, 0.05};
  auto rows = bramble_hilbert_check(f, 4, 0, std::numeric_limits<double>::infinity(), hs);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double fall = rows[i - 1].numerator / rows[i].numerator;
    EXPECT_NEAR(std::log2(fall), 4.0, 1.0);
  }
}
