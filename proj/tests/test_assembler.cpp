#include "dsrn/assembler.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace dsrn;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

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

ApproximantConfig config_for_K(int K, int n = 4, double p = kInf, int d = 1) {
  ApproximantConfig cfg;
  cfg.N = 2;
  cfg.L = 2;
  cfg.n = n;
  cfg.p = p;
  cfg.d = d;
  cfg.K_override = K;
  return cfg;
}

}  // namespace

TEST(Config, DerivedKMatchesFormula) {
  ApproximantConfig cfg;
  cfg.N = 2;
  cfg.L = 4;
  cfg.d = 1;
  EXPECT_EQ(cfg.K(), 64);  // floor(2)^2 * floor(16)
  cfg.d = 2;
  EXPECT_EQ(cfg.K(), 4);  // floor(sqrt 2)^2 * floor(4)
  EXPECT_EQ(cfg.K_partition_setting(), 4);
}

TEST(Config, HypothesesChecked) {
  ApproximantConfig bad;
  bad.N = 2;
  bad.L = 1;  // L >= N fails
  EXPECT_THROW(bad.validate(), ConfigError);
  ApproximantConfig ok = config_for_K(8);
  EXPECT_NO_THROW(ok.validate());
}

TEST(GammaM, ConstantTargetIsExactOnRegion) {
  TargetFunction f = constant_target(0.7);
  for (int mj : {1, 2}) {
    GammaPiece piece = build_gamma_m(f, config_for_K(4), {mj});
    RegionSpec spec{4, {mj}, 1};
    std::mt19937_64 rng(101 + mj);
    for (int t = 0; t < 500; ++t) {
      Vec x = test::random_point(rng, 1, 0.0, 1.0);
      if (!in_region(x, spec)) continue;
      EXPECT_NEAR(evaluate_scalar(piece.network, x), 0.7, 1e-12);
    }
  }
}

TEST(GammaM, ZeroCoefficientNormalizesToHalf) {
  // f(x) = x has exact Taylor coefficients (0, 1, 0, ...): the alpha = 0
  // column is identically zero, so xi = 1/2 with the fallback bound
  TargetFunction f = make_poly_target({0.0, 1.0});
  GammaPiece piece = build_gamma_m(f, config_for_K(4), {1});
  ASSERT_EQ(piece.table.alphas[0].order(), 0);
  for (double xi : piece.table.xi[0]) EXPECT_NEAR(xi, 0.5, 1e-12);
  // cells 0..K-1 are the populated ones for m = 1; the boundary sliver
  // keeps the neutral 1/2
  for (int p = 0; p < 4; ++p) EXPECT_NEAR(piece.table.xi[1][p], 1.0, 1e-12);  // alpha=1: c=1=B
  EXPECT_NEAR(piece.table.xi[1][4], 0.5, 1e-12);
}

TEST(GammaM, ValidatesAsDsrn) {
  TargetFunction f = make_sin_pi();
  GammaPiece piece = build_gamma_m(f, config_for_K(8), {1});
  DsrnProfile prof = validate_dsrn(piece.network, 6.0);
  EXPECT_EQ(prof.L1, 4);
  EXPECT_GE(prof.L2, 2);
  EXPECT_EQ(piece.budget.profile.L, prof.L);
}

TEST(GammaM, ReproducesPiecewisePolynomialOnCells) {
  TargetFunction f = make_sin_pi();
  ApproximantConfig cfg = config_for_K(8);
  GammaPiece piece = build_gamma_m(f, cfg, {1});
  PiecewisePolyApproximant approx = build_f_K_m(f, 8, {1}, cfg.n);
  RegionSpec spec{8, {1}, 1};
  std::mt19937_64 rng(77);
  JetEvaluator ev(piece.network);
  for (int t = 0; t < 400; ++t) {
    Vec x = test::random_point(rng, 1, 0.0, 1.0);
    if (!in_region(x, spec)) continue;
    Jet2 want = approx.eval(x);
    Jet2 got = ev.eval(x);
    EXPECT_NEAR(got.value, want.value, 1e-10);
    EXPECT_NEAR(got.grad[0], want.grad[0], 1e-9);
    EXPECT_NEAR(got.hess[0], want.hess[0], 1e-8);
  }
}

TEST(GammaM, ErrorShrinksWithK) {
  TargetFunction f = make_sin_pi();
  double err32, err64;
  {
    GammaPiece p32 = build_gamma_m(f, config_for_K(32), {1});
    NormReport r = error_norm(f, p32.network, 2, kInf, NormDomain::omega({32, {1}, 1}), {256, 3});
    err32 = r.total();
  }
  {
    GammaPiece p64 = build_gamma_m(f, config_for_K(64), {1});
    NormReport r = error_norm(f, p64.network, 2, kInf, NormDomain::omega({64, {1}, 1}), {512, 3});
    err64 = r.total();
  }
  EXPECT_LT(err64, err32);
}

TEST(Gamma, ConstantTargetExactEverywhere) {
  TargetFunction f = constant_target(0.3);
  GammaAssembly g = assemble_gamma(f, config_for_K(4));
  for (int i = 0; i <= 200; ++i) {
    Vec x{i / 200.0};
    EXPECT_NEAR(evaluate_scalar(g.network, x), 0.3, 1e-10) << x[0];
  }
}

TEST(Gamma, AssemblyIdentity) {
  TargetFunction f = make_sin_pi();
  ApproximantConfig cfg = config_for_K(8);
  GammaAssembly g = assemble_gamma(f, cfg);
  std::vector<Network> parts, parts_s;
  for (const auto& m : all_region_multiindices(1)) {
    parts.push_back(build_gamma_m(f, cfg, m).network);
    parts_s.push_back(make_partition_network({8, m, 1}));
  }
  std::mt19937_64 rng(31);
  for (int t = 0; t < 1000; ++t) {
    Vec x = test::random_point(rng, 1, 0.0, 1.0);
    double whole = evaluate_scalar(g.network, x);
    double sum = 0.0;
    for (std::size_t r = 0; r < parts.size(); ++r)
      sum += evaluate_scalar(parts_s[r], x) * evaluate_scalar(parts[r], x);
    EXPECT_NEAR(whole, sum, 1e-10);
  }
}

TEST(Gamma, ValidatesAsDsrnWithBudgetReport) {
  TargetFunction f = make_sin_pi();
  GammaAssembly g = assemble_gamma(f, config_for_K(8));
  EXPECT_EQ(g.budget.profile.L1, 4);
  EXPECT_EQ(g.budget.profile.L2, g.budget.profile.L - 4);
  EXPECT_TRUE(g.budget.K_overridden);
  EXPECT_EQ(g.budget.K, 8);
  bool found_gamma = false;
  for (const auto& e : g.budget.entries) found_gamma |= e.name == "gamma";
  EXPECT_TRUE(found_gamma);
}

TEST(Gamma, PolynomialTargetNearMachineZero) {
  // degree <= n-1 polynomials are reproduced up to fitter normalization
  // granularity: W^{2,p} error near machine zero
  TargetFunction f = make_poly_target({0.2, -0.4, 0.3, 0.1});
  GammaAssembly g = assemble_gamma(f, config_for_K(4));
  NormReport r = error_norm(f, g.network, 2, kInf, NormDomain::unit_box(1), {128, 5});
  EXPECT_LE(r.total(), 1e-8);
}

TEST(RateSweep, SinSlopesMatchTheory1d) {
  TargetFunction f = make_sin_pi();
  std::vector<ApproximantConfig> configs;
  for (int K : {4, 8, 16}) configs.push_back(config_for_K(K));
  SweepOptions opt;
  opt.base_resolution = 192;
  opt.seed = 9;
  RateTable t = rate_sweep(f, 4, kInf, configs, opt);
  EXPECT_NEAR(t.slope_W2, -2.0, 0.6);
  EXPECT_NEAR(t.slope_W1, -3.0, 0.6);
  EXPECT_NEAR(t.slope_L, -4.0, 0.6);
  // doubling K never increases the W2 error by more than 1.5x
  for (std::size_t i = 1; i < t.points.size(); ++i)
    EXPECT_LE(t.points[i].err_W2, 1.5 * t.points[i - 1].err_W2);
}

TEST(Gamma, ProductOfSines2d) {
  TargetFunction f = make_product_of_sines();
  double prev = std::numeric_limits<double>::infinity();
  for (int K : {4, 8}) {
    GammaAssembly g = assemble_gamma(f, config_for_K(K, 4, kInf, 2));
    validate_dsrn(g.network, 6.0);
    int res = 4 * K;
    NormReport r = error_norm(f, g.network, 2, kInf, NormDomain::unit_box(2), {res, 7});
    EXPECT_LT(r.total(), prev);
    prev = r.total();
  }
  EXPECT_LT(prev, 8.0);  // K=8 second-derivative error already well under |f|_W2 ~ 2 pi^2
}

TEST(RateSweep, CsvColumnsPopulated) {
  TargetFunction f = make_sin_pi();
  RateTable t = rate_sweep(f, 4, 2.0, {config_for_K(4, 4, 2.0)}, {64, 1});
  ASSERT_EQ(t.points.size(), 1u);
  const RatePoint& pt = t.points[0];
  EXPECT_EQ(pt.K, 4);
  EXPECT_GT(pt.err_L, 0.0);
  EXPECT_GT(pt.width_realized, 0);
  EXPECT_GT(pt.width_budget, 0.0);
}
