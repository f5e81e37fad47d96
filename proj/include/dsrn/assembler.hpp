#pragma once

#include "dsrn/gadgets.hpp"
#include "dsrn/metrics.hpp"

namespace dsrn {

/// Budget parameters of one approximant. K defaults to the Proposition-4
/// setting floor(N^{1/d})^2 * floor(L^{2/d}); sweeps that need cell counts
/// the formula cannot reach (e.g. K = 8 in d = 1) set K explicitly, which
/// is recorded in the budget report.
struct ApproximantConfig {
  int N = 2;
  int L = 2;
  int n = 4;
  double p = 2.0;
  int d = 1;
  std::optional<int> K_override;

  int floor_pow(double base, double e) const { return static_cast<int>(std::floor(std::pow(base, e))); }

  int K() const {
    if (K_override) return *K_override;
    int a = floor_pow(N, 1.0 / d);
    return a * a * floor_pow(L, 2.0 / d);
  }

  /// Proposition-3 partition setting, reported for reference; the realized
  /// partition uses K() so that supp s_m coincides with the cell grid.
  int K_partition_setting() const { return floor_pow(N, 1.0 / d) * floor_pow(L, 2.0 / d); }

  void validate() const {
    if (N < 1 || L < 1 || d < 1) throw ConfigError("N, L, d must be positive");
    if (n < 2) throw ConfigError("smoothness order n must be >= 2");
    if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
    double hyp = N * std::log2(static_cast<double>(L)) + std::pow(2.0, std::floor(std::log2(static_cast<double>(N))));
    if (hyp < std::max(d, n)) throw ConfigError("Theorem hypothesis N*log2(L) + 2^floor(log2 N) >= max(d,n) fails");
    if (L < N) throw ConfigError("Theorem hypothesis L >= N fails");
    if (K() < 1) throw ConfigError("cell count K must be >= 1");
  }
};

/// Normalized point-fitter data: xi_{alpha,p} in [0,1] per flattened cell
/// index, with the empirical bound B_alpha in place of the unpinned
/// C2(n,d)(4K)^{d/p} constant.
struct CoefficientTable {
  int K = 1, d = 1, n = 2;
  std::vector<MultiIndex> alphas;
  std::vector<Vec> xi;  // [alpha][(K+1)^d]
  Vec bound;            // B_alpha

  /// eta: cell multi-index -> flat index p = sum_j idx_j (K+1)^{j-1}.
  static int eta_flat(std::span<const int> idx, int K) {
    int f = 0;
    for (int j = static_cast<int>(idx.size()) - 1; j >= 0; --j) f = f * (K + 1) + idx[j];
    return f;
  }
  static std::vector<int> eta_unflat(int p, int K, int d) {
    std::vector<int> idx(d);
    for (int j = 0; j < d; ++j) {
      idx[j] = p % (K + 1);
      p /= K + 1;
    }
    return idx;
  }
};

struct BudgetEntry {
  std::string name;
  double width_realized = 0, depth_realized = 0;
  double width_budget = 0, depth_budget = 0;
  bool over_budget() const { return width_realized > width_budget || depth_realized > depth_budget; }
};

struct BudgetReport {
  std::vector<BudgetEntry> entries;
  int K = 1;
  int K_partition_setting = 1;
  bool K_overridden = false;
  DsrnProfile profile;  // realized activation-schedule accounting

  bool any_over_budget() const {
    for (const auto& e : entries)
      if (e.over_budget()) return true;
    return false;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["K"] = K;
    j["K_partition_setting"] = K_partition_setting;
    j["K_overridden"] = K_overridden;
    j["profile"] = {{"C", profile.C}, {"L", profile.L}, {"L1", profile.L1}, {"L2", profile.L2}};
    nlohmann::json es = nlohmann::json::array();
    for (const auto& e : entries)
      es.push_back({{"name", e.name},
                    {"width_realized", e.width_realized},
                    {"depth_realized", e.depth_realized},
                    {"width_budget", e.width_budget},
                    {"depth_budget", e.depth_budget},
                    {"over_budget", e.over_budget()}});
    j["subnetworks"] = es;
    j["any_over_budget"] = any_over_budget();
    return j;
  }
};

namespace detail {

/// Shared construction for gamma_m and gamma. Schedule: four sigma1 stages
/// (step jump pairs across 1-2, fitter hinges at 3, fitter hats and bump
/// clamps at 4) followed by a sigma2 tail (squares and monomial trees,
/// identity carries, coefficient products, and for the full gamma the
/// partition products).
struct GammaBuilder {
  const TargetFunction& f;
  ApproximantConfig cfg;
  bool with_partition;
  TaylorOptions taylor;

  int K = 1, d = 1, n = 2;
  int mono_levels = 1;
  int sm_levels = 0;
  std::vector<std::vector<int>> regions;

  int hats_done() const { return 4; }
  int first_sq() const { return 5; }
  int mono_done() const { return 4 + mono_levels; }
  int sm_done() const { return 5 + sm_levels; }
  int prod_stage() const { return std::max(mono_done(), with_partition ? sm_done() : 0) + 1; }
  int final_stage() const { return with_partition ? prod_stage() + 1 : prod_stage(); }

  std::vector<Activation> schedule() const {
    std::vector<Activation> s(4, Activation::relu);
    s.insert(s.end(), final_stage() - 4, Activation::relu2);
    return s;
  }

  Network run(CoefficientTable* table_out, BudgetReport* budget_out,
              std::vector<PiecewisePolyApproximant>* approx_out) {
    cfg.validate();
    K = cfg.K();
    d = cfg.d;
    n = cfg.n;
    mono_levels = product_tree_levels(std::max(n - 1, 1));
    sm_levels = d > 1 ? product_tree_levels(d) : 0;
    regions = with_partition ? all_region_multiindices(d) : regions;

    NetBuilder b(d, schedule());
    const double delta = 1.0 / (4.0 * K);

    // per-coordinate quantizers for the shifts the regions actually use
    std::map<std::pair<int, int>, NetBuilder::Expr> steps;  // (coord, m_j) -> stage-2 expr
    for (const auto& m : regions)
      for (int j = 0; j < d; ++j)
        if (!steps.count({j, m[j]})) {
          double shift = m[j] == 2 ? 0.5 / K : 0.0;
          steps.emplace(std::pair{j, m[j]}, staircase(b, b.input(j), K, delta, K + 1, shift, 1));
        }

    // carry the inputs through the relu phase; x3 feeds the bump clamps at
    // stage 4, x4 feeds the monomial trees at the first sigma2 stage
    std::vector<NetBuilder::Expr> x3(d), x4(d);
    for (int j = 0; j < d; ++j) {
      x3[j] = b.lift(b.input(j), 3);
      x4[j] = b.lift(x3[j], 4);
    }

    // fitter banks: hinge layer + hat layer per region; hats are exact 0/1
    // at the integer cell indices the quantizers produce
    int M = 1;
    for (int j = 0; j < d; ++j) M *= K + 1;
    std::vector<std::vector<int>> hat_nodes(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
      NetBuilder::Expr ptilde = NetBuilder::constant(0.0);
      double scale = 1.0;
      for (int j = 0; j < d; ++j) {
        ptilde = NetBuilder::add(ptilde, NetBuilder::scale(steps.at({j, regions[r][j]}), scale));
        scale *= K + 1;
      }
      std::vector<int> h(M);
      for (int t = 0; t < M; ++t) h[t] = b.place(3, NetBuilder::shift(ptilde, -static_cast<double>(t)));
      int rA = -1, rB = -1;
      if (M >= 2) {
        rA = b.place(3, NetBuilder::shift(NetBuilder::negate(ptilde), M - 1.0));
        rB = b.place(3, NetBuilder::shift(NetBuilder::negate(ptilde), M - 2.0));
      }
      hat_nodes[r].resize(M);
      for (int t = 0; t < M; ++t) {
        NetBuilder::Expr pre;
        if (M == 1)
          pre = NetBuilder::constant(1.0);
        else if (t == 0)
          pre = NetBuilder::Expr{3, 1.0, {{h[0], -1.0}, {h[1], 1.0}}};
        else if (t == M - 1)
          pre = NetBuilder::Expr{3, 1.0, {{rA, -1.0}, {rB, 1.0}}};
        else
          pre = NetBuilder::Expr{3, 0.0, {{h[t - 1], 1.0}, {h[t], -2.0}, {h[t + 1], 1.0}}};
        hat_nodes[r][t] = b.place(4, pre);
      }
    }

    // averaged-Taylor coefficient tables per region, normalized into [0,1]
    std::vector<MultiIndex> alphas = multi_indices_up_to(d, n - 1);
    CoefficientTable table;
    table.K = K;
    table.d = d;
    table.n = n;
    table.alphas = alphas;
    table.xi.assign(alphas.size(), Vec(M, 0.5));
    table.bound.assign(alphas.size(), 1.0);

    std::vector<std::vector<NetBuilder::Expr>> coef(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
      PiecewisePolyApproximant approx = build_f_K_m(f, K, regions[r], n, taylor);
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        double B = approx.coefficient_bound(a);
        if (B == 0.0) B = 1.0;
        Vec xi(M, 0.5);
        for (int p = 0; p < M; ++p) {
          const Vec& cc = approx.cell_coeffs[p];
          if (!cc.empty()) xi[p] = (cc[a] + B) / (2.0 * B);
        }
        // phi_alpha = 2B * sum_t xi_t hat_t - B, exact on every cell
        NetBuilder::Expr e{4, -B, {}};
        for (int t = 0; t < M; ++t) e.terms.emplace_back(hat_nodes[r][t], 2.0 * B * xi[t]);
        coef[r].push_back(e);
        if (with_partition || regions.size() == 1) {
          // the reported table is the first region's for gamma_m builds,
          // per-alpha maxima across regions otherwise
          if (r == 0) {
            table.xi[a] = xi;
            table.bound[a] = B;
          } else {
            table.bound[a] = std::max(table.bound[a], B);
          }
        }
      }
      if (approx_out) approx_out->push_back(std::move(approx));
    }

    // shared monomial trees x^alpha (x^0 folds to the constant 1)
    std::vector<NetBuilder::Expr> mono(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a)
      mono[a] = alphas[a].order() == 0 ? NetBuilder::constant(1.0)
                                       : b.lift(monomial_tree(b, alphas[a], mono_levels, &x4), mono_done());

    // lift coefficients alongside
    for (auto& region_coefs : coef)
      for (auto& e : region_coefs) e = b.lift(std::move(e), mono_done());

    // per-region polynomial value
    std::vector<NetBuilder::Expr> gamma_r(regions.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
      NetBuilder::Expr sum = NetBuilder::constant(0.0);
      for (std::size_t a = 0; a < alphas.size(); ++a)
        sum = NetBuilder::add(sum, b.mul(coef[r][a], mono[a]));
      gamma_r[r] = sum;  // stage prod_stage
    }

    NetBuilder::Expr out = NetBuilder::constant(0.0);
    if (with_partition) {
      // bump chains for both shifts per coordinate, then s_m products
      std::map<std::pair<int, int>, NetBuilder::Expr> chains;
      for (const auto& m : regions)
        for (int j = 0; j < d; ++j)
          if (!chains.count({j, m[j]}))
            chains.emplace(std::pair{j, m[j]},
                           bump_chain_at(b, x3[j], K, m[j] == 1 ? BumpShift::s1 : BumpShift::s2, 4));
      for (std::size_t r = 0; r < regions.size(); ++r) {
        NetBuilder::Expr sm = chains.at({0, regions[r][0]});
        if (d > 1) {
          std::vector<NetBuilder::Expr> factors;
          for (int j = 0; j < d; ++j) factors.push_back(chains.at({j, regions[r][j]}));
          std::size_t width = std::size_t{1} << sm_levels;
          while (factors.size() < width) factors.push_back(NetBuilder::constant(1.0));
          for (int lev = 0; lev < sm_levels; ++lev) {
            std::vector<NetBuilder::Expr> next;
            for (std::size_t i = 0; i + 1 < factors.size(); i += 2) next.push_back(b.mul(factors[i], factors[i + 1]));
            factors.swap(next);
          }
          sm = factors[0];
        }
        sm = b.lift(std::move(sm), prod_stage());
        out = NetBuilder::add(out, b.mul(sm, gamma_r[r]));
      }
    } else {
      out = gamma_r[0];
    }

    Network net = b.build({out});

    if (budget_out) {
      BudgetReport& rep = *budget_out;
      rep.K = K;
      rep.K_partition_setting = cfg.K_partition_setting();
      rep.K_overridden = cfg.K_override.has_value();
      rep.profile = validate_dsrn(net, 6.0);
      const double N = cfg.N, L = cfg.L, dd = d, nn = n;
      auto add = [&](std::string name, double wr, double dr, double wb, double db) {
        rep.entries.push_back({std::move(name), wr, dr, wb, db});
      };
      add("step", K, 2, 4 * N + 5, 4 * L + 4);
      add("point_fitter", 2.0 * M + 2, 2, 16 * nn * (N + 1) * std::log2(8 * N),
          (5 * L + 2) * std::log2(4 * L));
      add("monomial", 4.0 * (std::size_t{1} << mono_levels), mono_levels, 4 * N + 2 * dd,
          2 * std::ceil(std::log2(std::max(2.0, L))));
      if (with_partition) {
        add("partition_s_m", 8.0 * (K + 1) * dd, 2 + sm_levels, 16 * N + 2 * dd,
            std::ceil(4 * std::log2(std::max(2.0, L)) + 3));
        add("gamma", net.width(), net.depth(), std::pow(2.0, dd + 6) * std::pow(nn, dd + 1) * (N + dd) * std::log2(8 * N),
            10 * (L + 1) * std::log2(4 * L));
      } else {
        add("gamma_m", net.width(), net.depth(), 28 * std::pow(nn, dd + 1) * (N + dd) * std::log2(8 * N),
            11 * nn * nn * (L + 2) * std::log2(4 * L));
      }
    }
    if (table_out) *table_out = std::move(table);
    return net;
  }

  /// Bump chain with the clamp layer placed at `stage` and the squares at
  /// stage+1; the input expression must live at stage-1.
  static NetBuilder::Expr bump_chain_at(NetBuilder& b, const NetBuilder::Expr& x, int K, BumpShift shift,
                                        int stage) {
    double sh = shift == BumpShift::s2 ? 0.5 / K : 0.0;
    NetBuilder::Expr out = NetBuilder::constant(0.0);
    for (int i = 0; i <= K; ++i) {
      NetBuilder::Expr y = NetBuilder::shift(NetBuilder::scale(x, 4.0 * K), 4.0 * K * sh - 4.0 * i);
      const NetBuilder::Expr args[4] = {y, NetBuilder::shift(NetBuilder::negate(y), 1.0),
                                        NetBuilder::shift(NetBuilder::negate(y), 3.0),
                                        NetBuilder::shift(y, -2.0)};
      const double signs[4] = {2.0, -2.0, 2.0, -2.0};
      for (int t = 0; t < 4; ++t) {
        int lo = b.place(stage, args[t]);
        int hi = b.place(stage, NetBuilder::shift(args[t], -0.5));
        NetBuilder::Expr g{stage, 0.0, {{lo, 1.0}, {hi, -1.0}}};
        out = NetBuilder::add(out, NetBuilder::scale(b.square_nonneg(g), signs[t]));
      }
    }
    return out;
  }
};

}  // namespace detail

struct GammaPiece {
  Network network;
  CoefficientTable table;
  BudgetReport budget;
};

/// Per-region approximant gamma_m: quantize each coordinate, fit the
/// normalized averaged-Taylor coefficients exactly at the cell indices,
/// multiply by the monomial networks, and sum.
inline GammaPiece build_gamma_m(const TargetFunction& f, const ApproximantConfig& cfg, const std::vector<int>& m,
                                const TaylorOptions& taylor = {}) {
  detail::GammaBuilder gb{f, cfg, false, taylor};
  gb.regions = {m};
  CoefficientTable table;
  BudgetReport budget;
  Network net = gb.run(&table, &budget, nullptr);
  return GammaPiece{std::move(net), std::move(table), std::move(budget)};
}

struct GammaAssembly {
  Network network;
  BudgetReport budget;
  std::vector<std::vector<int>> regions;
};

/// Full-domain approximant gamma = sum_m phi6(s_m, gamma_m). The partition
/// networks use the same K as the cell grids so that supp s_m coincides
/// with the region where each gamma_m is exact.
inline GammaAssembly assemble_gamma(const TargetFunction& f, const ApproximantConfig& cfg,
                                    const TaylorOptions& taylor = {}) {
  detail::GammaBuilder gb{f, cfg, true, taylor};
  BudgetReport budget;
  Network net = gb.run(nullptr, &budget, nullptr);
  return GammaAssembly{std::move(net), std::move(budget), all_region_multiindices(cfg.d)};
}

struct RatePoint {
  int N = 0, L = 0, K = 0;
  double p = 2.0;
  double err_L = 0, err_W1 = 0, err_W2 = 0;
  int width_realized = 0, depth_realized = 0;
  double width_budget = 0, depth_budget = 0;
  bool over_budget = false;
};

struct RateTable {
  std::vector<RatePoint> points;
  double slope_L = 0, slope_W1 = 0, slope_W2 = 0;
};

struct SweepOptions {
  int base_resolution = 256;  // rounded up to a multiple of 4K per point
  std::uint64_t seed = 0;
  TaylorOptions taylor;
};

inline double fit_slope_loglog(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (auto [K, e] : pts) {
    if (e <= 0) continue;
    double x = std::log(K), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Builds gamma for each config, measures W^{s,p} errors on (0,1)^d for
/// s = 0,1,2 in one jet pass each, and fits log-error against log-K.
inline RateTable rate_sweep(const TargetFunction& f, int n, double p, std::vector<ApproximantConfig> configs,
                            const SweepOptions& opt = {}) {
  RateTable table;
  std::vector<std::pair<double, double>> e0, e1, e2;
  for (ApproximantConfig cfg : configs) {
    cfg.n = n;
    cfg.p = p;
    cfg.d = f.dim;
    GammaAssembly g = assemble_gamma(f, cfg, opt.taylor);
    int K = g.budget.K;
    int res = 4 * K * std::max(1, (opt.base_resolution + 4 * K - 1) / (4 * K));
    GridSpec grid{res, opt.seed};
    NormReport r = error_norm(f, g.network, 2, p, NormDomain::unit_box(f.dim), grid);
    RatePoint pt;
    pt.N = cfg.N;
    pt.L = cfg.L;
    pt.K = K;
    pt.p = p;
    pt.err_L = r.norm_up_to(0);
    pt.err_W1 = r.norm_up_to(1);
    pt.err_W2 = r.norm_up_to(2);
    pt.width_realized = g.network.width();
    pt.depth_realized = g.network.depth();
    for (const auto& e : g.budget.entries)
      if (e.name == "gamma") {
        pt.width_budget = e.width_budget;
        pt.depth_budget = e.depth_budget;
        pt.over_budget = e.over_budget();
      }
    table.points.push_back(pt);
    e0.emplace_back(K, pt.err_L);
    e1.emplace_back(K, pt.err_W1);
    e2.emplace_back(K, pt.err_W2);
  }
  table.slope_L = fit_slope_loglog(e0);
  table.slope_W1 = fit_slope_loglog(e1);
  table.slope_W2 = fit_slope_loglog(e2);
  return table;
}

}  // namespace dsrn
