#pragma once

#include <set>

#include <json.hpp>

#include "dsrn/jet.hpp"
#include "dsrn/parallel.hpp"

namespace dsrn {

/// Architecture bookkeeping for the counting bounds: per-layer parameter
/// counts W_i = N_i N_{i-1} + N_i and the nested total
/// U = sum_{n=1}^{L+1} sum_{i=1}^{n} W_i.
struct ArchSpec {
  int d = 1;
  std::vector<int> widths;  // N_1 .. N_L

  static ArchSpec uniform(int d, int N, int L) { return {d, std::vector<int>(L, N)}; }

  int L() const { return static_cast<int>(widths.size()); }
  int width(int i) const {  // N_i with N_0 = d, N_{L+1} = 1
    if (i == 0) return d;
    if (i == L() + 1) return 1;
    return widths[i - 1];
  }
  double layer_params(int i) const {  // W_i, i = 1..L+1
    return static_cast<double>(width(i)) * width(i - 1) + width(i);
  }
  double prefix_params(int n) const {  // sum_{i<=n} W_i
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += layer_params(i);
    return s;
  }
  double total_params() const { return prefix_params(L() + 1); }
  double U() const {
    double u = 0.0;
    for (int n = 1; n <= L() + 1; ++n) u += prefix_params(n);
    return u;
  }
};

/// One bound evaluation with every intermediate quantity needed to
/// reproduce the value.
struct BoundReport {
  double N = 0, L = 0, C = 0, m = 0, d = 0;
  double d2 = 0;
  Vec log2_factors;       // per-refinement factors, final factor last
  double log2_growth = 0; // log2 bound on the number of sign patterns
  double U = 0, r = 0, t = 0;
  double value = 0;  // final bound (raw growth bound or dimension bound)
  bool in_lemma_regime = true;

  nlohmann::json to_json() const {
    return {{"N", N},       {"L", L},           {"C", C},
            {"m", m},       {"d", d},           {"d2", d2},
            {"U", U},       {"r", r},           {"t", t},
            {"log2_factors", log2_factors},     {"log2_growth", log2_growth},
            {"value", value},                   {"in_lemma_regime", in_lemma_regime}};
  }
};

/// Lemma-7 style sign-pattern count: 2(2eMD/W)^W for M polynomials of
/// degree at most D in W variables. Degenerate D = 0 collapses to 0.
inline double sign_pattern_bound_log2(double M, double D, double W) {
  if (W > M) throw PreconditionError("need W <= M");
  if (M <= 0 || W <= 0) throw PreconditionError("M and W must be positive");
  if (D <= 0) return -std::numeric_limits<double>::infinity();
  return 1.0 + W * std::log2(2.0 * std::numbers::e * M * D / W);
}

inline double sign_pattern_bound(double M, double D, double W) {
  double l = sign_pattern_bound_log2(M, D, W);
  return std::isinf(l) && l < 0 ? 0.0 : std::exp2(l);
}

/// Growth-function bound for sign patterns of second derivatives of DSRNs
/// on m points: the layer-by-layer refinement product times the final
/// degree-d2 factor, all in log2. d2 is the displayed sum (the paper's
/// simplified closed form disagrees with its own sum and is not used).
/// The Lemma-7 regime needs m >= U; `require_regime` = false evaluates the
/// formula anyway and records the flag.
inline BoundReport vc_recursion_bound(const ArchSpec& arch, double C, double m, bool require_regime = true) {
  if (m < 1) throw PreconditionError("sample count must be positive");
  const int L = arch.L();
  BoundReport rep;
  rep.N = L > 0 ? *std::max_element(arch.widths.begin(), arch.widths.end()) : 1;
  rep.L = L;
  rep.C = C;
  rep.m = m;
  rep.d = arch.d;
  rep.U = arch.U();
  rep.in_lemma_regime = m >= rep.U;
  if (require_regime && !rep.in_lemma_regime)
    throw PreconditionError("sample count below Lemma-7 regime (m < U)");

  const double Lstar = L > 0 ? L - C * std::log2(static_cast<double>(L)) : 0.0;
  double total = 0.0;
  for (int n = 1; n <= L; ++n) {
    double deg = 1.0 + (n - 1) * std::exp2(std::max(0.0, (n - 1) - Lstar));
    double S = arch.prefix_params(n);
    double lf = 1.0 + S * std::log2(2.0 * std::numbers::e * m * deg * arch.width(n) / S);
    rep.log2_factors.push_back(lf);
    total += lf;
  }
  double d2 = 0.0;
  for (int n = 0; n <= L; ++n) d2 += 1.0 + n * std::exp2(std::max(0.0, n - Lstar));
  d2 *= 2.0;
  rep.d2 = d2;
  double W_tot = arch.total_params();
  double lf = 1.0 + W_tot * std::log2(2.0 * std::numbers::e * m * d2 / W_tot);
  rep.log2_factors.push_back(lf);
  total += lf;
  rep.log2_growth = total;
  rep.value = total < 1023 ? std::exp2(total) : std::numeric_limits<double>::infinity();
  return rep;
}

/// Lemma 8: 2^m <= 2^t (mr/w)^w with r >= 16 implies
/// m <= t + w log2(2 r log2 r).
inline double solve_m_bound(double t, double w, double r) {
  if (r < 16) throw PreconditionError("need r >= 16");
  if (w < t || t < 0) throw PreconditionError("need w >= t >= 0");
  if (w == 0) return t;
  return t + w * std::log2(2.0 * r * std::log2(r));
}

/// Explicit numeric upper bound on VCdim(D^2 Phi) for width-N, depth-L
/// DSRNs with tail constant C: the growth bound
/// 2^m <= 2^{L+3} (4 e m L^{C+3} N / U)^U resolved through Lemma 8.
inline BoundReport vcdim_upper(int N, int L, double C, int d = 1) {
  if (N < 2 || L < 2) throw PreconditionError("need N, L >= 2");
  ArchSpec arch = ArchSpec::uniform(d, N, L);
  BoundReport rep;
  rep.N = N;
  rep.L = L;
  rep.C = C;
  rep.d = d;
  rep.U = arch.U();
  rep.t = L + 3;
  rep.r = 4.0 * std::numbers::e * std::pow(static_cast<double>(L), C + 3) * N;
  rep.value = solve_m_bound(rep.t, rep.U, rep.r);
  return rep;
}

/// Pseudo-dimension upper bound via the augmented class
/// eta(x, y) = psi(x) - y: the same counting machinery on networks with
/// one extra input coordinate, so Pdim(D^2 Phi) <= VCdim(D^2 Phi_N).
inline BoundReport pdim_upper(int N, int L, double C, int d = 1) {
  BoundReport rep = vcdim_upper(N, L, C, d + 1);
  rep.d = d;
  return rep;
}

/// Theorem-4 generalization bound:
/// C5 * N L (log2 L log2 N)^{1/2} / sqrt(M) * ln M  (natural trailing log).
inline double generalization_bound(double N, double L, double M, double C5) {
  if (N < 2 || L < 2 || M < 2) throw PreconditionError("need N, L, M >= 2");
  return C5 * N * L * std::sqrt(std::log2(L) * std::log2(N)) / std::sqrt(M) * std::log(M);
}

struct ShatterResult {
  long long distinct_patterns = 0;
  int largest_shattered = 0;
  std::vector<std::uint32_t> patterns;  // distinct sign masks over the points
};

namespace detail {

/// Random dense network for the probe; parameters drawn i.i.d. normal.
inline Network sample_arch_network(const ArchSpec& arch, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<Layer> layers;
  int prev = arch.d;
  for (int i = 1; i <= arch.L() + 1; ++i) {
    int w = arch.width(i);
    Vec dense(static_cast<std::size_t>(w) * prev);
    for (double& v : dense) v = dist(rng);
    Layer l;
    l.weights = WeightMatrix::from_dense(w, prev, dense, true);
    l.bias.resize(w);
    for (double& v : l.bias) v = 0.5 * dist(rng);
    // the probe class needs second derivatives: squared-ReLU hidden layers
    l.activation = i <= arch.L() ? Activation::relu2 : Activation::linear;
    layers.push_back(std::move(l));
    prev = w;
  }
  return Network(arch.d, std::move(layers));
}

inline int largest_shattered_subset(const std::vector<std::uint32_t>& masks, int npts) {
  // a subset S is shattered when the projections of the observed masks
  // onto S realize all 2^|S| patterns
  std::vector<char> seen;
  for (int k = npts; k >= 1; --k) {
    for (std::uint32_t S = 0; S < (1u << npts); ++S) {
      if (std::popcount(S) != k) continue;
      // compact the projection with pext-style loop
      seen.assign(std::size_t{1} << k, 0);
      std::size_t found = 0;
      for (std::uint32_t m : masks) {
        std::uint32_t proj = 0;
        int bit = 0;
        for (int j = 0; j < npts; ++j)
          if (S >> j & 1) proj |= ((m >> j) & 1u) << bit++;
        if (!seen[proj]) {
          seen[proj] = 1;
          if (++found == (std::size_t{1} << k)) break;
        }
      }
      if (found == (std::size_t{1} << k)) return k;
    }
  }
  return 0;
}

}  // namespace detail

/// Samples parameter draws, records the sign patterns of a chosen second
/// derivative (d^2 phi / dx_1^2) at the probe points, and reports the
/// distinct-pattern count plus the largest fully shattered subset found.
/// Lower bounds only: the search sees only the sampled draws.
inline ShatterResult empirical_shatter_probe(const ArchSpec& arch, const std::vector<Vec>& points,
                                             std::uint64_t seed, long long budget, double scale = 1.0) {
  if (points.size() > 20) throw PreconditionError("probe points limited to 20");
  const int npts = static_cast<int>(points.size());
  auto work = [&](int, std::int64_t b, std::int64_t e) {
    std::set<std::uint32_t> local;
    for (std::int64_t t = b; t < e; ++t) {
      auto rng = seeded_rng(seed, static_cast<std::uint64_t>(t));
      Network net = detail::sample_arch_network(arch, rng, scale);
      JetEvaluator ev(net);
      std::uint32_t mask = 0;
      for (int i = 0; i < npts; ++i) {
        Jet2 j = ev.eval(points[i]);
        if (j.hess[0] > 0) mask |= 1u << i;
      }
      local.insert(mask);
    }
    return local;
  };
  auto combine = [](std::set<std::uint32_t>& acc, std::set<std::uint32_t>&& part) {
    acc.merge(part);
  };
  std::set<std::uint32_t> masks = chunked_reduce<std::set<std::uint32_t>>(budget, 32, work, combine);
  ShatterResult res;
  res.patterns.assign(masks.begin(), masks.end());
  res.distinct_patterns = static_cast<long long>(res.patterns.size());
  res.largest_shattered = detail::largest_shattered_subset(res.patterns, npts);
  return res;
}

/// Finitely many candidate functions per trial.
using FamilySampler =
    std::function<std::vector<std::function<double(std::span<const double>)>>(std::mt19937_64&)>;

/// Monte-Carlo estimate of the empirical Rademacher complexity
/// (1/M) E_sigma sup_f sum_i sigma_i f(z_i); a lower estimate of the true
/// complexity since only sampled candidates enter the sup.
inline double empirical_rademacher(const FamilySampler& sampler, const std::vector<Vec>& S, int trials,
                                   std::uint64_t seed) {
  if (S.empty() || trials < 1) throw PreconditionError("need samples and trials");
  const int M = static_cast<int>(S.size());
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    auto rng = seeded_rng(seed, static_cast<std::uint64_t>(t));
    std::vector<int> sigma(M);
    for (int& s : sigma) s = (rng() & 1) ? 1 : -1;
    auto family = sampler(rng);
    if (family.empty()) throw PreconditionError("family sampler returned no candidates");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& f : family) {
      double corr = 0.0;
      for (int i = 0; i < M; ++i) corr += sigma[i] * f(S[i]);
      best = std::max(best, corr / M);
    }
    acc += best;
  }
  return acc / trials;
}

}  // namespace dsrn
