#pragma once

#include <numeric>

#include "dsrn/builder.hpp"

namespace dsrn {

/// Multi-index alpha with |alpha| = sum of entries.
struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {
    for (int v : entries)
      if (v < 0) throw SpecError("multi-index entries must be nonnegative");
  }
  int order() const { return std::accumulate(entries.begin(), entries.end(), 0); }
  int dim() const { return static_cast<int>(entries.size()); }
  int operator[](int i) const { return entries[i]; }

  bool operator==(const MultiIndex& o) const { return entries == o.entries; }
  bool operator<(const MultiIndex& o) const {
    if (order() != o.order()) return order() < o.order();
    return entries < o.entries;
  }

  std::string str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < entries.size(); ++i) s += (i ? "," : "") + std::to_string(entries[i]);
    return s + ")";
  }
};

/// All alpha with |alpha| <= max_order, ordered by order then
/// lexicographically; the deterministic order is relied on for
/// reproducible coefficient tables.
inline std::vector<MultiIndex> multi_indices_up_to(int d, int max_order) {
  std::vector<MultiIndex> out;
  std::vector<int> cur(d, 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == d) {
      out.push_back(MultiIndex(cur));
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      self(self, pos + 1, left - v);
    }
    cur[pos] = 0;
  };
  rec(rec, 0, max_order);
  std::sort(out.begin(), out.end());
  return out;
}

inline double pow_multi(std::span<const double> x, const MultiIndex& a) {
  double r = 1.0;
  for (int j = 0; j < a.dim(); ++j)
    for (int k = 0; k < a[j]; ++k) r *= x[j];
  return r;
}

enum class AlgebraGadget { identity, square, product };

/// Exact one-hidden-layer algebra gadgets: identity on R^d (2d relu
/// neurons), x^2 (two sigma2 neurons), xy (four sigma2 neurons).
inline Network make_algebra_gadget(AlgebraGadget kind, int d = 1) {
  switch (kind) {
    case AlgebraGadget::identity: {
      NetBuilder b(d, {Activation::relu});
      std::vector<NetBuilder::Expr> outs;
      for (int j = 0; j < d; ++j) outs.push_back(b.relu_identity(b.input(j)));
      return b.build(outs);
    }
    case AlgebraGadget::square: {
      NetBuilder b(1, {Activation::relu2});
      return b.build({b.square(b.input(0))});
    }
    default: {
      NetBuilder b(2, {Activation::relu2});
      return b.build({b.mul(b.input(0), b.input(1))});
    }
  }
}

namespace detail {

inline int product_tree_levels(int factors) {
  int levels = 0;
  int cap = 1;
  while (cap < std::max(factors, 2)) {
    cap *= 2;
    ++levels;
  }
  return std::max(levels, 1);
}

/// Balanced product tree over the literal factors of x^alpha, padded with
/// constant-1 factors to a power of two so every branch has equal depth.
/// `literals` overrides where the per-coordinate factors are read from
/// (defaults to the network inputs).
inline NetBuilder::Expr monomial_tree(NetBuilder& b, const MultiIndex& alpha, int levels,
                                      const std::vector<NetBuilder::Expr>* literals = nullptr) {
  std::vector<NetBuilder::Expr> cur;
  for (int j = 0; j < alpha.dim(); ++j)
    for (int k = 0; k < alpha[j]; ++k) cur.push_back(literals ? (*literals)[j] : b.input(j));
  std::size_t width = std::size_t{1} << levels;
  while (cur.size() < width) cur.push_back(NetBuilder::constant(1.0));
  for (int lev = 0; lev < levels; ++lev) {
    std::vector<NetBuilder::Expr> next;
    for (std::size_t i = 0; i + 1 < cur.size(); i += 2) next.push_back(b.mul(cur[i], cur[i + 1]));
    cur.swap(next);
  }
  return cur[0];
}

}  // namespace detail

/// sigma2 network computing x^alpha exactly on all of R^d.
inline Network make_monomial(const MultiIndex& alpha, int d) {
  if (alpha.dim() != d) throw DimensionError("multi-index dimension mismatch");
  if (alpha.order() == 0) {
    NetBuilder b(d, {});
    return b.build({NetBuilder::constant(1.0)});
  }
  int levels = detail::product_tree_levels(alpha.order());
  NetBuilder b(d, std::vector<Activation>(levels, Activation::relu2));
  return b.build({detail::monomial_tree(b, alpha, levels)});
}

/// sigma2 network computing sum_j c_j x^{alpha_j} exactly: parallel
/// monomial trees merged by the output layer.
inline Network make_polynomial(const std::vector<std::pair<double, MultiIndex>>& terms, int d) {
  int levels = 0;
  for (const auto& [c, a] : terms) {
    if (a.dim() != d) throw DimensionError("multi-index dimension mismatch");
    if (a.order() > 0) levels = std::max(levels, detail::product_tree_levels(a.order()));
  }
  NetBuilder b(d, std::vector<Activation>(levels, Activation::relu2));
  NetBuilder::Expr out = NetBuilder::constant(0.0);
  for (const auto& [c, a] : terms) {
    if (a.order() == 0)
      out = NetBuilder::shift(out, c);
    else
      out = NetBuilder::add(out, NetBuilder::scale(b.lift(detail::monomial_tree(b, a, levels), levels), c));
  }
  return b.build({out});
}

struct StepSpec {
  int K = 1;
  double delta = 0.0;
  int N = 0, L = 0;  // nominal budget parameters, reporting only

  void validate() const {
    if (K < 1) throw SpecError("K must be positive");
    if (!(delta > 0 && delta <= 1.0 / (3.0 * K))) throw SpecError("delta must lie in (0, 1/(3K)]");
  }
};

namespace detail {

/// Staircase over plateaus [k/K, (k+1)/K - delta], k = 0..plateaus-1. Each
/// unit jump is 1 - sigma(1 - sigma(slope*(x - a_k))) with the rise kept
/// strictly inside (k/K - delta, k/K) by a small margin: on every plateau
/// the inner neuron either saturates past 1 or is exactly 0, so the outer
/// neuron is an exact 0 or 1, and plateau values are exact integers no
/// matter how the ramp slopes round. `stage` hosts the inner neurons, the
/// jump consolidation sits at stage+1; `shift` is added to the input
/// before quantizing.
inline NetBuilder::Expr staircase(NetBuilder& b, const NetBuilder::Expr& x, int K, double delta, int plateaus,
                                  double shift = 0.0, int stage = 1) {
  const double margin = delta / 64.0;
  const double slope = 1.0 / (delta - 2.0 * margin);
  std::vector<std::pair<int, double>> terms;
  double base = 0.0;
  for (int k = 1; k < plateaus; ++k) {
    double a = static_cast<double>(k) / K - shift - delta + margin;
    int inner = b.place(stage, NetBuilder::shift(NetBuilder::scale(x, slope), -slope * a));
    int outer = b.place(stage + 1, NetBuilder::Expr{stage, 1.0, {{inner, -1.0}}});
    terms.emplace_back(outer, -1.0);
    base += 1.0;
  }
  return NetBuilder::Expr{stage + 1, base, terms};
}

}  // namespace detail

/// Proposition-style step network: phi(x) = k exactly on
/// [k/K, (k+1)/K - delta*1{k<K-1}], monotone nondecreasing on [0,1].
inline Network make_step(const StepSpec& spec) {
  spec.validate();
  if (spec.K == 1) {
    NetBuilder b(1, {});
    return b.build({NetBuilder::constant(0.0)});
  }
  NetBuilder b(1, {Activation::relu, Activation::relu});
  return b.build({detail::staircase(b, b.input(0), spec.K, spec.delta, spec.K)});
}

namespace detail {

/// Hat-basis interpolator through (i, xs[i]): a hinge layer sigma(t - i),
/// a layer of hat neurons that evaluate to an exact 0 or 1 at integer
/// inputs (all-integer arithmetic), and the end nodes extended flat. The
/// returned expression reproduces xs[i] bit-exactly at integers.
inline NetBuilder::Expr hat_interpolator(NetBuilder& b, const NetBuilder::Expr& t, const Vec& xs, int stage) {
  const int M = static_cast<int>(xs.size());
  std::vector<int> h(M);
  for (int i = 0; i < M; ++i) h[i] = b.place(stage, NetBuilder::shift(t, -static_cast<double>(i)));
  int rA = b.place(stage, NetBuilder::shift(NetBuilder::negate(t), M - 1.0));  // sigma(M-1-t)
  int rB = b.place(stage, NetBuilder::shift(NetBuilder::negate(t), M - 2.0));  // sigma(M-2-t)
  std::vector<std::pair<int, double>> out;
  for (int i = 0; i < M; ++i) {
    NetBuilder::Expr pre;
    if (i == 0)  // flat left shoulder: 1 - sigma(t) + sigma(t-1)
      pre = NetBuilder::Expr{stage, 1.0, {{h[0], -1.0}, {h[1], 1.0}}};
    else if (i == M - 1)  // flat right shoulder
      pre = NetBuilder::Expr{stage, 1.0, {{rA, -1.0}, {rB, 1.0}}};
    else
      pre = NetBuilder::Expr{stage, 0.0, {{h[i - 1], 1.0}, {h[i], -2.0}, {h[i + 1], 1.0}}};
    out.emplace_back(b.place(stage + 1, pre), xs[i]);
  }
  return NetBuilder::Expr{stage + 1, 0.0, out};
}

}  // namespace detail

/// Point-fitting network: phi(i) = xs[i] exactly for i = 0..K-1 and
/// 0 <= phi <= 1 on all of R (piecewise-linear interpolation through the
/// nodes, extended flat outside [0, K-1], output clamped to [0,1]).
inline Network make_point_fitter(const Vec& xs) {
  if (xs.empty()) throw SpecError("need at least one node value");
  for (double v : xs)
    if (!(v >= 0.0 && v <= 1.0)) throw SpecError("node values must lie in [0,1]");
  const int K = static_cast<int>(xs.size());
  if (K == 1) {
    NetBuilder b(1, {});
    return b.build({NetBuilder::constant(xs[0])});
  }
  NetBuilder b(1, {Activation::relu, Activation::relu, Activation::relu});
  NetBuilder::Expr u = detail::hat_interpolator(b, b.input(0), xs, 1);
  // clamp to [0,1]: sigma(u) - sigma(u-1); exact at the nodes since
  // u = xs[i] there and xs[i] - 1 <= 0
  int c1 = b.place(3, u);
  int c2 = b.place(3, NetBuilder::shift(u, -1.0));
  return b.build({NetBuilder::Expr{3, 0.0, {{c1, 1.0}, {c2, -1.0}}}});
}

// ---- the bump s(x), its chains s_1/s_2, and partition networks ----

/// Closed-form bump of the partition construction; the authoritative
/// reference the network realizations are tested against.
inline double bump_s(double x) {
  if (x <= 0 || x >= 3) return 0.0;
  if (x <= 0.5) return 2 * x * x;
  if (x <= 1.0) return -2 * sqr(x - 1) + 1;
  if (x <= 2.0) return 1.0;
  if (x <= 2.5) return -2 * sqr(x - 2) + 1;
  return 2 * sqr(x - 3);
}

// s_1 places bump i on [i/K, i/K + 3/(4K)] so that supp s_1 meets [0,1]
// exactly in Omega_1; s_2 is s_1 shifted left by 1/(2K), supported on
// Omega_2.
inline double bump_s1(int K, double x) {
  double acc = 0.0;
  for (int i = 0; i <= K; ++i) acc += bump_s(4.0 * K * x - 4.0 * i);
  return acc;
}

inline double bump_s2(int K, double x) { return bump_s1(K, x + 0.5 / K); }

inline double bump_sm(int K, std::span<const int> m, std::span<const double> x) {
  double r = 1.0;
  for (std::size_t j = 0; j < m.size(); ++j) r *= (m[j] == 1 ? bump_s1(K, x[j]) : bump_s2(K, x[j]));
  return r;
}

enum class BumpShift { s1, s2 };

namespace detail {

/// g = clamp to [0, 1/2] of an affine argument, then squared in the next
/// (sigma2) stage; s(y) = 2g^2(y) - 2g^2(1-y) + 2g^2(3-y) - 2g^2(y-2).
inline NetBuilder::Expr bump_chain(NetBuilder& b, const NetBuilder::Expr& x, int K, BumpShift shift) {
  double sh = shift == BumpShift::s2 ? 0.5 / K : 0.0;
  NetBuilder::Expr out = NetBuilder::constant(0.0);
  for (int i = 0; i <= K; ++i) {
    // y = 4K(x + sh) - 4i
    NetBuilder::Expr y = NetBuilder::shift(NetBuilder::scale(x, 4.0 * K), 4.0 * K * sh - 4.0 * i);
    const NetBuilder::Expr args[4] = {y, NetBuilder::shift(NetBuilder::negate(y), 1.0),
                                      NetBuilder::shift(NetBuilder::negate(y), 3.0),
                                      NetBuilder::shift(y, -2.0)};
    const double signs[4] = {2.0, -2.0, 2.0, -2.0};
    for (int t = 0; t < 4; ++t) {
      int lo = b.place(1, args[t]);
      int hi = b.place(1, NetBuilder::shift(args[t], -0.5));
      NetBuilder::Expr g{1, 0.0, {{lo, 1.0}, {hi, -1.0}}};
      out = NetBuilder::add(out, NetBuilder::scale(b.square_nonneg(g), signs[t]));
    }
  }
  return out;
}

}  // namespace detail

/// sigma2-tail network computing s_1 or s_2 exactly.
inline Network make_bump_chain(int K, BumpShift shift) {
  if (K < 1) throw SpecError("K must be positive");
  NetBuilder b(1, {Activation::relu, Activation::relu2});
  return b.build({detail::bump_chain(b, b.input(0), K, shift)});
}

struct PartitionSpec {
  int K = 1;
  std::vector<int> m;  // entries in {1,2}
  int d = 1;

  void validate() const {
    if (K < 1) throw SpecError("K must be positive");
    if (static_cast<int>(m.size()) != d) throw DimensionError("m length must equal d");
    for (int v : m)
      if (v != 1 && v != 2) throw SpecError("m entries must be 1 or 2");
  }
};

/// Network computing s_m(x) = prod_j s_{m_j}(x_j): d bump chains feeding a
/// balanced product tree; exact on R^d.
inline Network make_partition_network(const PartitionSpec& spec) {
  spec.validate();
  int levels = spec.d > 1 ? detail::product_tree_levels(spec.d) : 0;
  std::vector<Activation> schedule{Activation::relu, Activation::relu2};
  schedule.insert(schedule.end(), levels, Activation::relu2);
  NetBuilder b(spec.d, schedule);
  std::vector<NetBuilder::Expr> chains;
  for (int j = 0; j < spec.d; ++j)
    chains.push_back(detail::bump_chain(b, b.input(j), spec.K, spec.m[j] == 1 ? BumpShift::s1 : BumpShift::s2));
  if (levels == 0) return b.build({chains[0]});
  std::size_t width = std::size_t{1} << levels;
  while (chains.size() < width) chains.push_back(NetBuilder::constant(1.0));
  for (int lev = 0; lev < levels; ++lev) {
    std::vector<NetBuilder::Expr> next;
    for (std::size_t i = 0; i + 1 < chains.size(); i += 2) next.push_back(b.mul(chains[i], chains[i + 1]));
    chains.swap(next);
  }
  return b.build({chains[0]});
}

}  // namespace dsrn
