#pragma once

#include <atomic>
#include <functional>

#include <json.hpp>

#include "dsrn/local_poly.hpp"
#include "dsrn/parallel.hpp"

namespace dsrn {

/// Jet-capable scalar source evaluated inside quadratures. `make()` builds
/// an independent evaluator so chunks can run on separate threads.
struct JetFnMaker {
  int dim = 1;
  std::function<std::function<Jet2(std::span<const double>, KinkStats&)>()> make;
};

inline JetFnMaker jet_source(const Network& net) {
  if (net.output_dim() != 1) throw DimensionError("norms need a scalar network");
  JetFnMaker m;
  m.dim = net.input_dim();
  m.make = [&net]() {
    auto ev = std::make_shared<JetEvaluator>(net);
    return [ev](std::span<const double> x, KinkStats& stats) { return ev->eval(x, 0, &stats); };
  };
  return m;
}

inline JetFnMaker jet_source(const TargetFunction& f) {
  JetFnMaker m;
  m.dim = f.dim;
  m.make = [&f]() { return [&f](std::span<const double> x, KinkStats&) { return f.jet(x); }; };
  return m;
}

inline JetFnMaker jet_source(const PiecewisePolyApproximant& a) {
  JetFnMaker m;
  m.dim = a.d;
  m.make = [&a]() { return [&a](std::span<const double> x, KinkStats&) { return a.eval(x); }; };
  return m;
}

/// f minus network, for error norms.
inline JetFnMaker difference_source(const TargetFunction& f, const Network& net) {
  if (f.dim != net.input_dim()) throw DimensionError("dimension mismatch");
  JetFnMaker m;
  m.dim = f.dim;
  m.make = [&f, &net]() {
    auto ev = std::make_shared<JetEvaluator>(net);
    return [&f, ev](std::span<const double> x, KinkStats& stats) {
      Jet2 j = f.jet(x);
      j -= ev->eval(x, 0, &stats);
      return j;
    };
  };
  return m;
}

/// Integration domain: an axis-aligned box, optionally restricted to a
/// region Omega_m.
struct NormDomain {
  Vec lo, hi;
  std::optional<RegionSpec> region;

  static NormDomain unit_box(int d) {
    NormDomain dm;
    dm.lo.assign(d, 0.0);
    dm.hi.assign(d, 1.0);
    return dm;
  }
  static NormDomain box(Vec lo, Vec hi) { return {std::move(lo), std::move(hi), std::nullopt}; }
  static NormDomain omega(const RegionSpec& spec) {
    NormDomain dm = unit_box(spec.d);
    dm.region = spec;
    return dm;
  }
  int dim() const { return static_cast<int>(lo.size()); }
};

struct GridSpec {
  int resolution = 64;  // midpoint cells per axis
  std::uint64_t seed = 0;
  double warn_tol = 0.01;  // two-grid discrepancy triggering the warning flag
};

/// Estimated Sobolev norm with per-derivative contributions and quadrature
/// diagnostics. For p = inf the values are sampled maxima (lower
/// estimates).
struct NormReport {
  int order = 0;
  double p = 2.0;
  std::vector<MultiIndex> alphas;
  Vec per_alpha;  // ||D^alpha||_p over the domain
  long long samples = 0;
  long long interior_samples = 0;
  double two_grid_rel = 0.0;
  bool accuracy_warning = false;
  long long kink_hits = 0;
  double min_abs_preact = std::numeric_limits<double>::infinity();

  /// Norm aggregated over |alpha| <= k.
  double norm_up_to(int k) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
      if (alphas[t].order() > k) continue;
      if (std::isinf(p))
        acc = std::max(acc, per_alpha[t]);
      else
        acc += std::pow(per_alpha[t], p);
    }
    return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
  }

  /// Seminorm: |alpha| = k only.
  double seminorm(int k) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < alphas.size(); ++t) {
      if (alphas[t].order() != k) continue;
      if (std::isinf(p))
        acc = std::max(acc, per_alpha[t]);
      else
        acc += std::pow(per_alpha[t], p);
    }
    return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
  }

  double total() const { return norm_up_to(order); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["order"] = order;
    j["p"] = std::isinf(p) ? nlohmann::json("inf") : nlohmann::json(p);
    j["total"] = total();
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t t = 0; t < alphas.size(); ++t) per[alphas[t].str()] = per_alpha[t];
    j["per_alpha"] = per;
    j["samples"] = samples;
    j["interior_samples"] = interior_samples;
    j["two_grid_rel"] = two_grid_rel;
    j["accuracy_warning"] = accuracy_warning;
    j["kink_hits"] = kink_hits;
    return j;
  }
};

namespace detail {

struct NormAccum {
  Vec acc;  // per-alpha: sum of |.|^p * vol, or max for p = inf
  long long interior = 0;
  KinkStats stats;
};

inline double jet_entry(const Jet2& j, const MultiIndex& a) {
  if (a.order() == 0) return j.value;
  int d = a.dim();
  if (a.order() == 1) {
    for (int t = 0; t < d; ++t)
      if (a[t] == 1) return j.grad[t];
  }
  int first = -1, second = -1;
  for (int t = 0; t < d; ++t) {
    for (int c = 0; c < a[t]; ++c) {
      if (first < 0)
        first = t;
      else
        second = t;
    }
  }
  return j.hess[static_cast<std::size_t>(first) * d + second];
}

inline NormReport norm_pass(const JetFnMaker& src, int n, double p, const NormDomain& domain,
                            const GridSpec& grid, int resolution) {
  const int d = domain.dim();
  if (src.dim != d) throw DimensionError("source/domain dimension mismatch");
  std::vector<MultiIndex> alphas = multi_indices_up_to(d, n);
  std::int64_t cells = 1;
  for (int j = 0; j < d; ++j) cells *= resolution;
  double cell_vol = 1.0;
  for (int j = 0; j < d; ++j) cell_vol *= (domain.hi[j] - domain.lo[j]) / resolution;

  auto work = [&](int, std::int64_t b, std::int64_t e) {
    NormAccum part;
    part.acc.assign(alphas.size(), 0.0);
    auto fn = src.make();
    Vec x(d);
    std::vector<int> idx(d);
    for (std::int64_t c = b; c < e; ++c) {
      std::int64_t rest = c;
      for (int j = 0; j < d; ++j) {
        idx[j] = static_cast<int>(rest % resolution);
        rest /= resolution;
      }
      // per-cell seeded jitter: independent of chunking and thread count,
      // with a distinct stream per resolution
      std::uint64_t h = hash_combine(grid.seed ^ (0x9e37ULL * resolution), static_cast<std::uint64_t>(c));
      for (int j = 0; j < d; ++j) {
        h = split_mix(h);
        double u = 0.5 + 0.999 * ((h >> 11) * 0x1.0p-53 - 0.5);
        x[j] = domain.lo[j] + (idx[j] + u) * (domain.hi[j] - domain.lo[j]) / resolution;
      }
      if (domain.region && !in_region(x, *domain.region)) continue;
      ++part.interior;
      Jet2 jet = fn(x, part.stats);
      for (std::size_t t = 0; t < alphas.size(); ++t) {
        double v = std::abs(jet_entry(jet, alphas[t]));
        if (std::isinf(p))
          part.acc[t] = std::max(part.acc[t], v);
        else
          part.acc[t] += std::pow(v, p) * cell_vol;
      }
    }
    return part;
  };
  auto combine = [&](NormAccum& acc, NormAccum&& part) {
    if (acc.acc.empty()) acc.acc.assign(alphas.size(), 0.0);
    for (std::size_t t = 0; t < alphas.size(); ++t)
      acc.acc[t] = std::isinf(p) ? std::max(acc.acc[t], part.acc[t]) : acc.acc[t] + part.acc[t];
    acc.interior += part.interior;
    acc.stats.evaluations += part.stats.evaluations;
    acc.stats.near_kink += part.stats.near_kink;
    acc.stats.min_abs_preact = std::min(acc.stats.min_abs_preact, part.stats.min_abs_preact);
    return;
  };
  NormAccum total = chunked_reduce<NormAccum>(cells, 64, work, combine);
  if (total.acc.empty()) total.acc.assign(alphas.size(), 0.0);

  NormReport rep;
  rep.order = n;
  rep.p = p;
  rep.alphas = std::move(alphas);
  rep.per_alpha.resize(rep.alphas.size());
  for (std::size_t t = 0; t < rep.alphas.size(); ++t)
    rep.per_alpha[t] = std::isinf(p) ? total.acc[t] : std::pow(total.acc[t], 1.0 / p);
  rep.samples = cells;
  rep.interior_samples = total.interior;
  rep.kink_hits = total.stats.near_kink;
  rep.min_abs_preact = total.stats.min_abs_preact;
  return rep;
}

}  // namespace detail

/// Jittered midpoint tensor quadrature of all |D^alpha source|, |alpha| <=
/// n, aggregated per the W^{n,p} definition (max over samples for p=inf).
/// Includes a coarse-grid pass as an accuracy indicator; `warn_tol`
/// exceedance sets a warning flag, never a failure.
inline NormReport sobolev_norm(const JetFnMaker& src, int n, double p, const NormDomain& domain,
                               const GridSpec& grid = {}) {
  if (n < 0 || n > 2) throw SpecError("norm order must be <= 2");
  if (!(p >= 1.0)) throw SpecError("p must be >= 1");
  NormReport fine = detail::norm_pass(src, n, p, domain, grid, grid.resolution);
  NormReport coarse = detail::norm_pass(src, n, p, domain, grid, std::max(1, grid.resolution / 2));
  double ft = fine.total(), ct = coarse.total();
  fine.two_grid_rel = std::abs(ft - ct) / std::max({std::abs(ft), std::abs(ct), 1e-300});
  fine.accuracy_warning = fine.two_grid_rel > grid.warn_tol && std::max(ft, ct) > 1e-14;
  fine.kink_hits += coarse.kink_hits;
  fine.min_abs_preact = std::min(fine.min_abs_preact, coarse.min_abs_preact);
  return fine;
}

inline NormReport sobolev_norm(const Network& net, int n, double p, const NormDomain& domain,
                               const GridSpec& grid = {}) {
  return sobolev_norm(jet_source(net), n, p, domain, grid);
}

inline NormReport sobolev_norm(const TargetFunction& f, int n, double p, const NormDomain& domain,
                               const GridSpec& grid = {}) {
  return sobolev_norm(jet_source(f), n, p, domain, grid);
}

/// || f - net ||_{W^{n,p}} on the domain.
inline NormReport error_norm(const TargetFunction& f, const Network& net, int n, double p,
                             const NormDomain& domain, const GridSpec& grid = {}) {
  return sobolev_norm(difference_source(f, net), n, p, domain, grid);
}

inline double infinity() { return std::numeric_limits<double>::infinity(); }

}  // namespace dsrn
