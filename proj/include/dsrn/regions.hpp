#pragma once

#include <optional>
#include <span>

#include "dsrn/common.hpp"

namespace dsrn {

/// One of the 2^d overlapping supports Omega_m:
///   Omega_1 = U_{i=0..K-1} [i/K, i/K + 3/(4K)]
///   Omega_2 = U_{i=0..K}   [i/K - 1/(2K), i/K + 1/(4K)] intersected [0,1]
struct RegionSpec {
  int K = 1;
  std::vector<int> m;
  int d = 1;

  void validate() const {
    if (K < 1) throw SpecError("K must be positive");
    if (static_cast<int>(m.size()) != d) throw DimensionError("m length must equal d");
    for (int v : m)
      if (v != 1 && v != 2) throw SpecError("m entries must be 1 or 2");
  }
};

/// Index of the Omega_{m_j} component containing x (one coordinate), or
/// nullopt. Components are pairwise disjoint, so the index is unique.
inline std::optional<int> region_component(int K, int mj, double x) {
  if (mj == 1) {
    int i = static_cast<int>(std::floor(K * x));
    if (i < 0 || i > K - 1) return std::nullopt;
    if (K * x - i <= 0.75) return i;
    return std::nullopt;
  }
  int i = static_cast<int>(std::floor(K * x + 0.5));
  if (i < 0 || i > K) return std::nullopt;
  if (K * x - i <= 0.25) return i;
  return std::nullopt;
}

inline bool in_region(std::span<const double> x, const RegionSpec& spec) {
  spec.validate();
  if (static_cast<int>(x.size()) != spec.d) throw DimensionError("point dimension mismatch");
  for (int j = 0; j < spec.d; ++j)
    if (!region_component(spec.K, spec.m[j], x[j])) return false;
  return true;
}

/// All m in {1,2}^d in lexicographic order.
inline std::vector<std::vector<int>> all_region_multiindices(int d) {
  std::vector<std::vector<int>> out;
  for (int mask = 0; mask < (1 << d); ++mask) {
    std::vector<int> m(d);
    for (int j = 0; j < d; ++j) m[j] = (mask >> j) & 1 ? 2 : 1;
    out.push_back(std::move(m));
  }
  return out;
}

/// Axis interval of the unclipped cell Omega_{m,i} in one coordinate:
/// [i/K, (4i+3)/(4K)] for m_j = 1, [(4i-2)/(4K), (4i+1)/(4K)] for m_j = 2.
struct CellInterval {
  double lo, hi;
};

inline CellInterval cell_interval(int K, int mj, int i) {
  if (mj == 1) return {static_cast<double>(i) / K, (4.0 * i + 3.0) / (4.0 * K)};
  return {(4.0 * i - 2.0) / (4.0 * K), (4.0 * i + 1.0) / (4.0 * K)};
}

/// Cell index of x within Omega_m (per coordinate), or nullopt when x lies
/// in the trifling gaps. Cells within one region are disjoint; boundary
/// points belong to the unique (hence lexicographically smallest) cell.
inline std::optional<std::vector<int>> cell_of(std::span<const double> x, const RegionSpec& spec) {
  std::vector<int> idx(spec.d);
  for (int j = 0; j < spec.d; ++j) {
    auto c = region_component(spec.K, spec.m[j], x[j]);
    if (!c) return std::nullopt;
    idx[j] = *c;
  }
  return idx;
}

}  // namespace dsrn
