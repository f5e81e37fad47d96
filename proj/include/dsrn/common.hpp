#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsrn {

/// Error categories used across the library. The CLI maps these to exit
/// codes and machine-readable category strings.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct SpecError : Error {  // invalid construction parameters
  using Error::Error;
};
struct StructureError : Error {  // activation schedule violations
  using Error::Error;
};
struct BudgetError : Error {  // DSRN depth-budget violations
  using Error::Error;
};
struct DomainError : Error {  // point outside a region/cell
  using Error::Error;
};
struct AccuracyError : Error {  // quadrature refinement disagreement
  using Error::Error;
};
struct OverflowError : Error {  // non-finite values in a computation
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// splitmix64; used to derive independent seeded streams from a master seed.
inline std::uint64_t split_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t tag) {
  return split_mix(seed ^ (0x100000001b3ULL * tag + 0xcbf29ce484222325ULL));
}

/// Independent generator for (seed, tag); tag identifies the consumer so
/// adding streams never perturbs existing ones.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t tag = 0) {
  return std::mt19937_64(hash_combine(seed, tag));
}

inline double sqr(double x) { return x * x; }

}  // namespace dsrn
