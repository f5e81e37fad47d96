#pragma once

#include <functional>
#include <numbers>

#include "dsrn/gadgets.hpp"
#include "dsrn/jet.hpp"

namespace dsrn {

/// Approximation target with an analytic derivative oracle. Targets are
/// defined on an enlarged box around [0,1]^d (at least [-1/4, 5/4]^d) so
/// every averaged-Taylor ball stays inside the domain of definition.
struct TargetFunction {
  std::string name;
  int dim = 1;
  int smoothness = 0;  // derivative oracle valid for |alpha| <= smoothness
  double wnp_bound = 1.0;
  // per-axis domain of definition; the builtin targets have global
  // formulas, custom targets default to the enlarged box around [0,1]^d
  double domain_lo = -0.25, domain_hi = 1.25;
  std::function<double(std::span<const double>)> value;
  std::function<double(const MultiIndex&, std::span<const double>)> derivative;

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

namespace detail {

// k-th derivative of sin(c*x + phase): c^k sin(c*x + phase + k*pi/2)
inline double sin_derivative(double c, double phase, int k, double x) {
  return std::pow(c, k) * std::sin(c * x + phase + k * std::numbers::pi / 2.0);
}

}  // namespace detail

inline TargetFunction make_sin_target(double frequency, const std::string& name, int smoothness = 8) {
  TargetFunction f;
  f.name = name;
  f.dim = 1;
  f.smoothness = smoothness;
  f.wnp_bound = std::pow(frequency, smoothness);
  f.domain_lo = -1e9;
  f.domain_hi = 1e9;
  f.value = [frequency](std::span<const double> x) { return std::sin(frequency * x[0]); };
  f.derivative = [frequency](const MultiIndex& a, std::span<const double> x) {
    return detail::sin_derivative(frequency, 0.0, a[0], x[0]);
  };
  return f;
}

inline TargetFunction make_sin_pi() { return make_sin_target(std::numbers::pi, "sin_pi"); }
inline TargetFunction make_sin_2pi() { return make_sin_target(2.0 * std::numbers::pi, "sin_2pi"); }

/// 1D polynomial sum_k coeffs[k] x^k.
inline TargetFunction make_poly_target(Vec coeffs) {
  TargetFunction f;
  f.name = "poly";
  f.dim = 1;
  f.smoothness = 16;
  f.domain_lo = -1e9;
  f.domain_hi = 1e9;
  f.value = [coeffs](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * x[0] + coeffs[k];
    return acc;
  };
  f.derivative = [coeffs](const MultiIndex& a, std::span<const double> x) {
    int k = a[0];
    double acc = 0.0;
    for (int j = static_cast<int>(coeffs.size()) - 1; j >= k; --j) {
      double fall = 1.0;
      for (int t = 0; t < k; ++t) fall *= j - t;
      acc = acc * x[0] + coeffs[j] * fall;
    }
    return acc;
  };
  return f;
}

/// Gaussian bump centered at 0.5; derivatives via the Hermite recursion
/// H_{k+1}(t) = t H_k(t) - k H_{k-1}(t) for d^k/dx^k e^{-t^2/2}.
inline TargetFunction make_gaussian_bump(double center = 0.5, double width = 0.2) {
  TargetFunction f;
  f.name = "gaussian_bump";
  f.dim = 1;
  f.smoothness = 10;
  f.domain_lo = -1e9;
  f.domain_hi = 1e9;
  f.value = [center, width](std::span<const double> x) { return std::exp(-0.5 * sqr((x[0] - center) / width)); };
  f.derivative = [center, width](const MultiIndex& a, std::span<const double> x) {
    int k = a[0];
    double t = (x[0] - center) / width;
    double hm1 = 0.0, h = 1.0;  // probabilists' Hermite
    for (int j = 0; j < k; ++j) {
      double next = t * h - j * hm1;
      hm1 = h;
      h = next;
    }
    double sign = k % 2 ? -1.0 : 1.0;
    return sign * h * std::exp(-0.5 * t * t) / std::pow(width, k);
  };
  return f;
}

/// sin(pi x) sin(pi y) on d = 2.
inline TargetFunction make_product_of_sines() {
  TargetFunction f;
  f.name = "product_of_sines";
  f.dim = 2;
  f.smoothness = 8;
  const double pi = std::numbers::pi;
  f.domain_lo = -1e9;
  f.domain_hi = 1e9;
  f.value = [pi](std::span<const double> x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  f.derivative = [pi](const MultiIndex& a, std::span<const double> x) {
    return detail::sin_derivative(pi, 0.0, a[0], x[0]) * detail::sin_derivative(pi, 0.0, a[1], x[1]);
  };
  return f;
}

/// Built-in target library keyed by CLI name.
inline TargetFunction make_target(const std::string& name, const Vec& poly_coeffs = {}) {
  if (name == "sin_pi") return make_sin_pi();
  if (name == "sin_2pi") return make_sin_2pi();
  if (name == "gaussian_bump") return make_gaussian_bump();
  if (name == "product_of_sines") return make_product_of_sines();
  if (name == "poly") {
    if (poly_coeffs.empty()) throw ConfigError("poly target needs coefficients");
    return make_poly_target(poly_coeffs);
  }
  throw ConfigError("unknown target: " + name);
}

}  // namespace dsrn
