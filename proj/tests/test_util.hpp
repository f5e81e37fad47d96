#pragma once

#include <random>

#include "dsrn/network.hpp"

namespace dsrn::test {

/// Dense random network with the given hidden widths and activation
/// schedule (one tag per hidden layer); output is scalar unless stated.
inline Network random_network(std::mt19937_64& rng, int input_dim, const std::vector<int>& widths,
                              const std::vector<Activation>& schedule, double weight_scale = 1.0,
                              int output_dim = 1) {
  std::normal_distribution<double> dist(0.0, weight_scale);
  std::vector<Layer> layers;
  int prev = input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    int w = widths[i];
    Vec dense(static_cast<std::size_t>(w) * prev);
    for (double& v : dense) v = dist(rng);
    Layer l;
    l.weights = WeightMatrix::from_dense(w, prev, dense, true);
    l.bias.resize(w);
    for (double& v : l.bias) v = 0.3 * dist(rng);
    l.activation = schedule[i];
    layers.push_back(std::move(l));
    prev = w;
  }
  Layer out;
  Vec dense(static_cast<std::size_t>(output_dim) * prev);
  for (double& v : dense) v = dist(rng);
  out.weights = WeightMatrix::from_dense(output_dim, prev, dense, true);
  out.bias.resize(output_dim);
  for (double& v : out.bias) v = 0.3 * dist(rng);
  out.activation = Activation::linear;
  layers.push_back(std::move(out));
  return Network(input_dim, std::move(layers));
}

inline Vec random_point(std::mt19937_64& rng, int d, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec x(d);
  for (double& v : x) v = u(rng);
  return x;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({1.0, std::abs(got), std::abs(want)});
}

}  // namespace dsrn::test
