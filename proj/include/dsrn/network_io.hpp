#pragma once

#include <string>

#include <json.hpp>

#include "dsrn/network.hpp"

namespace dsrn {

// Network file format: UTF-8 JSON with top-level fields
//   {input_dim, layers:[{weights: [[row]...], bias: [...], activation}]}
// activation in {"relu","relu2","linear"}. Doubles are written in shortest
// round-trip form, so serialize/deserialize is bit-exact.

inline std::string serialize(const Network& net) {
  nlohmann::json j;
  j["input_dim"] = net.input_dim();
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : net.layers()) {
    nlohmann::json layer;
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < l.out_dim(); ++i) {
      Vec row(l.in_dim(), 0.0);
      for (auto k = l.weights.row_begin(i); k < l.weights.row_end(i); ++k)
        row[l.weights.col_index(k)] = l.weights.value(k);
      rows.push_back(row);
    }
    layer["weights"] = std::move(rows);
    layer["bias"] = l.bias;
    layer["activation"] = activation_name(l.activation);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  return j.dump();
}

inline Network deserialize(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed network file: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("input_dim") || !j.contains("layers"))
      throw ParseError("missing input_dim or layers");
    int input_dim = j.at("input_dim").get<int>();
    std::vector<Layer> layers;
    for (const auto& jl : j.at("layers")) {
      Layer l;
      const auto& rows = jl.at("weights");
      if (!rows.is_array()) throw ParseError("weights must be an array of rows");
      int out_dim = static_cast<int>(rows.size());
      int in_dim = out_dim > 0 ? static_cast<int>(rows.at(0).size()) : 0;
      std::vector<std::vector<std::pair<int, double>>> entries(out_dim);
      for (int i = 0; i < out_dim; ++i) {
        const auto& row = rows.at(i);
        if (static_cast<int>(row.size()) != in_dim) throw ParseError("ragged weight matrix");
        for (int c = 0; c < in_dim; ++c) {
          double v = row.at(c).get<double>();
          if (!std::isfinite(v)) throw ParseError("non-finite weight");
          if (v != 0.0) entries[i].emplace_back(c, v);
        }
      }
      l.weights = WeightMatrix::from_rows(in_dim, entries);
      l.bias = jl.at("bias").get<Vec>();
      if (!all_finite(l.bias)) throw ParseError("non-finite bias");
      std::string act = jl.at("activation").get<std::string>();
      if (act == "relu")
        l.activation = Activation::relu;
      else if (act == "relu2")
        l.activation = Activation::relu2;
      else if (act == "linear")
        l.activation = Activation::linear;
      else
        throw ParseError("unknown activation tag: " + act);
      layers.push_back(std::move(l));
    }
    return Network(input_dim, std::move(layers));
  } catch (const ParseError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed network file: ") + e.what());
  } catch (const Error& e) {
    throw ParseError(std::string("inconsistent network file: ") + e.what());
  }
}

}  // namespace dsrn
