#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>

#include "dsrn/common.hpp"

namespace dsrn {

enum class Activation { relu, relu2, linear };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::relu2: return "relu2";
    default: return "linear";
  }
}

inline double apply_activation(Activation a, double t) {
  switch (a) {
    case Activation::relu: return t > 0 ? t : 0.0;
    case Activation::relu2: return t > 0 ? t * t : 0.0;
    default: return t;
  }
}

/// Row-compressed sparse matrix. Assembled networks are block-structured
/// with mostly empty weight matrices, so dense storage is not an option;
/// small trained networks simply store all entries explicitly.
class WeightMatrix {
 public:
  WeightMatrix() : rows_(0), cols_(0), row_start_{0} {}

  WeightMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_start_(rows + 1, 0) {
    if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
  }

  /// Build from a dense row-major table; zeros may be kept explicit so the
  /// entry layout stays trainable.
  static WeightMatrix from_dense(int rows, int cols, const Vec& dense, bool keep_zeros = false) {
    if (static_cast<std::size_t>(rows) * cols != dense.size())
      throw DimensionError("dense size does not match dimensions");
    WeightMatrix w(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        double v = dense[static_cast<std::size_t>(i) * cols + j];
        if (keep_zeros || v != 0.0) {
          w.col_.push_back(j);
          w.val_.push_back(v);
        }
      }
      w.row_start_[i + 1] = static_cast<std::int64_t>(w.col_.size());
    }
    return w;
  }

  /// Build from per-row (col, value) lists.
  static WeightMatrix from_rows(int cols, const std::vector<std::vector<std::pair<int, double>>>& rows) {
    WeightMatrix w(static_cast<int>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (auto [j, v] : rows[i]) {
        if (j < 0 || j >= cols) throw DimensionError("column index out of range");
        w.col_.push_back(j);
        w.val_.push_back(v);
      }
      w.row_start_[i + 1] = static_cast<std::int64_t>(w.col_.size());
    }
    return w;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }

  double at(int i, int j) const {
    for (std::int64_t k = row_start_[i]; k < row_start_[i + 1]; ++k)
      if (col_[k] == j) return val_[k];
    return 0.0;
  }

  std::span<const double> values() const { return val_; }
  std::span<double> values() { return val_; }
  std::int64_t row_begin(int i) const { return row_start_[i]; }
  std::int64_t row_end(int i) const { return row_start_[i + 1]; }
  int col_index(std::int64_t k) const { return col_[k]; }
  double value(std::int64_t k) const { return val_[k]; }
  double& value(std::int64_t k) { return val_[k]; }

  // y = W x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < rows_; ++i) {
      double acc = 0.0;
      for (std::int64_t k = row_start_[i]; k < row_start_[i + 1]; ++k) acc += val_[k] * x[col_[k]];
      y[i] = acc;
    }
  }

  bool values_finite() const { return all_finite(val_); }

  bool operator==(const WeightMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) return false;
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (at(i, j) != o.at(i, j)) return false;
    return true;
  }

 private:
  int rows_, cols_;
  std::vector<std::int64_t> row_start_;
  std::vector<int> col_;
  std::vector<double> val_;
};

struct Layer {
  WeightMatrix weights;
  Vec bias;
  Activation activation = Activation::linear;

  int out_dim() const { return weights.rows(); }
  int in_dim() const { return weights.cols(); }

  bool operator==(const Layer& o) const {
    return activation == o.activation && bias == o.bias && weights == o.weights;
  }
};

/// A layered affine+activation chain. The last layer must be linear and is
/// the only one allowed to be; hidden layers are relu or relu2. Immutable
/// use is thread-safe; training mutates weights through explicit access.
class Network {
 public:
  Network(int input_dim, std::vector<Layer> layers) : input_dim_(input_dim), layers_(std::move(layers)) {
    if (input_dim_ <= 0) throw DimensionError("input_dim must be positive");
    if (layers_.empty()) throw DimensionError("network needs at least the output layer");
    int prev = input_dim_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      if (l.weights.cols() != prev) throw DimensionError("layer input dimension mismatch");
      if (l.weights.rows() != static_cast<int>(l.bias.size()))
        throw DimensionError("weight rows must equal bias length");
      if (!l.weights.values_finite() || !all_finite(l.bias))
        throw OverflowError("non-finite parameter value");
      bool last = (i + 1 == layers_.size());
      if (last && l.activation != Activation::linear)
        throw StructureError("output layer must be linear");
      if (!last && l.activation == Activation::linear)
        throw StructureError("linear activation permitted only on the output layer");
      prev = l.weights.rows();
    }
  }

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layers_.back().out_dim(); }

  /// Hidden-layer count L.
  int depth() const { return static_cast<int>(layers_.size()) - 1; }

  /// Max hidden width N (0 for a purely affine map).
  int width() const {
    int w = 0;
    for (int i = 0; i + 1 < static_cast<int>(layers_.size()); ++i) w = std::max(w, layers_[i].out_dim());
    return w;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.weights.nnz() + l.bias.size();
    return n;
  }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  bool operator==(const Network& o) const { return input_dim_ == o.input_dim_ && layers_ == o.layers_; }

 private:
  int input_dim_;
  std::vector<Layer> layers_;
};

/// Forward pass h_i = W_i h~_{i-1} + b_i with the per-layer activation.
inline Vec evaluate(const Network& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_dim()) throw DimensionError("input length mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw Error("non-finite input");
  Vec cur(x.begin(), x.end());
  Vec next;
  for (const Layer& l : net.layers()) {
    next.assign(l.out_dim(), 0.0);
    l.weights.multiply(cur, next);
    for (int i = 0; i < l.out_dim(); ++i) {
      double t = next[i] + l.bias[i];
      t = apply_activation(l.activation, t);
      if (!std::isfinite(t)) throw OverflowError("non-finite intermediate value");
      next[i] = t;
    }
    cur.swap(next);
  }
  return cur;
}

inline double evaluate_scalar(const Network& net, std::span<const double> x) {
  Vec out = evaluate(net, x);
  if (out.size() != 1) throw DimensionError("network output is not scalar");
  return out[0];
}

/// Depth accounting of the DSRN class: L1 leading relu layers, L2 trailing
/// relu2 layers, budget L2 <= C*log2(L). log base 2 throughout.
struct DsrnProfile {
  double C = 0.0;
  int L = 0;
  int L1 = 0;
  int L2 = 0;
};

/// Checks membership in the class N_{C,L}. Fails with StructureError if a
/// squared-ReLU layer precedes a ReLU layer, BudgetError if L2 exceeds
/// C*log2(L). A network with no relu2 layers is always accepted.
inline DsrnProfile validate_dsrn(const Network& net, double C) {
  if (C <= 0) throw SpecError("C must be positive");
  DsrnProfile p;
  p.C = C;
  p.L = net.depth();
  bool seen_relu2 = false;
  for (int i = 0; i < p.L; ++i) {
    Activation a = net.layers()[i].activation;
    if (a == Activation::relu2) {
      seen_relu2 = true;
      ++p.L2;
    } else {
      if (seen_relu2) throw StructureError("squared-ReLU layer occurs before a ReLU layer");
      ++p.L1;
    }
  }
  if (p.L2 > 0 && p.L2 > C * std::log2(static_cast<double>(p.L)))
    throw BudgetError("L2 exceeds C*log2(L) depth budget");
  return p;
}

}  // namespace dsrn
