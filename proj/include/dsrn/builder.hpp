#pragma once

#include <utility>

#include "dsrn/network.hpp"

namespace dsrn {

/// Assembles a network against a fixed per-layer activation schedule.
/// Everything is expressed through affine expressions over the nodes of a
/// single stage; gadget helpers (products, squares, identity carries) place
/// the neurons they need and hand back the new expression. Stage 0 is the
/// input; hidden stages are 1..H; the output layer is affine.
class NetBuilder {
 public:
  struct Expr {
    int stage = 0;
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;  // (node index in `stage`, coefficient)

    bool is_constant() const { return terms.empty(); }
  };

  NetBuilder(int input_dim, std::vector<Activation> schedule)
      : input_dim_(input_dim), schedule_(std::move(schedule)), neurons_(schedule_.size()) {
    for (Activation a : schedule_)
      if (a == Activation::linear) throw StructureError("linear layers only at the output");
  }

  int stages() const { return static_cast<int>(schedule_.size()); }
  Activation stage_activation(int s) const { return schedule_.at(s - 1); }
  int stage_width(int s) const { return static_cast<int>(neurons_.at(s - 1).size()); }

  Expr input(int j) const {
    if (j < 0 || j >= input_dim_) throw DimensionError("input index out of range");
    return Expr{0, 0.0, {{j, 1.0}}};
  }

  static Expr constant(double c) { return Expr{0, c, {}}; }

  static Expr scale(Expr e, double c) {
    e.constant *= c;
    for (auto& t : e.terms) t.second *= c;
    return e;
  }

  static Expr shift(Expr e, double c) {
    e.constant += c;
    return e;
  }

  static Expr add(const Expr& a, const Expr& b) {
    if (!a.is_constant() && !b.is_constant() && a.stage != b.stage)
      throw StructureError("adding expressions from different stages");
    Expr r = a.is_constant() ? b : a;
    const Expr& o = a.is_constant() ? a : b;
    r.constant += o.constant;
    if (&o == &b && !b.is_constant() && !a.is_constant())
      r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
    return r;
  }

  static Expr negate(Expr e) { return scale(std::move(e), -1.0); }

  /// Merges duplicate node references and drops exact zeros; sparse rows
  /// must have unique column indices.
  static Expr canonical(Expr e) {
    std::sort(e.terms.begin(), e.terms.end());
    std::vector<std::pair<int, double>> merged;
    for (auto [idx, c] : e.terms) {
      if (!merged.empty() && merged.back().first == idx)
        merged.back().second += c;
      else
        merged.emplace_back(idx, c);
    }
    std::erase_if(merged, [](const auto& t) { return t.second == 0.0; });
    e.terms = std::move(merged);
    return e;
  }

  /// Places one neuron whose preactivation is `pre`; returns its node index.
  int place(int stage, const Expr& pre) {
    if (stage < 1 || stage > stages()) throw StructureError("stage out of schedule range");
    if (!pre.is_constant() && pre.stage != stage - 1)
      throw StructureError("preactivation must read the previous stage");
    neurons_[stage - 1].push_back(canonical(pre));
    return static_cast<int>(neurons_[stage - 1].size()) - 1;
  }

  Expr node(int stage, int idx, double coeff = 1.0) const { return Expr{stage, 0.0, {{idx, coeff}}}; }

  /// x = sigma(x) - sigma(-x); exact on all of R.
  Expr relu_identity(const Expr& e) {
    int s = e.stage + 1;
    if (stage_activation(s) != Activation::relu) throw StructureError("relu carry in a non-relu stage");
    int p = place(s, e);
    int q = place(s, negate(e));
    Expr r{s, 0.0, {{p, 1.0}, {q, -1.0}}};
    return r;
  }

  /// Product of two same-stage expressions via xy = ((x+y)^2 - (x-y)^2)/4
  /// with each square split as sigma2(t) + sigma2(-t); exact on all of R^2.
  /// Constant pairs fold without neurons and stay stage-flexible.
  Expr mul(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return constant(a.constant * b.constant);
    int s = std::max(a.is_constant() ? 1 : a.stage + 1, b.is_constant() ? 1 : b.stage + 1);
    if (!a.is_constant() && !b.is_constant() && a.stage != b.stage)
      throw StructureError("multiplying expressions from different stages");
    if (stage_activation(s) != Activation::relu2) throw StructureError("product gadget in a non-relu2 stage");
    Expr sum = add(a, b), diff = add(a, negate(b));
    int n1 = place(s, sum);
    int n2 = place(s, negate(sum));
    int n3 = place(s, diff);
    int n4 = place(s, negate(diff));
    return Expr{s, 0.0, {{n1, 0.25}, {n2, 0.25}, {n3, -0.25}, {n4, -0.25}}};
  }

  /// x^2 = sigma2(x) + sigma2(-x); exact everywhere.
  Expr square(const Expr& e) {
    int s = e.is_constant() ? 1 : e.stage + 1;
    if (stage_activation(s) != Activation::relu2) throw StructureError("square gadget in a non-relu2 stage");
    int p = place(s, e);
    int q = place(s, negate(e));
    return Expr{s, 0.0, {{p, 1.0}, {q, 1.0}}};
  }

  /// Single-neuron square, valid when the argument is nonnegative.
  Expr square_nonneg(const Expr& e) {
    int s = e.is_constant() ? 1 : e.stage + 1;
    if (stage_activation(s) != Activation::relu2) throw StructureError("square gadget in a non-relu2 stage");
    int p = place(s, e);
    return Expr{s, 0.0, {{p, 1.0}}};
  }

  /// Carries a value forward to `to_stage` through identity gadgets: 2
  /// relu neurons per relu stage, a product-with-one (4 neurons) per relu2
  /// stage. Constants travel free.
  Expr lift(Expr e, int to_stage) {
    if (e.is_constant()) {
      e.stage = to_stage;
      return e;
    }
    while (e.stage < to_stage) {
      if (stage_activation(e.stage + 1) == Activation::relu)
        e = relu_identity(e);
      else
        e = mul(e, constant(1.0));
    }
    if (e.stage != to_stage) throw StructureError("cannot lift backwards");
    return e;
  }

  /// Materializes the network; outputs are lifted to the last stage first.
  Network build(std::vector<Expr> outputs) {
    for (Expr& e : outputs) e = lift(std::move(e), stages());
    std::vector<Layer> layers;
    int prev_width = input_dim_;
    for (int s = 1; s <= stages(); ++s) {
      const auto& ns = neurons_[s - 1];
      if (ns.empty()) throw StructureError("empty hidden stage in schedule");
      std::vector<std::vector<std::pair<int, double>>> rows;
      Vec bias;
      rows.reserve(ns.size());
      for (const Expr& e : ns) {
        rows.push_back(e.terms);
        bias.push_back(e.constant);
      }
      Layer l;
      l.weights = WeightMatrix::from_rows(prev_width, rows);
      l.bias = std::move(bias);
      l.activation = schedule_[s - 1];
      prev_width = l.out_dim();
      layers.push_back(std::move(l));
    }
    std::vector<std::vector<std::pair<int, double>>> rows;
    Vec bias;
    for (const Expr& e : outputs) {
      Expr c = canonical(e);
      rows.push_back(c.terms);
      bias.push_back(c.constant);
    }
    Layer out;
    out.weights = WeightMatrix::from_rows(prev_width, rows);
    out.bias = std::move(bias);
    out.activation = Activation::linear;
    layers.push_back(std::move(out));
    return Network(input_dim_, std::move(layers));
  }

 private:
  int input_dim_;
  std::vector<Activation> schedule_;
  std::vector<std::vector<Expr>> neurons_;
};

}  // namespace dsrn
