#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "dsrn/network.hpp"

namespace dsrn {

/// Value, gradient and Hessian of a scalar quantity at a point; carries
/// D^alpha phi for |alpha| <= 2. hess is d*d row-major and symmetric.
struct Jet2 {
  double value = 0.0;
  Vec grad;
  Vec hess;

  explicit Jet2(int dim = 0) : grad(dim, 0.0), hess(static_cast<std::size_t>(dim) * dim, 0.0) {}
  int dim() const { return static_cast<int>(grad.size()); }

  Jet2& operator-=(const Jet2& o) {
    value -= o.value;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= o.grad[i];
    for (std::size_t i = 0; i < hess.size(); ++i) hess[i] -= o.hess[i];
    return *this;
  }
};

/// Counters for kink-proximal preactivations seen by jet evaluation.
struct KinkStats {
  long long evaluations = 0;
  long long near_kink = 0;  // |preactivation| < threshold at a relu/relu2 neuron
  double threshold = 1e-12;
  double min_abs_preact = std::numeric_limits<double>::infinity();

  void record(double pre) {
    double a = std::abs(pre);
    if (a < min_abs_preact) min_abs_preact = a;
    if (a < threshold) ++near_kink;
  }
};

namespace detail {

// Per-layer jet storage, structure-of-arrays over neurons.
struct JetBuffer {
  Vec val, grad, hess;
  void resize(int n, int d) {
    val.assign(n, 0.0);
    grad.assign(static_cast<std::size_t>(n) * d, 0.0);
    hess.assign(static_cast<std::size_t>(n) * d * d, 0.0);
  }
};

}  // namespace detail

/// Forward propagation of (value, gradient, Hessian) through a network.
/// Kink convention: sigma1'(0)=0 and sigma2''(0)=0; quadrature callers
/// jitter samples so kink hits have probability zero.
class JetEvaluator {
 public:
  explicit JetEvaluator(const Network& net) : net_(&net), d_(net.input_dim()) {
    pre_.resize(net.layers().size());
    post_.resize(net.layers().size());
  }

  /// Jets of every output component at x.
  const detail::JetBuffer& propagate(std::span<const double> x, KinkStats* stats = nullptr,
                                     std::vector<std::uint8_t>* gates = nullptr) {
    if (static_cast<int>(x.size()) != d_) throw DimensionError("input length mismatch");
    const auto& layers = net_->layers();
    if (gates) gates->clear();
    if (stats) ++stats->evaluations;
    input_.resize(static_cast<int>(x.size()), d_);
    for (int i = 0; i < d_; ++i) {
      input_.val[i] = x[i];
      input_.grad[static_cast<std::size_t>(i) * d_ + i] = 1.0;
    }
    const detail::JetBuffer* prev = &input_;
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& l = layers[li];
      detail::JetBuffer& pre = pre_[li];
      detail::JetBuffer& post = post_[li];
      int n = l.out_dim();
      pre.resize(n, d_);
      post.resize(n, d_);
      const std::size_t gd = d_, hd = static_cast<std::size_t>(d_) * d_;
      for (int i = 0; i < n; ++i) {
        double v = l.bias[i];
        double* g = &pre.grad[i * gd];
        double* h = &pre.hess[i * hd];
        for (auto k = l.weights.row_begin(i); k < l.weights.row_end(i); ++k) {
          double w = l.weights.value(k);
          std::size_t c = l.weights.col_index(k);
          v += w * prev->val[c];
          const double* pg = &prev->grad[c * gd];
          const double* ph = &prev->hess[c * hd];
          for (std::size_t t = 0; t < gd; ++t) g[t] += w * pg[t];
          for (std::size_t t = 0; t < hd; ++t) h[t] += w * ph[t];
        }
        pre.val[i] = v;
        if (!std::isfinite(v)) throw OverflowError("non-finite preactivation");
        double* og = &post.grad[i * gd];
        double* oh = &post.hess[i * hd];
        switch (l.activation) {
          case Activation::linear:
            post.val[i] = v;
            std::copy(g, g + gd, og);
            std::copy(h, h + hd, oh);
            break;
          case Activation::relu: {
            if (stats) stats->record(v);
            if (gates) gates->push_back(v > 0);
            double s = v > 0 ? 1.0 : 0.0;
            post.val[i] = s * v;
            for (std::size_t t = 0; t < gd; ++t) og[t] = s * g[t];
            for (std::size_t t = 0; t < hd; ++t) oh[t] = s * h[t];
            break;
          }
          case Activation::relu2: {
            if (stats) stats->record(v);
            if (gates) gates->push_back(v > 0);
            double u = v > 0 ? v : 0.0;
            double gate = v > 0 ? 2.0 : 0.0;
            post.val[i] = u * u;
            for (std::size_t t = 0; t < gd; ++t) og[t] = 2.0 * u * g[t];
            for (std::size_t a = 0; a < gd; ++a)
              for (std::size_t b = 0; b < gd; ++b)
                oh[a * gd + b] = 2.0 * u * h[a * gd + b] + gate * g[a] * g[b];
            break;
          }
        }
      }
      prev = &post;
    }
    return post_.back();
  }

  Jet2 eval(std::span<const double> x, int component = 0, KinkStats* stats = nullptr) {
    const detail::JetBuffer& out = propagate(x, stats);
    if (component < 0 || component >= net_->output_dim()) throw DimensionError("output component out of range");
    Jet2 j(d_);
    j.value = out.val[component];
    std::copy(out.grad.begin() + static_cast<std::size_t>(component) * d_,
              out.grad.begin() + static_cast<std::size_t>(component + 1) * d_, j.grad.begin());
    std::size_t hd = static_cast<std::size_t>(d_) * d_;
    std::copy(out.hess.begin() + component * hd, out.hess.begin() + (component + 1) * hd, j.hess.begin());
    return j;
  }

  const Network& network() const { return *net_; }
  // Tape access for the reverse pass.
  const detail::JetBuffer& input_jets() const { return input_; }
  const detail::JetBuffer& pre_jets(std::size_t layer) const { return pre_[layer]; }
  const detail::JetBuffer& post_jets(std::size_t layer) const { return post_[layer]; }

 private:
  const Network* net_;
  int d_;
  detail::JetBuffer input_;
  std::vector<detail::JetBuffer> pre_, post_;
};

inline Jet2 eval_jet2(const Network& net, std::span<const double> x, KinkStats* stats = nullptr) {
  if (net.output_dim() != 1) throw DimensionError("eval_jet2 expects a scalar network");
  JetEvaluator ev(net);
  return ev.eval(x, 0, stats);
}

struct FdCheckReport {
  double max_rel_error = 0.0;
  bool inconclusive = false;  // stencil crossed a kink; result not meaningful
  int gate_flips = 0;
  double min_abs_preact = std::numeric_limits<double>::infinity();
};

/// Compares eval_jet2 against order-h^2 central differences of the plain
/// forward pass. Flags instead of failing when the stencil straddles a
/// ReLU kink (detected by activation-gate flips or a tiny preactivation).
inline FdCheckReport finite_diff_check(const Network& net, std::span<const double> x, double h) {
  if (net.output_dim() != 1) throw DimensionError("finite_diff_check expects a scalar network");
  if (h <= 0) throw SpecError("step must be positive");
  const int d = net.input_dim();
  JetEvaluator ev(net);
  KinkStats stats;
  std::vector<std::uint8_t> center_gates, gates;
  ev.propagate(x, &stats, &center_gates);
  Jet2 jet = ev.eval(x, 0, nullptr);

  FdCheckReport rep;
  rep.min_abs_preact = stats.min_abs_preact;
  auto value_at = [&](const Vec& p) {
    ev.propagate(p, nullptr, &gates);
    for (std::size_t i = 0; i < gates.size(); ++i)
      if (gates[i] != center_gates[i]) ++rep.gate_flips;
    return ev.post_jets(net.layers().size() - 1).val[0];
  };
  Vec p(x.begin(), x.end());
  double f0 = value_at(p);

  auto track = [&](double exact, double fd) {
    double denom = std::max({1.0, std::abs(exact), std::abs(fd)});
    rep.max_rel_error = std::max(rep.max_rel_error, std::abs(exact - fd) / denom);
  };
  for (int i = 0; i < d; ++i) {
    p[i] = x[i] + h;
    double fp = value_at(p);
    p[i] = x[i] - h;
    double fm = value_at(p);
    p[i] = x[i];
    track(jet.grad[i], (fp - fm) / (2 * h));
    track(jet.hess[static_cast<std::size_t>(i) * d + i], (fp - 2 * f0 + fm) / (h * h));
    for (int j = i + 1; j < d; ++j) {
      p[i] = x[i] + h;
      p[j] = x[j] + h;
      double fpp = value_at(p);
      p[j] = x[j] - h;
      double fpm = value_at(p);
      p[i] = x[i] - h;
      double fmm = value_at(p);
      p[j] = x[j] + h;
      double fmp = value_at(p);
      p[i] = x[i];
      p[j] = x[j];
      track(jet.hess[static_cast<std::size_t>(i) * d + j], (fpp - fpm - fmp + fmm) / (4 * h * h));
    }
  }
  rep.inconclusive = rep.gate_flips > 0 || rep.min_abs_preact < 10 * h;
  return rep;
}

}  // namespace dsrn
