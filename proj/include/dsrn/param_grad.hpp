#pragma once

#include <functional>

#include "dsrn/jet.hpp"

namespace dsrn {

/// Gradient of a scalar functional with respect to every stored weight and
/// bias; layout mirrors the network's sparse entry order exactly.
struct ParamGradient {
  struct LayerGrad {
    Vec weights;  // one slot per stored weight entry
    Vec bias;
  };
  std::vector<LayerGrad> layers;

  static ParamGradient zeros_like(const Network& net) {
    ParamGradient g;
    g.layers.resize(net.layers().size());
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      g.layers[i].weights.assign(net.layers()[i].weights.nnz(), 0.0);
      g.layers[i].bias.assign(net.layers()[i].bias.size(), 0.0);
    }
    return g;
  }

  void accumulate(const ParamGradient& o) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      for (std::size_t k = 0; k < layers[i].weights.size(); ++k) layers[i].weights[k] += o.layers[i].weights[k];
      for (std::size_t k = 0; k < layers[i].bias.size(); ++k) layers[i].bias[k] += o.layers[i].bias[k];
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& l : layers) {
      for (double v : l.weights) m = std::max(m, std::abs(v));
      for (double v : l.bias) m = std::max(m, std::abs(v));
    }
    return m;
  }
};

/// Adjoint seed on a network output jet; the functional fills in d(loss)/d
/// of whichever jet entries it uses.
struct JetAdjoint {
  double value = 0.0;
  Vec grad;
  Vec hess;
  explicit JetAdjoint(int dim = 0) : grad(dim, 0.0), hess(static_cast<std::size_t>(dim) * dim, 0.0) {}
};

/// Per-point loss term: receives the output jet, returns the loss
/// contribution and writes the adjoint seed.
using PointFunctional = std::function<double(std::size_t index, const Jet2& out, JetAdjoint& seed)>;

/// Reverse accumulation over the order-2 jet propagation
/// (reverse-over-forward). Points are processed in order and contributions
/// summed in order, so results are bit-reproducible.
inline ParamGradient param_gradient(const Network& net, const std::vector<Vec>& batch,
                                    const PointFunctional& functional, double* loss_out = nullptr) {
  if (net.output_dim() != 1) throw DimensionError("param_gradient expects a scalar network");
  const int d = net.input_dim();
  const std::size_t gd = d, hd = static_cast<std::size_t>(d) * d;
  const auto& layers = net.layers();
  ParamGradient grad = ParamGradient::zeros_like(net);
  JetEvaluator ev(net);
  double total_loss = 0.0;

  // adjoint buffers per layer (pre-activation side) and one for the carried
  // post-activation adjoint
  detail::JetBuffer bar_pre, bar_post;
  for (std::size_t pi = 0; pi < batch.size(); ++pi) {
    const Vec& x = batch[pi];
    ev.propagate(x);
    Jet2 out(d);
    const detail::JetBuffer& last = ev.post_jets(layers.size() - 1);
    out.value = last.val[0];
    std::copy(last.grad.begin(), last.grad.begin() + gd, out.grad.begin());
    std::copy(last.hess.begin(), last.hess.begin() + hd, out.hess.begin());

    JetAdjoint seed(d);
    double contribution = functional(pi, out, seed);
    if (!std::isfinite(contribution)) throw OverflowError("functional evaluated non-finite");
    total_loss += contribution;

    bar_post.resize(1, d);
    bar_post.val[0] = seed.value;
    std::copy(seed.grad.begin(), seed.grad.end(), bar_post.grad.begin());
    std::copy(seed.hess.begin(), seed.hess.end(), bar_post.hess.begin());

    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
      const Layer& l = layers[li];
      const detail::JetBuffer& pre = ev.pre_jets(li);
      const int n = l.out_dim();
      // activation reverse: bar_post -> bar_pre
      bar_pre.resize(n, d);
      for (int i = 0; i < n; ++i) {
        const double v = pre.val[i];
        double* bpv = &bar_pre.val[i];
        double* bpg = &bar_pre.grad[i * gd];
        double* bph = &bar_pre.hess[i * hd];
        const double* ov = &bar_post.val[i];
        const double* og = &bar_post.grad[i * gd];
        const double* oh = &bar_post.hess[i * hd];
        switch (l.activation) {
          case Activation::linear:
            *bpv = *ov;
            std::copy(og, og + gd, bpg);
            std::copy(oh, oh + hd, bph);
            break;
          case Activation::relu: {
            double s = v > 0 ? 1.0 : 0.0;
            *bpv = s * *ov;
            for (std::size_t t = 0; t < gd; ++t) bpg[t] = s * og[t];
            for (std::size_t t = 0; t < hd; ++t) bph[t] = s * oh[t];
            break;
          }
          case Activation::relu2: {
            double u = v > 0 ? v : 0.0;
            double gate = v > 0 ? 1.0 : 0.0;
            const double* pg = &pre.grad[i * gd];
            const double* ph = &pre.hess[i * hd];
            double acc = 2.0 * u * *ov;
            if (gate > 0) {
              double dot_g = 0.0, dot_h = 0.0;
              for (std::size_t t = 0; t < gd; ++t) dot_g += og[t] * pg[t];
              for (std::size_t t = 0; t < hd; ++t) dot_h += oh[t] * ph[t];
              acc += 2.0 * dot_g + 2.0 * dot_h;
            }
            *bpv = acc;
            for (std::size_t a = 0; a < gd; ++a) {
              double gsum = 2.0 * u * og[a];
              if (gate > 0) {
                double sym = 0.0;
                for (std::size_t b = 0; b < gd; ++b) sym += (oh[a * gd + b] + oh[b * gd + a]) * pg[b];
                gsum += 2.0 * sym;
              }
              bpg[a] = gsum;
            }
            for (std::size_t t = 0; t < hd; ++t) bph[t] = 2.0 * u * oh[t];
            break;
          }
        }
      }
      // affine reverse: parameter gradients and the carried adjoint
      const detail::JetBuffer& below = li == 0 ? ev.input_jets() : ev.post_jets(li - 1);
      int m = l.in_dim();
      bar_post.resize(m, d);
      auto& lw = grad.layers[li].weights;
      auto& lb = grad.layers[li].bias;
      for (int i = 0; i < n; ++i) {
        const double bv = bar_pre.val[i];
        const double* bg = &bar_pre.grad[i * gd];
        const double* bh = &bar_pre.hess[i * hd];
        lb[i] += bv;
        for (auto k = l.weights.row_begin(i); k < l.weights.row_end(i); ++k) {
          const std::size_t c = l.weights.col_index(k);
          const double w = l.weights.value(k);
          const double* cv = &below.val[c];
          const double* cg = &below.grad[c * gd];
          const double* ch = &below.hess[c * hd];
          double wg = bv * *cv;
          for (std::size_t t = 0; t < gd; ++t) wg += bg[t] * cg[t];
          for (std::size_t t = 0; t < hd; ++t) wg += bh[t] * ch[t];
          lw[k] += wg;
          if (li > 0) {
            bar_post.val[c] += w * bv;
            double* tg = &bar_post.grad[c * gd];
            double* th = &bar_post.hess[c * hd];
            for (std::size_t t = 0; t < gd; ++t) tg[t] += w * bg[t];
            for (std::size_t t = 0; t < hd; ++t) th[t] += w * bh[t];
          }
        }
      }
    }
  }
  if (loss_out) *loss_out = total_loss;
  return grad;
}

}  // namespace dsrn
