#include "dsrn/jet.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "dsrn/gadgets.hpp"
#include "dsrn/param_grad.hpp"
#include "test_util.hpp"

using namespace dsrn;

namespace {

constexpr std::uint64_t kSeed = 77231;

Network single_neuron(Activation act) {
  Layer hidden{WeightMatrix::from_dense(1, 1, {1.0}), {0.0}, act};
  Layer out{WeightMatrix::from_dense(1, 1, {1.0}), {0.0}, Activation::linear};
  return Network(1, {hidden, out});
}

// Central-difference gradient of a scalar loss with respect to every stored
// parameter, with one Richardson step (h and h/2).
ParamGradient fd_param_gradient(Network net, const std::vector<Vec>& pts, const PointFunctional& fn, double h) {
  auto loss_at = [&]() {
    double total = 0.0;
    JetEvaluator ev(net);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Jet2 out = ev.eval(pts[i]);
      JetAdjoint seed(net.input_dim());
      total += fn(i, out, seed);
    }
    return total;
  };
  ParamGradient g = ParamGradient::zeros_like(net);
  auto central = [&](double& param, double step) {
    double keep = param;
    param = keep + step;
    double fp = loss_at();
    param = keep - step;
    double fm = loss_at();
    param = keep;
    return (fp - fm) / (2 * step);
  };
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    Layer& l = net.layers()[li];
    for (std::size_t k = 0; k < l.weights.nnz(); ++k) {
      double d1 = central(l.weights.values()[k], h);
      double d2 = central(l.weights.values()[k], h / 2);
      g.layers[li].weights[k] = (4 * d2 - d1) / 3;
    }
    for (std::size_t k = 0; k < l.bias.size(); ++k) {
      double d1 = central(l.bias[k], h);
      double d2 = central(l.bias[k], h / 2);
      g.layers[li].bias[k] = (4 * d2 - d1) / 3;
    }
  }
  return g;
}

double max_grad_rel_err(const ParamGradient& a, const ParamGradient& b) {
  double worst = 0.0;
  for (std::size_t li = 0; li < a.layers.size(); ++li) {
    for (std::size_t k = 0; k < a.layers[li].weights.size(); ++k)
      worst = std::max(worst, test::rel_err(a.layers[li].weights[k], b.layers[li].weights[k]));
    for (std::size_t k = 0; k < a.layers[li].bias.size(); ++k)
      worst = std::max(worst, test::rel_err(a.layers[li].bias[k], b.layers[li].bias[k]));
  }
  return worst;
}

}  // namespace

TEST(Jet2, SquaredReluNeuron) {
  Jet2 j = eval_jet2(single_neuron(Activation::relu2), Vec{2.0});
  EXPECT_DOUBLE_EQ(j.value, 4.0);
  EXPECT_DOUBLE_EQ(j.grad[0], 4.0);
  EXPECT_DOUBLE_EQ(j.hess[0], 2.0);
}

TEST(Jet2, DeadRelu) {
  Jet2 j = eval_jet2(single_neuron(Activation::relu), Vec{-1.0});
  EXPECT_EQ(j.value, 0.0);
  EXPECT_EQ(j.grad[0], 0.0);
  EXPECT_EQ(j.hess[0], 0.0);
}

TEST(Jet2, ProductGadgetBilinearForm) {
  Network prod = make_algebra_gadget(AlgebraGadget::product);
  Jet2 j = eval_jet2(prod, Vec{1.5, -0.4});
  EXPECT_NEAR(j.value, -0.6, 1e-12);
  EXPECT_NEAR(j.grad[0], -0.4, 1e-12);
  EXPECT_NEAR(j.grad[1], 1.5, 1e-12);
  EXPECT_NEAR(j.hess[0], 0.0, 1e-12);
  EXPECT_NEAR(j.hess[1], 1.0, 1e-12);
  EXPECT_NEAR(j.hess[2], 1.0, 1e-12);
  EXPECT_NEAR(j.hess[3], 0.0, 1e-12);
}

TEST(Jet2, HessianSymmetricOnRandomNets) {
  std::mt19937_64 rng(kSeed);
  for (int rep = 0; rep < 40; ++rep) {
    int d = std::uniform_int_distribution<int>(1, 3)(rng);
    Network net = test::random_network(rng, d, {6, 5, 4},
                                       {Activation::relu, Activation::relu, Activation::relu2}, 0.6);
    Vec x = test::random_point(rng, d);
    Jet2 j = eval_jet2(net, x);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        EXPECT_NEAR(j.hess[a * d + b], j.hess[b * d + a], 1e-12);
  }
}

TEST(Jet2, PureReluHessianVanishes) {
  std::mt19937_64 rng(kSeed + 1);
  for (int rep = 0; rep < 40; ++rep) {
    Network net = test::random_network(rng, 2, {6, 6}, {Activation::relu, Activation::relu});
    Vec x = test::random_point(rng, 2);
    Jet2 j = eval_jet2(net, x);
    for (double h : j.hess) EXPECT_EQ(h, 0.0);
  }
}

TEST(FiniteDiff, AffineIsExact) {
  Layer out{WeightMatrix::from_dense(1, 2, {1.5, -2.0}), {0.25}, Activation::linear};
  Network net(2, {out});
  // second differences amplify rounding by 1/h^2; a coarse step keeps the
  // pure-rounding discrepancy near zero for an exactly linear map
  FdCheckReport rep = finite_diff_check(net, Vec{0.3, 0.8}, 1e-2);
  EXPECT_FALSE(rep.inconclusive);
  EXPECT_LE(rep.max_rel_error, 1e-10);
}

TEST(FiniteDiff, SquaredReluNeuronTight) {
  FdCheckReport rep = finite_diff_check(single_neuron(Activation::relu2), Vec{2.0}, 1e-4);
  EXPECT_FALSE(rep.inconclusive);
  EXPECT_LE(rep.max_rel_error, 1e-6);
}

TEST(FiniteDiff, RandomReluNetsMostlyAgree) {
  std::mt19937_64 rng(kSeed + 2);
  int conclusive = 0, agree = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    Network net = test::random_network(rng, 2, {5, 4}, {Activation::relu, Activation::relu}, 0.8);
    Vec x = test::random_point(rng, 2);
    FdCheckReport r = finite_diff_check(net, x, 1e-4);
    if (!r.inconclusive) {
      ++conclusive;
      if (r.max_rel_error <= 1e-5) ++agree;
    }
  }
  ASSERT_GT(conclusive, 500);
  EXPECT_GE(static_cast<double>(agree) / conclusive, 0.99);
}

TEST(FiniteDiff, MixedNetsAgainstJets) {
  std::mt19937_64 rng(kSeed + 3);
  int checked = 0;
  while (checked < 1000) {
    Network net = test::random_network(rng, 2, {5, 4, 3},
                                       {Activation::relu, Activation::relu2, Activation::relu2}, 0.5);
    for (int i = 0; i < 5 && checked < 1000; ++i) {
      Vec x = test::random_point(rng, 2, -1.0, 1.0);
      FdCheckReport r = finite_diff_check(net, x, 1e-4);
      if (r.inconclusive) continue;
      ++checked;
      EXPECT_LE(r.max_rel_error, 1e-5);
    }
  }
}

TEST(ParamGradient, ZeroAtNetworkZero) {
  // loss = phi(x)^2 at a point where phi = 0: chain rule gives 0
  Layer hidden{WeightMatrix::from_dense(1, 1, {1.0}), {0.0}, Activation::relu};
  Layer out{WeightMatrix::from_dense(1, 1, {1.0}), {0.0}, Activation::linear};
  Network net(1, {hidden, out});
  auto loss = [](std::size_t, const Jet2& o, JetAdjoint& seed) {
    seed.value = 2 * o.value;
    return o.value * o.value;
  };
  double total = 0.0;
  ParamGradient g = param_gradient(net, {Vec{-1.0}}, loss, &total);
  EXPECT_EQ(total, 0.0);
  EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(ParamGradient, AffineSecondDerivativeResidualIsFlat) {
  // (phi_xx - 1)^2 for an affine map: phi_xx == 0 identically, so the loss
  // is constant in the parameters
  Layer out{WeightMatrix::from_dense(1, 1, {1.7}), {0.4}, Activation::linear};
  Network net(1, {out});
  auto loss = [](std::size_t, const Jet2& o, JetAdjoint& seed) {
    double r = o.hess[0] - 1.0;
    seed.hess[0] = 2 * r;
    return r * r;
  };
  double total = 0.0;
  ParamGradient g = param_gradient(net, {Vec{0.5}}, loss, &total);
  EXPECT_DOUBLE_EQ(total, 1.0);
  EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(ParamGradient, PinnResidualMatchesFiniteDifferences) {
  std::mt19937_64 rng(kSeed + 4);
  const double pi = std::numbers::pi;
  Network net = test::random_network(rng, 1, {4, 4, 4},
                                     {Activation::relu2, Activation::relu2, Activation::relu2}, 0.7);
  std::vector<Vec> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(test::random_point(rng, 1, -1.0, 1.0));
  auto residual = [&](std::size_t i, const Jet2& o, JetAdjoint& seed) {
    double r = o.hess[0] + pi * pi * std::sin(pi * pts[i][0]);
    seed.hess[0] = 2 * r / pts.size();
    return r * r / pts.size();
  };
  ParamGradient exact = param_gradient(net, pts, residual);
  ParamGradient fd = fd_param_gradient(net, pts, residual, 1e-4);
  EXPECT_LE(max_grad_rel_err(exact, fd), 1e-5);
}

TEST(ParamGradient, MatchesFiniteDifferencesOnSmallMixedNets) {
  std::mt19937_64 rng(kSeed + 5);
  for (int rep = 0; rep < 10; ++rep) {
    // <= 50 parameters
    Network net = test::random_network(rng, 2, {3, 3},
                                       {Activation::relu, Activation::relu2}, 0.8);
    ASSERT_LE(net.parameter_count(), 50u);
    std::vector<Vec> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(test::random_point(rng, 2, -1.0, 1.0));
    auto loss = [&](std::size_t i, const Jet2& o, JetAdjoint& seed) {
      double w = 1.0 / pts.size();
      seed.value = w * 2 * o.value;
      seed.grad[0] = w * 0.5;
      seed.hess[3] = w * 2 * o.hess[3];
      return w * (o.value * o.value + 0.5 * o.grad[0] + o.hess[3] * o.hess[3]);
    };
    ParamGradient exact = param_gradient(net, pts, loss);
    ParamGradient fd = fd_param_gradient(net, pts, loss, 1e-4);
    EXPECT_LE(max_grad_rel_err(exact, fd), 1e-5);
  }
}

TEST(KinkStats, CountsProximalPreactivations) {
  Layer hidden{WeightMatrix::from_dense(2, 1, {1.0, 1.0}), {0.0, -0.5}, Activation::relu};
  Layer out{WeightMatrix::from_dense(1, 2, {1.0, 1.0}), {0.0}, Activation::linear};
  Network net(1, {hidden, out});
  KinkStats stats;
  eval_jet2(net, Vec{1e-14}, &stats);
  EXPECT_EQ(stats.near_kink, 1);
  eval_jet2(net, Vec{0.7}, &stats);
  EXPECT_EQ(stats.near_kink, 1);
  EXPECT_EQ(stats.evaluations, 2);
}
