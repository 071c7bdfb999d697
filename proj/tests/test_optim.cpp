#include <cmath>
#include <vector>

#include "doctest.h"
#include "nfq/errors.hpp"
#include "nfq/optim.hpp"

using namespace nfq;

namespace {

Network tiny_net(std::uint64_t seed = 1) {
  return glorot_init(2, std::vector<LayerSpec>{{3, Activation::tanh}, {1, Activation::linear}}, seed);
}

Gradients constant_gradients(const Network& net, double g) {
  Gradients out = Gradients::zeros_like(net.layers());
  for (auto& w : out.weights) w.setConstant(g);
  for (auto& b : out.biases) b.setConstant(g);
  return out;
}

double max_param_change(const Network& a, const Network& b) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    worst = std::max(worst, (a.layers()[l].weights - b.layers()[l].weights).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.layers()[l].bias - b.layers()[l].bias).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("adam: zero gradient keeps parameters") {
  Network net = tiny_net();
  const Network before = net;
  OptimizerState s = OptimizerState::make_adam(net, 1e-3);
  adam_step(s, net, constant_gradients(net, 0.0));
  CHECK(net == before);
  CHECK(s.steps == 1);
}

TEST_CASE("adam: first step moves each parameter by the learning rate") {
  for (const double g : {0.3, -2.0, 1e-3}) {
    Network net = tiny_net();
    const Network before = net;
    OptimizerState s = OptimizerState::make_adam(net, 1e-3);
    adam_step(s, net, constant_gradients(net, g));
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const Matrix delta = net.layers()[l].weights - before.layers()[l].weights;
      // m_hat = g, v_hat = g^2: update = -lr * g / (|g| + eps)
      const double expected = -1e-3 * g / (std::abs(g) + 1e-8);
      CHECK((delta.array() - expected).abs().maxCoeff() <= 1e-12);
      CHECK(std::abs(std::abs(expected) - 1e-3) <= 1e-6);
    }
  }
}

TEST_CASE("adam: deterministic") {
  Network a = tiny_net();
  Network b = tiny_net();
  OptimizerState sa = OptimizerState::make_adam(a, 1e-2);
  OptimizerState sb = OptimizerState::make_adam(b, 1e-2);
  const Gradients g = constant_gradients(a, 0.7);
  for (int i = 0; i < 3; ++i) {
    adam_step(sa, a, g);
    adam_step(sb, b, g);
  }
  CHECK(a == b);
  CHECK_THROWS_AS(rprop_step(sa, a, g), ConfigError);
}

TEST_CASE("rprop: step size adaptation") {
  Network net = tiny_net();
  OptimizerState s = OptimizerState::make_rprop(net);
  const Network start = net;

  rprop_step(s, net, constant_gradients(net, 1.0));
  CHECK(s.first.weights[0](0, 0) == 0.1);
  CHECK(net.layers()[0].weights(0, 0) == doctest::Approx(start.layers()[0].weights(0, 0) - 0.1));

  rprop_step(s, net, constant_gradients(net, 2.0));
  CHECK(s.first.weights[0](0, 0) == doctest::Approx(0.12).epsilon(1e-15));

  rprop_step(s, net, constant_gradients(net, -1.0));
  CHECK(s.first.weights[0](0, 0) == doctest::Approx(0.06).epsilon(1e-15));

  SUBCASE("halving is clamped at the minimum step") {
    for (int i = 0; i < 40; ++i) rprop_step(s, net, constant_gradients(net, i % 2 ? -1.0 : 1.0));
    CHECK(s.first.weights[0](0, 0) == 1e-6);
    CHECK(s.first.biases[1](0) == 1e-6);
  }
  SUBCASE("growth is clamped at the maximum step") {
    for (int i = 0; i < 60; ++i) rprop_step(s, net, constant_gradients(net, 1.0));
    CHECK(s.first.weights[1](0, 0) == 50.0);
  }
  SUBCASE("zero gradient leaves parameter and step untouched") {
    const Network before = net;
    const double step = s.first.weights[0](0, 0);
    rprop_step(s, net, constant_gradients(net, 0.0));
    CHECK(net == before);
    CHECK(s.first.weights[0](0, 0) == step);
  }
}

TEST_CASE("fit: partition and trivial cases") {
  const auto sizes = batch_partition(5000, 2048);
  REQUIRE(sizes.size() == 3);
  CHECK(sizes[0] == 2048);
  CHECK(sizes[1] == 2048);
  CHECK(sizes[2] == 904);
  CHECK(batch_partition(100, 2048) == std::vector<Eigen::Index>{100});

  Network net = tiny_net();
  const Network before = net;
  OptimizerState s = OptimizerState::make_adam(net, 1e-3);
  Rng rng(1);
  const Matrix x = Matrix::Random(2, 10);
  const Targets t{Matrix::Zero(1, 10), {}};
  const FitTrace trace = fit(net, s, x, t, {0, 4}, rng);
  CHECK(trace.loss.empty());
  CHECK(net == before);

  CHECK_THROWS_AS(fit(net, s, Matrix(2, 0), Targets{Matrix(1, 0), {}}, {1, 4}, rng), InputError);
}

TEST_CASE("fit: trace length and reproducibility") {
  const Matrix x = Matrix::Random(2, 300);
  const Targets t{(x.row(0) - x.row(1)).array().tanh().matrix(), {}};
  Network a = tiny_net(4);
  Network b = tiny_net(4);
  OptimizerState sa = OptimizerState::make_adam(a, 1e-2);
  OptimizerState sb = OptimizerState::make_adam(b, 1e-2);
  Rng ra(9), rb(9);
  const FitTrace ta = fit(a, sa, x, t, {7, 64}, ra);
  const FitTrace tb = fit(b, sb, x, t, {7, 64}, rb);
  CHECK(ta.loss.size() == 7);
  CHECK(ta.loss == tb.loss);
  CHECK(a == b);
  // 300 / 64 -> 5 batches per epoch
  CHECK(sa.steps == 35);
}

TEST_CASE("fit: 1-D linear regression reaches the least-squares optimum") {
  Rng rng(3);
  const Eigen::Index n = 256;
  Matrix x(1, n), y(1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x(0, j) = rng.uniform(-1.0, 1.0);
    y(0, j) = 0.7 * x(0, j) - 0.2 + 0.01 * rng.uniform(-1.0, 1.0);
  }
  // Closed-form least squares.
  const double mx = x.mean(), my = y.mean();
  const double slope = ((x.array() - mx) * (y.array() - my)).sum() / (x.array() - mx).square().sum();
  const double intercept = my - slope * mx;

  Network net = glorot_init(1, std::vector<LayerSpec>{{1, Activation::linear}}, 2);
  OptimizerState s = OptimizerState::make_adam(net, 0.02);
  const FitTrace trace = fit(net, s, x, Targets{y, {}}, {200, 32}, rng);
  CHECK(trace.loss.back() < 1e-3);
  CHECK(net.layers()[0].weights(0, 0) == doctest::Approx(slope).epsilon(1e-2));
  CHECK(net.layers()[0].bias(0) == doctest::Approx(intercept).epsilon(1e-2));
}

TEST_CASE("rprop full-batch fit decreases the loss") {
  const Matrix x = Matrix::Random(2, 200);
  const Targets t{(0.5 * x.row(0) + 0.25 * x.row(1)).matrix(), {}};
  Network net = tiny_net(5);
  OptimizerState s = OptimizerState::make_rprop(net);
  Rng rng(2);
  const FitTrace trace = fit(net, s, x, t, {100, 200}, rng);
  CHECK(trace.loss.back() < 0.1 * trace.loss.front());
  CHECK(max_param_change(net, tiny_net(5)) > 0.0);
}
