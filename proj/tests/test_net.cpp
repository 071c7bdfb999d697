#include <cmath>
#include <vector>

#include "doctest.h"
#include "gradcheck.hpp"
#include "nfq/errors.hpp"
#include "nfq/kernels.hpp"
#include "nfq/net.hpp"
#include "nfq/rng.hpp"

using namespace nfq;
using namespace nfq::testing;

TEST_CASE("glorot init: zero biases, bound, determinism") {
  const std::vector<LayerSpec> specs{{256, Activation::relu}, {256, Activation::tanh},
                                     {1, Activation::sigmoid}};
  const Network a = glorot_init(256, specs, 7);
  const Network b = glorot_init(256, specs, 7);
  CHECK(a == b);
  for (const auto& layer : a.layers()) CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);

  const double bound = std::sqrt(6.0 / 512.0);
  CHECK(glorot_bound(256, 256) == doctest::Approx(0.108253).epsilon(1e-5));
  CHECK(glorot_bound(256, 256) == bound);
  const Matrix& w = a.layers()[1].weights;  // 256 x 256 = 65536 samples
  CHECK(w.size() == 65536);
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  CHECK(w.cwiseAbs().maxCoeff() >= 0.95 * bound);

  CHECK_FALSE(glorot_init(256, specs, 8) == a);
  CHECK_THROWS_AS(glorot_init(4, std::vector<LayerSpec>{}, 1), ConfigError);
}

TEST_CASE("uniform init stays within its range") {
  const std::vector<LayerSpec> specs{{20, Activation::tanh}, {20, Activation::tanh},
                                     {1, Activation::sigmoid}};
  const Network net = uniform_init(6, specs, 0.5, 3);
  for (const auto& layer : net.layers()) {
    CHECK(layer.weights.cwiseAbs().maxCoeff() <= 0.5);
    CHECK(layer.bias.isZero());
  }
}

TEST_CASE("forward: trivial cases") {
  SUBCASE("zero sigmoid net outputs 0.5") {
    Network net = glorot_init(3, std::vector<LayerSpec>{{4, Activation::relu}, {2, Activation::sigmoid}}, 1);
    for (auto& layer : net.layers()) layer.weights.setZero();
    Rng rng(5);
    const Matrix out = forward(net, random_matrix(rng, 3, 17));
    CHECK((out.array() == 0.5).all());
  }
  SUBCASE("identity linear layer") {
    DenseLayer layer{Matrix::Identity(4, 4), Vector::Zero(4), Activation::linear};
    const Network net(4, {layer});
    Rng rng(6);
    const Matrix x = random_matrix(rng, 4, 9);
    CHECK(forward(net, x) == x);
  }
  SUBCASE("shape mismatch") {
    const Network net = glorot_init(3, std::vector<LayerSpec>{{2, Activation::linear}}, 1);
    CHECK_THROWS_AS(forward(net, Matrix::Zero(4, 2)), ShapeError);
  }
}

TEST_CASE("batched forward equals per-sample forward") {
  Rng rng(11);
  const Network net = random_net(rng, 6, {{32, Activation::relu}, {16, Activation::tanh}, {3, Activation::sigmoid}});
  const Matrix x = random_matrix(rng, 6, 300);
  const Matrix batched = forward(net, x);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Matrix single = forward(net, x.col(j));
    worst = std::max(worst, (single - batched.col(j)).cwiseAbs().maxCoeff());
    CHECK(((single.array() > 0.0) && (single.array() < 1.0)).all());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("serial and parallel kernels agree") {
  Rng rng(12);
  const Network net = random_net(rng, 5, {{64, Activation::relu}, {64, Activation::tanh}, {1, Activation::sigmoid}});
  const Matrix x = random_matrix(rng, 5, 777);
  const Matrix y = random_matrix(rng, 1, 777, 0.0, 1.0);
  CHECK((kernels::serial::forward(net, x) - kernels::parallel::forward(net, x)).cwiseAbs().maxCoeff() <= 1e-12);

  const Targets t{y, {}};
  const LossGradient s = kernels::serial::backward_mse(net, x, t);
  const LossGradient p = kernels::parallel::backward_mse(net, x, t);
  CHECK(std::abs(s.loss - p.loss) <= 1e-12);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    CHECK((s.gradients.weights[l] - p.gradients.weights[l]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.gradients.biases[l] - p.gradients.biases[l]).cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("headed targets") {
    const Network heads = random_net(rng, 5, {{8, Activation::relu}, {3, Activation::sigmoid}});
    std::vector<Eigen::Index> which;
    for (int j = 0; j < 50; ++j) which.push_back(j % 3);
    const Targets ht{random_matrix(rng, 3, 50, 0.0, 1.0), which};
    const Matrix hx = random_matrix(rng, 5, 50);
    const LossGradient hs = kernels::serial::backward_mse(heads, hx, ht);
    const LossGradient hp = kernels::parallel::backward_mse(heads, hx, ht);
    CHECK(std::abs(hs.loss - hp.loss) <= 1e-12);
    CHECK((hs.gradients.weights[0] - hp.gradients.weights[0]).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("backward_mse: loss properties") {
  Rng rng(13);
  const Network net = random_net(rng, 3, {{4, Activation::tanh}, {2, Activation::linear}});
  const Matrix x = random_matrix(rng, 3, 10);
  const Matrix out = forward(net, x);

  const LossGradient exact = backward_mse(net, x, Targets{out, {}});
  CHECK(exact.loss == 0.0);
  for (const auto& g : exact.gradients.weights) CHECK(g.isZero());
  for (const auto& g : exact.gradients.biases) CHECK(g.isZero());

  const Matrix residual = random_matrix(rng, 2, 10);
  const double base = backward_mse(net, x, Targets{out + residual, {}}).loss;
  const double doubled = backward_mse(net, x, Targets{out + 2.0 * residual, {}}).loss;
  CHECK(doubled == doctest::Approx(4.0 * base).epsilon(1e-12));
  CHECK(base == doctest::Approx(residual.squaredNorm() / 20.0).epsilon(1e-12));

  CHECK_THROWS_AS(backward_mse(net, x, Targets{Matrix::Zero(1, 10), {}}), ShapeError);
}

TEST_CASE("analytic gradients match central differences for every activation combination") {
  Rng rng(21);
  double worst = 0.0;
  int combos = 0;
  for (const Activation a1 : kAll) {
    for (const Activation a2 : kAll) {
      for (const Activation a3 : kAll) {
        const std::vector<LayerSpec> specs{{4, a1}, {3, a2}, {2, a3}};
        Network net = random_net(rng, 3, specs);
        Matrix x = random_matrix(rng, 3, 5);
        while (min_abs_preactivation(net, x) < 1e-3) x = random_matrix(rng, 3, 5);
        const Matrix y = random_matrix(rng, 2, 5);
        const GradCheck r = finite_difference_check(net, x, y);
        CHECK(r.checked == net.parameter_count());
        worst = std::max(worst, r.worst);
        ++combos;
      }
    }
  }
  CHECK(combos == 64);
  CHECK(worst < 1e-4);
}
