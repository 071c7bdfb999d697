#include "nfq/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nfq/errors.hpp"
#include "nfq/kernels.hpp"
#include "nfq/log.hpp"

namespace nfq {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "rprop";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "rprop") return OptimizerKind::rprop;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

OptimizerState OptimizerState::make_adam(const Network& net, double learning_rate,
                                         AdamParams params) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  OptimizerState s;
  s.kind = OptimizerKind::adam;
  s.learning_rate = learning_rate;
  s.adam = params;
  s.first = Gradients::zeros_like(net.layers());
  s.second = Gradients::zeros_like(net.layers());
  return s;
}

OptimizerState OptimizerState::make_rprop(const Network& net, RpropParams params) {
  OptimizerState s;
  s.kind = OptimizerKind::rprop;
  s.rprop = params;
  s.first = Gradients::zeros_like(net.layers());
  for (auto& w : s.first.weights) w.setConstant(params.initial_step);
  for (auto& b : s.first.biases) b.setConstant(params.initial_step);
  s.second = Gradients::zeros_like(net.layers());
  return s;
}

namespace {

void check_shapes(const OptimizerState& state, const Network& net, const Gradients& g) {
  if (!g.same_shape(net.layers()) || !state.first.same_shape(net.layers()) ||
      !state.second.same_shape(net.layers())) {
    throw ShapeError("optimizer buffers or gradients do not match network parameters");
  }
}

template <typename Fn>
void for_each_parameter(Network& net, const Gradients& g, OptimizerState& s, Fn&& fn) {
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      fn(w.data()[i], g.weights[l].data()[i], s.first.weights[l].data()[i],
         s.second.weights[l].data()[i]);
    }
    auto& b = layers[l].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      fn(b.data()[i], g.biases[l].data()[i], s.first.biases[l].data()[i],
         s.second.biases[l].data()[i]);
    }
  }
}

}  // namespace

void adam_step(OptimizerState& state, Network& net, const Gradients& gradients) {
  if (state.kind != OptimizerKind::adam) throw ConfigError("adam_step on a non-adam optimizer");
  check_shapes(state, net, gradients);
  ++state.steps;
  const auto& p = state.adam;
  const double t = double(state.steps);
  const double correct1 = 1.0 - std::pow(p.beta1, t);
  const double correct2 = 1.0 - std::pow(p.beta2, t);
  const double lr = state.learning_rate;
  for_each_parameter(net, gradients, state, [&](double& w, double g, double& m, double& v) {
    m = p.beta1 * m + (1.0 - p.beta1) * g;
    v = p.beta2 * v + (1.0 - p.beta2) * g * g;
    const double m_hat = m / correct1;
    const double v_hat = v / correct2;
    w -= lr * m_hat / (std::sqrt(v_hat) + p.epsilon);
  });
}

void rprop_step(OptimizerState& state, Network& net, const Gradients& gradients) {
  if (state.kind != OptimizerKind::rprop) throw ConfigError("rprop_step on a non-rprop optimizer");
  check_shapes(state, net, gradients);
  ++state.steps;
  const auto& p = state.rprop;
  for_each_parameter(net, gradients, state, [&](double& w, double g, double& step, double& prev) {
    const double agreement = g * prev;
    if (agreement > 0.0) {
      step = std::min(step * p.increase, p.max_step);
    } else if (agreement < 0.0) {
      step = std::max(step * p.decrease, p.min_step);
    }
    if (g > 0.0) {
      w -= step;
    } else if (g < 0.0) {
      w += step;
    }
    prev = g;
  });
}

void optimizer_step(OptimizerState& state, Network& net, const Gradients& gradients) {
  if (state.kind == OptimizerKind::adam) {
    adam_step(state, net, gradients);
  } else {
    rprop_step(state, net, gradients);
  }
}

std::vector<Eigen::Index> batch_partition(Eigen::Index samples, Eigen::Index batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  std::vector<Eigen::Index> sizes;
  for (Eigen::Index start = 0; start < samples; start += batch_size) {
    sizes.push_back(std::min(batch_size, samples - start));
  }
  return sizes;
}

FitTrace fit(Network& net, OptimizerState& optimizer, const Matrix& inputs,
             const Targets& targets, const FitOptions& options, Rng& rng) {
  if (inputs.cols() == 0) throw InputError("fit on an empty dataset");
  if (options.epochs < 0) throw ConfigError("epochs must be non-negative");
  kernels::check_targets(net, inputs, targets);

  const Eigen::Index samples = inputs.cols();
  const Eigen::Index batch_size = std::min(options.batch_size, samples);
  if (optimizer.kind == OptimizerKind::rprop && batch_size < samples && options.epochs > 0) {
    logger()->warn("rprop used with mini-batches of {} < {} samples; sign-based updates are "
                   "unreliable on noisy gradients",
                   batch_size, samples);
  }

  const bool headed = !targets.heads.empty();
  FitTrace trace;
  std::vector<Eigen::Index> order(samples);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Matrix batch_in;
  Targets batch_t;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    OutputRange range{std::numeric_limits<double>::infinity(), 0.0,
                      -std::numeric_limits<double>::infinity()};
    double out_sum = 0.0;
    Eigen::Index out_count = 0;

    Eigen::Index start = 0;
    for (const Eigen::Index len : batch_partition(samples, batch_size)) {
      batch_in.resize(inputs.rows(), len);
      batch_t.values.resize(targets.values.rows(), len);
      batch_t.heads.resize(headed ? len : 0);
      for (Eigen::Index j = 0; j < len; ++j) {
        const Eigen::Index src = order[start + j];
        batch_in.col(j) = inputs.col(src);
        batch_t.values.col(j) = targets.values.col(src);
        if (headed) batch_t.heads[j] = targets.heads[src];
      }
      LossGradient lg = backward_mse(net, batch_in, batch_t);
      loss_sum += lg.loss * double(len);
      for (Eigen::Index j = 0; j < len; ++j) {
        for (Eigen::Index r = 0; r < lg.outputs.rows(); ++r) {
          if (headed && batch_t.heads[j] != r) continue;
          const double y = lg.outputs(r, j);
          range.min = std::min(range.min, y);
          range.max = std::max(range.max, y);
          out_sum += y;
          ++out_count;
        }
      }
      optimizer_step(optimizer, net, lg.gradients);
      start += len;
    }
    range.avg = std::clamp(out_sum / double(out_count), range.min, range.max);
    trace.loss.push_back(loss_sum / double(samples));
    trace.outputs.push_back(range);
  }
  return trace;
}

}  // namespace nfq
