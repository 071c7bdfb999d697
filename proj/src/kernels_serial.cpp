#include "nfq/kernels.hpp"

namespace nfq::kernels::serial {

namespace {

std::vector<std::vector<double>> forward_sample(const Network& net, const Matrix& inputs,
                                                Eigen::Index sample) {
  std::vector<std::vector<double>> acts;
  acts.emplace_back(inputs.rows());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) acts[0][i] = inputs(i, sample);
  for (const auto& layer : net.layers()) {
    const auto& prev = acts.back();
    std::vector<double> out(layer.fan_out());
    for (Eigen::Index r = 0; r < layer.fan_out(); ++r) {
      double z = layer.bias[r];
      for (Eigen::Index c = 0; c < layer.fan_in(); ++c) z += layer.weights(r, c) * prev[c];
      out[r] = activate(layer.activation, z);
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

Matrix forward(const Network& net, const Matrix& inputs) {
  check_inputs(net, inputs);
  Matrix out(net.output_dim(), inputs.cols());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    const auto acts = forward_sample(net, inputs, j);
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, j) = acts.back()[r];
  }
  return out;
}

LossGradient backward_mse(const Network& net, const Matrix& inputs, const Targets& targets) {
  check_targets(net, inputs, targets);
  const auto& layers = net.layers();
  const Eigen::Index batch = inputs.cols();
  const bool headed = !targets.heads.empty();
  const double count = headed ? double(batch) : double(batch * net.output_dim());

  LossGradient result;
  result.gradients = Gradients::zeros_like(layers);
  result.outputs.resize(net.output_dim(), batch);

  for (Eigen::Index j = 0; j < batch; ++j) {
    const auto acts = forward_sample(net, inputs, j);
    const auto& y = acts.back();
    std::vector<double> delta(y.size(), 0.0);
    for (std::size_t r = 0; r < y.size(); ++r) {
      result.outputs(r, j) = y[r];
      if (headed && targets.heads[j] != Eigen::Index(r)) continue;
      const double residual = y[r] - targets.values(r, j);
      result.loss += residual * residual;
      delta[r] = 2.0 * residual / count * activate_slope(layers.back().activation, y[r]);
    }
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& layer = layers[l];
      const auto& below = acts[l];
      auto& gw = result.gradients.weights[l];
      auto& gb = result.gradients.biases[l];
      for (Eigen::Index r = 0; r < layer.fan_out(); ++r) {
        gb[r] += delta[r];
        for (Eigen::Index c = 0; c < layer.fan_in(); ++c) gw(r, c) += delta[r] * below[c];
      }
      if (l == 0) break;
      std::vector<double> next(layer.fan_in(), 0.0);
      for (Eigen::Index c = 0; c < layer.fan_in(); ++c) {
        double sum = 0.0;
        for (Eigen::Index r = 0; r < layer.fan_out(); ++r) sum += layer.weights(r, c) * delta[r];
        next[c] = sum * activate_slope(layers[l - 1].activation, below[c]);
      }
      delta = std::move(next);
    }
  }
  result.loss /= count;
  return result;
}

}  // namespace nfq::kernels::serial
