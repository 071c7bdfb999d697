#include <algorithm>

#include "nfq/kernels.hpp"

namespace nfq::kernels::parallel {

namespace {

// Column block size: bounds the activation buffers for very large batches
// (Bellman sweeps evaluate every transition for every action at once).
constexpr Eigen::Index kChunk = 8192;

void bias_activate(Matrix& z, const Vector& bias, Activation activation) {
  const Eigen::Index cols = z.cols();
  const Eigen::Index rows = z.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j) {
    double* col = z.col(j).data();
    for (Eigen::Index r = 0; r < rows; ++r) col[r] = activate(activation, col[r] + bias[r]);
  }
}

void scale_by_slope(Matrix& delta, const Matrix& outputs, Activation activation) {
  if (activation == Activation::linear) return;
  const Eigen::Index cols = delta.cols();
  const Eigen::Index rows = delta.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j) {
    double* d = delta.col(j).data();
    const double* y = outputs.col(j).data();
    for (Eigen::Index r = 0; r < rows; ++r) d[r] *= activate_slope(activation, y[r]);
  }
}

std::vector<Matrix> forward_cached(const Network& net, const Matrix& inputs) {
  std::vector<Matrix> acts;
  acts.reserve(net.layers().size() + 1);
  acts.push_back(inputs);
  for (const auto& layer : net.layers()) {
    Matrix z(layer.fan_out(), inputs.cols());
    z.noalias() = layer.weights * acts.back();
    bias_activate(z, layer.bias, layer.activation);
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

Matrix forward(const Network& net, const Matrix& inputs) {
  check_inputs(net, inputs);
  Matrix out(net.output_dim(), inputs.cols());
  for (Eigen::Index start = 0; start < inputs.cols(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, inputs.cols() - start);
    Matrix a = inputs.middleCols(start, len);
    for (const auto& layer : net.layers()) {
      Matrix z(layer.fan_out(), len);
      z.noalias() = layer.weights * a;
      bias_activate(z, layer.bias, layer.activation);
      a.swap(z);
    }
    out.middleCols(start, len) = a;
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

  for (Eigen::Index start = 0; start < batch; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, batch - start);
    auto acts = forward_cached(net, inputs.middleCols(start, len));
    const Matrix& y = acts.back();
    result.outputs.middleCols(start, len) = y;

    Matrix delta = y - targets.values.middleCols(start, len);
    if (headed) {
      for (Eigen::Index j = 0; j < len; ++j) {
        const Eigen::Index head = targets.heads[start + j];
        for (Eigen::Index r = 0; r < delta.rows(); ++r) {
          if (r != head) delta(r, j) = 0.0;
        }
      }
    }
    result.loss += delta.squaredNorm();
    delta *= 2.0 / count;
    scale_by_slope(delta, y, layers.back().activation);

    for (std::size_t l = layers.size(); l-- > 0;) {
      result.gradients.weights[l].noalias() += delta * acts[l].transpose();
      result.gradients.biases[l] += delta.rowwise().sum();
      if (l == 0) break;
      Matrix below(layers[l].fan_in(), len);
      below.noalias() = layers[l].weights.transpose() * delta;
      scale_by_slope(below, acts[l], layers[l - 1].activation);
      delta.swap(below);
    }
  }
  result.loss /= count;
  return result;
}

}  // namespace nfq::kernels::parallel
