#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nfq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { relu, tanh, sigmoid, linear };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  int width = 1;
  Activation activation = Activation::linear;

  bool operator==(const LayerSpec&) const = default;
};

struct DenseLayer {
  Matrix weights;  // fan_out x fan_in
  Vector bias;     // fan_out
  Activation activation = Activation::linear;

  Eigen::Index fan_in() const { return weights.cols(); }
  Eigen::Index fan_out() const { return weights.rows(); }
};

// Parameter-shaped buffers: one matrix and one vector per layer.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const std::vector<DenseLayer>& layers);
  bool same_shape(const std::vector<DenseLayer>& layers) const;
};

// Dense feed-forward network. Samples are columns throughout: an input batch
// is fan_in x batch_size, outputs are output_dim x batch_size.
class Network {
 public:
  Network() = default;
  Network(Eigen::Index input_dim, std::vector<DenseLayer> layers);

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::vector<LayerSpec> specs() const;
  std::size_t parameter_count() const;

  bool all_finite() const;

  bool operator==(const Network& other) const;

 private:
  Eigen::Index input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

// Glorot/Xavier uniform: W ~ U[-L, L], L = sqrt(6 / (fan_in + fan_out)), b = 0.
Network glorot_init(Eigen::Index input_dim, std::span<const LayerSpec> layers,
                    std::uint64_t seed);

// Legacy NFQ initialization: W ~ U[-range, range], b = 0.
Network uniform_init(Eigen::Index input_dim, std::span<const LayerSpec> layers,
                     double range, std::uint64_t seed);

double glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out);

Matrix forward(const Network& net, const Matrix& inputs);

// Supervision for backward_mse. With `heads` empty every output row is
// regressed. Otherwise sample j is only supervised on output row heads[j]
// (action-per-output Q heads); the other rows carry no error.
struct Targets {
  Matrix values;
  std::vector<Eigen::Index> heads;
};

struct LossGradient {
  double loss = 0.0;
  Gradients gradients;
  Matrix outputs;
};

// Mean squared error over batch and supervised outputs, and its gradient.
LossGradient backward_mse(const Network& net, const Matrix& inputs, const Targets& targets);

}  // namespace nfq
