#include "nfq/net.hpp"

#include <cmath>

#include "nfq/errors.hpp"
#include "nfq/kernels.hpp"
#include "nfq/rng.hpp"

namespace nfq {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      break;
  }
  return "linear";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

Gradients Gradients::zeros_like(const std::vector<DenseLayer>& layers) {
  Gradients g;
  for (const auto& layer : layers) {
    g.weights.push_back(Matrix::Zero(layer.fan_out(), layer.fan_in()));
    g.biases.push_back(Vector::Zero(layer.fan_out()));
  }
  return g;
}

bool Gradients::same_shape(const std::vector<DenseLayer>& layers) const {
  if (weights.size() != layers.size() || biases.size() != layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (weights[l].rows() != layers[l].fan_out() || weights[l].cols() != layers[l].fan_in() ||
        biases[l].size() != layers[l].fan_out()) {
      return false;
    }
  }
  return true;
}

Network::Network(Eigen::Index input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("network needs at least one layer");
  Eigen::Index fan_in = input_dim_;
  for (const auto& layer : layers_) {
    if (layer.fan_in() != fan_in || layer.bias.size() != layer.fan_out()) {
      throw ShapeError("layer shapes do not chain");
    }
    fan_in = layer.fan_out();
  }
}

Eigen::Index Network::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().fan_out();
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& layer : layers_) out.push_back({int(layer.fan_out()), layer.activation});
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

bool Network::all_finite() const {
  for (const auto& layer : layers_) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

bool Network::operator==(const Network& other) const {
  if (input_dim_ != other.input_dim_ || layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& a = layers_[l];
    const auto& b = other.layers_[l];
    if (a.activation != b.activation || a.weights.rows() != b.weights.rows() ||
        a.weights.cols() != b.weights.cols() || a.weights != b.weights || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

double glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / double(fan_in + fan_out));
}

namespace {

template <typename BoundFn>
Network init_uniform(Eigen::Index input_dim, std::span<const LayerSpec> specs, std::uint64_t seed,
                     BoundFn bound_for) {
  if (specs.empty()) throw ConfigError("layer list is empty");
  if (input_dim < 1) throw ConfigError("input dimension must be positive");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  Eigen::Index fan_in = input_dim;
  for (const auto& spec : specs) {
    if (spec.width < 1) throw ConfigError("layer width must be positive");
    DenseLayer layer;
    layer.activation = spec.activation;
    layer.weights.resize(spec.width, fan_in);
    layer.bias = Vector::Zero(spec.width);
    const double bound = bound_for(fan_in, spec.width);
    // Row-major fill so a seed maps to the same weights as the checkpoint order.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = rng.uniform(-bound, bound);
      }
    }
    layers.push_back(std::move(layer));
    fan_in = spec.width;
  }
  return Network(input_dim, std::move(layers));
}

}  // namespace

Network glorot_init(Eigen::Index input_dim, std::span<const LayerSpec> layers,
                    std::uint64_t seed) {
  return init_uniform(input_dim, layers, seed, [](Eigen::Index in, Eigen::Index out) {
    return glorot_bound(in, out);
  });
}

Network uniform_init(Eigen::Index input_dim, std::span<const LayerSpec> layers, double range,
                     std::uint64_t seed) {
  if (!(range > 0.0)) throw ConfigError("uniform init range must be positive");
  return init_uniform(input_dim, layers, seed,
                      [range](Eigen::Index, Eigen::Index) { return range; });
}

Matrix forward(const Network& net, const Matrix& inputs) {
  return kernels::parallel::forward(net, inputs);
}

LossGradient backward_mse(const Network& net, const Matrix& inputs, const Targets& targets) {
  return kernels::parallel::backward_mse(net, inputs, targets);
}

}  // namespace nfq
