#pragma once

#include "nfq/net.hpp"

// Two implementations of the dense-network kernels. `parallel` is the one the
// library uses (blocked GEMM, OpenMP over samples for the elementwise parts);
// `serial` is a plain per-sample loop kept as the reference the tests and the
// benchmark compare against.
namespace nfq::kernels {

void check_inputs(const Network& net, const Matrix& inputs);
void check_targets(const Network& net, const Matrix& inputs, const Targets& targets);

namespace serial {
Matrix forward(const Network& net, const Matrix& inputs);
LossGradient backward_mse(const Network& net, const Matrix& inputs, const Targets& targets);
}  // namespace serial

namespace parallel {
Matrix forward(const Network& net, const Matrix& inputs);
LossGradient backward_mse(const Network& net, const Matrix& inputs, const Targets& targets);
}  // namespace parallel

inline double activate(Activation activation, double z) {
  switch (activation) {
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::tanh:
      return std::tanh(z);
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::linear:
      break;
  }
  return z;
}

// Derivative expressed through the activation's output y = f(z).
inline double activate_slope(Activation activation, double y) {
  switch (activation) {
    case Activation::relu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::sigmoid:
      return y * (1.0 - y);
    case Activation::linear:
      break;
  }
  return 1.0;
}

}  // namespace nfq::kernels
