#include <string>

#include "nfq/errors.hpp"
#include "nfq/kernels.hpp"

namespace nfq::kernels {

void check_inputs(const Network& net, const Matrix& inputs) {
  if (net.layers().empty()) throw ShapeError("network has no layers");
  if (inputs.rows() != net.input_dim()) {
    throw ShapeError("input dimension " + std::to_string(inputs.rows()) +
                     " does not match network fan_in " + std::to_string(net.input_dim()));
  }
}

void check_targets(const Network& net, const Matrix& inputs, const Targets& targets) {
  check_inputs(net, inputs);
  if (targets.values.cols() != inputs.cols()) {
    throw ShapeError("target batch size " + std::to_string(targets.values.cols()) +
                     " does not match input batch size " + std::to_string(inputs.cols()));
  }
  if (targets.values.rows() != net.output_dim()) {
    throw ShapeError("target dimension " + std::to_string(targets.values.rows()) +
                     " does not match network output " + std::to_string(net.output_dim()));
  }
  if (!targets.heads.empty()) {
    if (static_cast<Eigen::Index>(targets.heads.size()) != inputs.cols()) {
      throw ShapeError("one output head per sample required");
    }
    for (const auto head : targets.heads) {
      if (head < 0 || head >= net.output_dim()) throw ShapeError("output head out of range");
    }
  }
  if (inputs.cols() == 0) throw ShapeError("empty batch");
}

}  // namespace nfq::kernels
