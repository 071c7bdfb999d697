#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nfq/net.hpp"
#include "nfq/rng.hpp"

namespace nfq {

enum class OptimizerKind { adam, rprop };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Rprop- constants (Riedmiller & Braun; Igel & Huesken naming).
struct RpropParams {
  double increase = 1.2;
  double decrease = 0.5;
  double initial_step = 0.1;
  double min_step = 1e-6;
  double max_step = 50.0;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  std::uint64_t steps = 0;
  AdamParams adam;
  RpropParams rprop;
  // adam: first / second moments. rprop: step sizes / previous gradients.
  Gradients first;
  Gradients second;

  static OptimizerState make_adam(const Network& net, double learning_rate, AdamParams params = {});
  static OptimizerState make_rprop(const Network& net, RpropParams params = {});
};

void adam_step(OptimizerState& state, Network& net, const Gradients& gradients);
void rprop_step(OptimizerState& state, Network& net, const Gradients& gradients);
void optimizer_step(OptimizerState& state, Network& net, const Gradients& gradients);

struct FitOptions {
  int epochs = 8;
  Eigen::Index batch_size = 2048;
};

// Range of network outputs on supervised entries seen during one epoch.
struct OutputRange {
  double min = 0.0;
  double avg = 0.0;
  double max = 0.0;
};

struct FitTrace {
  std::vector<double> loss;          // per epoch, sample-weighted mean of batch losses
  std::vector<OutputRange> outputs;  // per epoch
};

// Mini-batch training: every epoch visits each sample once in a Fisher-Yates
// order drawn from `rng`; the final partial batch is trained on.
FitTrace fit(Network& net, OptimizerState& optimizer, const Matrix& inputs, const Targets& targets,
             const FitOptions& options, Rng& rng);

// Mini-batch sizes for one epoch over `samples` items.
std::vector<Eigen::Index> batch_partition(Eigen::Index samples, Eigen::Index batch_size);

}  // namespace nfq
