#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nfq/costs.hpp"
#include "nfq/env.hpp"
#include "nfq/json.hpp"
#include "nfq/net.hpp"
#include "nfq/optim.hpp"
#include "nfq/qfunc.hpp"
#include "nfq/schedule.hpp"

namespace nfq {

struct EnvConfig {
  SimParams sim;
  int latency_cycles = 0;
  StartMode start = StartMode::continue_from_last;
  double start_jitter = CartPoleSim::kStartJitter;

  bool operator==(const EnvConfig&) const = default;
};

enum class InitKind { glorot, uniform };

std::string_view to_string(InitKind kind);
InitKind init_kind_from_string(std::string_view name);

struct AgentConfig {
  ActionEncoding encoding = ActionEncoding::action_in_input;
  std::vector<LayerSpec> layers;  // hidden layers plus the output layer
  InitKind init = InitKind::glorot;
  double init_range = 0.5;  // uniform only
  OptimizerKind optimizer = OptimizerKind::adam;
  int lookback = 1;
  std::vector<double> actions;
  double action_bound = 10.0;
  // Action set planned for evaluation; needs action_in_input.
  std::vector<double> extend_actions;

  bool operator==(const AgentConfig&) const = default;
};

struct NormalizerCadence {
  int refit_every = 10;
  double refit_fraction = 0.5;  // refit while episode < fraction * episodes
  int refit_until = -1;         // >= 0 overrides refit_fraction

  // First episode index at which the normalizer stays frozen.
  int freeze_episode(int episodes) const;

  bool operator==(const NormalizerCadence&) const = default;
};

struct ScheduleConfig {
  TrainSchedule train;
  EpsilonSchedule epsilon;
  int episodes = 200;
  int steps_per_episode = 400;
  int eval_steps = 400;
  bool eval_each_episode = true;
  int eval_every_td = 4;           // offline mode
  int offline_td_updates = 400;    // offline mode
  int checkpoint_every = 1;        // episodes between checkpoints
  int demonstrations = 0;          // swing-up demonstrations injected before episode 0
  NormalizerCadence normalizer;
  bool stop_on_success = false;
  double success_cost = 0.005;

  bool operator==(const ScheduleConfig&) const = default;
};

struct SeedConfig {
  std::uint64_t network = 1;
  std::uint64_t exploration = 2;
  std::uint64_t environment = 3;

  bool operator==(const SeedConfig&) const = default;
};

struct IoConfig {
  std::string out_dir = "runs/nfq";
  std::string resume;

  bool operator==(const IoConfig&) const = default;
};

struct ExperimentConfig {
  std::string preset = "nfq2-default";
  EnvConfig env;
  AgentConfig agent;
  ScheduleConfig schedule;
  CostSpec cost;
  SeedConfig seeds;
  IoConfig io;

  ActionSet action_set() const { return ActionSet(agent.actions); }

  bool operator==(const ExperimentConfig&) const = default;
};

// Names accepted by make_preset.
std::vector<std::string> preset_names();
ExperimentConfig make_preset(const std::string& name);

// Cross-field checks; ConfigError messages start with the field path.
void validate(const ExperimentConfig& config);

Json config_to_json(const ExperimentConfig& config);
// Every field is optional on input and resolved against `base` (default:
// the preset named in the document, or nfq2-default).
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base);

// Parses and validates; IoError when unreadable, ConfigError otherwise.
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

// Seed offsets for sweep member k: every stream shifted by 1000 * k.
SeedConfig sweep_seeds(const SeedConfig& base, int k);

}  // namespace nfq
