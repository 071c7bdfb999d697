#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nfq/batch.hpp"
#include "nfq/config.hpp"
#include "nfq/env.hpp"
#include "nfq/metrics.hpp"
#include "nfq/optim.hpp"
#include "nfq/qfunc.hpp"
#include "nfq/rng.hpp"
#include "nfq/schedule.hpp"

namespace nfq {

class RunWriter;

struct QStats {
  double q_min = 0.0;
  double q_avg = 0.0;
  double q_max = 0.0;
};

// Bellman sweep output: one supervised pattern per transition.
struct PatternSet {
  Matrix inputs;
  Targets targets;
  QStats next_q;  // over every next state and action, before training
};

// q_target = c + gamma * min_a Q(s', a), clipped to [0, 1]; terminal
// transitions use the cost alone.
PatternSet generate_pattern_set(const GrowingBatch& batch, const QModel& qf, double gamma,
                                int lookback, double action_bound);

QStats q_diagnostics(const QFunction& qf, const Matrix& probe_states, const ActionSet& actions);

Network init_network(const AgentConfig& agent, Eigen::Index input_dim, std::uint64_t seed);

// Learner state carried across TD rounds.
struct Learner {
  Rng rng;  // network init and shuffling
  QFunction qf;
  OptimizerState optimizer;

  Learner(const AgentConfig& agent, const TrainSchedule& schedule, std::uint64_t network_seed);
};

struct TdRound {
  QStats probe;
  FitTrace fit;
};

// One pattern-set generation followed by a fit; with reinit a fresh network
// (and optimizer) is trained for epochs_if_reinit epochs instead.
TdRound td_round(Learner& learner, const GrowingBatch& batch, const AgentConfig& agent,
                 const TrainSchedule& schedule);

struct CurvePoint {
  int episode = 0;
  double avg_cost = 0.0;
  int steps = 0;
  bool terminated = false;
};

struct RunResult {
  QFunction qf;
  GrowingBatch batch;
  std::vector<CurvePoint> curve;
  std::vector<StabilityReport> reports;
  std::optional<int> best_episode;  // lowest greedy avg cost
  double best_cost = 1.0;
  std::optional<int> first_success;  // first eval meeting the success criterion
  int td_rounds = 0;
  bool stopped_early = false;
  std::string diagnostic;
};

// Per-episode progress hook (episode, epsilon, eval point or nothing, last probe).
using ProgressFn =
    std::function<void(int, double, const std::optional<CurvePoint>&, const QStats&)>;

struct TrainHooks {
  RunWriter* writer = nullptr;
  ProgressFn progress;
};

// Greedy evaluation from center-hanging.
Episode evaluate_greedy(Environment& env, const QFunction& qf, const CostSpec& cost, int steps,
                        int lookback, Rng& env_rng, const std::vector<bool>& mask = {});

bool is_success(const StabilityReport& report, double success_cost);

RunResult train_growing_batch(Environment& env, Environment* eval_env,
                              const ExperimentConfig& config, const TrainHooks& hooks = {});

RunResult train_offline(const GrowingBatch& batch, Environment* eval_env,
                        const ExperimentConfig& config, const TrainHooks& hooks = {});

struct ReplayOptions {
  bool continue_live = false;
};

// Growing-batch loop fed from a log. Demonstration episodes of the log are
// injected up front, the others are consumed one per iteration. With
// continue_live and an environment, exploration takes over once the log is
// exhausted.
RunResult train_replay(const GrowingBatch& log, Environment* env, Environment* eval_env,
                       const ExperimentConfig& config, const ReplayOptions& options = {},
                       const TrainHooks& hooks = {});

}  // namespace nfq
