#include "nfq/nfq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nfq/artifacts.hpp"
#include "nfq/errors.hpp"
#include "nfq/log.hpp"

namespace nfq {

std::string_view to_string(EpsilonKind kind) {
  return kind == EpsilonKind::linear ? "linear" : "constant";
}

EpsilonKind epsilon_kind_from_string(std::string_view name) {
  if (name == "linear") return EpsilonKind::linear;
  if (name == "constant") return EpsilonKind::constant;
  throw ConfigError("unknown epsilon schedule '" + std::string(name) + "'");
}

double epsilon_at(const EpsilonSchedule& s, int episode, int total_episodes) {
  if (s.kind == EpsilonKind::constant) return s.constant_value;
  const double horizon = s.decay_fraction * double(total_episodes);
  const double progress = horizon > 0.0 ? std::min(1.0, double(episode) / horizon) : 1.0;
  return s.start + (s.end - s.start) * progress;
}

namespace {

QStats stats_of(const Matrix& q) {
  QStats s;
  s.q_min = q.minCoeff();
  s.q_max = q.maxCoeff();
  s.q_avg = std::clamp(q.mean(), s.q_min, s.q_max);
  return s;
}

}  // namespace

PatternSet generate_pattern_set(const GrowingBatch& batch, const QModel& qf, double gamma,
                                int lookback, double action_bound) {
  if (batch.empty()) throw InputError("pattern generation on an empty batch");
  const Matrix states = stacked_states(batch, lookback, action_bound);
  const Matrix next = stacked_next_states(batch, lookback, action_bound);
  const Matrix q_next = qf.q_values_batch(next);
  const Vector best = q_next.colwise().minCoeff();

  const auto n = Eigen::Index(batch.transition_count());
  PatternSet p;
  p.next_q = stats_of(q_next);
  p.targets.values.resize(1, n);
  std::vector<std::size_t> actions(std::size_t(n), 0);
  if (qf.headed()) p.targets.heads.resize(std::size_t(n));

  Eigen::Index j = 0;
  for (const auto& ep : batch.episodes()) {
    for (const auto& tr : ep.transitions) {
      const double target = tr.terminal ? tr.cost : tr.cost + gamma * best[j];
      p.targets.values(0, j) = std::clamp(target, 0.0, 1.0);
      actions[std::size_t(j)] = tr.action_index;
      if (qf.headed()) p.targets.heads[std::size_t(j)] = Eigen::Index(tr.action_index);
      ++j;
    }
  }
  p.inputs = qf.encode_inputs(states, actions);
  return p;
}

QStats q_diagnostics(const QFunction& qf, const Matrix& probe_states, const ActionSet& actions) {
  if (probe_states.cols() == 0) throw InputError("q diagnostics need at least one probe state");
  return stats_of(qf.q_values_batch(probe_states, actions));
}

Network init_network(const AgentConfig& agent, Eigen::Index input_dim, std::uint64_t seed) {
  if (agent.init == InitKind::uniform) {
    return uniform_init(input_dim, agent.layers, agent.init_range, seed);
  }
  return glorot_init(input_dim, agent.layers, seed);
}

namespace {

OptimizerState make_optimizer(const AgentConfig& agent, const TrainSchedule& schedule,
                              const Network& net) {
  return agent.optimizer == OptimizerKind::rprop
             ? OptimizerState::make_rprop(net)
             : OptimizerState::make_adam(net, schedule.learning_rate);
}

QFunction initial_qf(const AgentConfig& agent, Rng& rng) {
  const Eigen::Index state_dim = stacked_dim(agent.lookback);
  return QFunction(agent.encoding,
                   init_network(agent, network_input_dim(agent.encoding, state_dim), rng.next()),
                   Normalizer::identity(state_dim), ActionSet(agent.actions), agent.action_bound);
}

}  // namespace

Learner::Learner(const AgentConfig& agent, const TrainSchedule& schedule,
                 std::uint64_t network_seed)
    : rng(network_seed),
      qf(initial_qf(agent, rng)),
      optimizer(make_optimizer(agent, schedule, qf.network())) {}

TdRound td_round(Learner& learner, const GrowingBatch& batch, const AgentConfig& agent,
                 const TrainSchedule& schedule) {
  PatternSet patterns =
      generate_pattern_set(batch, learner.qf, schedule.gamma, agent.lookback, agent.action_bound);
  int epochs = schedule.epochs_per_bellman;
  if (schedule.reinit_network_each_iteration) {
    learner.qf.set_network(init_network(agent, learner.qf.network().input_dim(), learner.rng.next()));
    learner.optimizer = make_optimizer(agent, schedule, learner.qf.network());
    epochs = schedule.epochs_if_reinit;
  }
  FitOptions options;
  options.epochs = epochs;
  options.batch_size = schedule.mini_batch > 0 ? schedule.mini_batch : patterns.inputs.cols();
  TdRound round;
  round.probe = patterns.next_q;
  round.fit = fit(learner.qf.network(), learner.optimizer, patterns.inputs, patterns.targets,
                  options, learner.rng);
  if (!learner.qf.network().all_finite()) {
    throw Error("network weights became non-finite during training");
  }
  return round;
}

Episode evaluate_greedy(Environment& env, const QFunction& qf, const CostSpec& cost, int steps,
                        int lookback, Rng& env_rng, const std::vector<bool>& mask) {
  GreedyQPolicy policy(qf, mask);
  RolloutOptions options;
  options.max_steps = steps;
  options.epsilon = 0.0;
  options.lookback = lookback;
  options.action_bound = qf.action_bound();
  options.start = StartSpec::center();
  Rng unused(0);
  return run_episode(env, policy, cost, options, unused, env_rng);
}

bool is_success(const StabilityReport& report, double success_cost) {
  return report.avg_cost < success_cost && report.N.has_value();
}

namespace {

// Stream for evaluation start jitter, kept apart from exploration starts so
// that evaluating does not change what the agent explores.
constexpr std::uint64_t kEvalStream = 0x5eed0e7a1ULL;

class Loop {
 public:
  Loop(const ExperimentConfig& config, const TrainHooks& hooks)
      : cfg_(config),
        hooks_(hooks),
        learner_(config.agent, config.schedule.train, config.seeds.network),
        eval_rng_(config.seeds.environment ^ kEvalStream) {
    DatasetMeta meta;
    meta.lookback = config.agent.lookback;
    meta.actions = ActionSet(config.agent.actions);
    meta.action_bound = config.agent.action_bound;
    meta.cost = config.cost;
    result_.batch = GrowingBatch(std::move(meta));
  }

  RunResult& result() { return result_; }
  GrowingBatch& batch() { return result_.batch; }
  Learner& learner() { return learner_; }

  void checkpoint(int n) {
    if (!hooks_.writer) return;
    CheckpointInfo info;
    info.episode = n;
    info.td_rounds = result_.td_rounds;
    info.lookback = cfg_.agent.lookback;
    info.cost_id = cfg_.cost.id();
    hooks_.writer->checkpoint(n, learner_.qf, info);
  }

  void maybe_refit(int episode) {
    const auto& cadence = cfg_.schedule.normalizer;
    const int freeze = cadence.freeze_episode(cfg_.schedule.episodes);
    Normalizer norm = learner_.qf.normalizer();
    if (norm.frozen) return;
    if (episode >= freeze) {
      norm.frozen = true;
      learner_.qf.set_normalizer(std::move(norm));
      return;
    }
    if (episode % cadence.refit_every != 0 || batch().transition_count() < 2) return;
    learner_.qf.set_normalizer(
        fit_normalizer(stacked_states(batch(), cfg_.agent.lookback, cfg_.agent.action_bound)));
  }

  QStats td_rounds(int count) {
    QStats last;
    for (int i = 0; i < count; ++i) {
      const TdRound r = td_round(learner_, batch(), cfg_.agent, cfg_.schedule.train);
      ++result_.td_rounds;
      last = r.probe;
      if (hooks_.writer) {
        hooks_.writer->qstats(result_.td_rounds, 0, r.probe);
        for (std::size_t e = 0; e < r.fit.outputs.size(); ++e) {
          const auto& o = r.fit.outputs[e];
          hooks_.writer->qstats(result_.td_rounds, int(e) + 1, QStats{o.min, o.avg, o.max});
        }
      }
      if (!r.fit.outputs.empty()) {
        const auto& o = r.fit.outputs.back();
        last = QStats{o.min, o.avg, o.max};
      }
    }
    return last;
  }

  // Returns true when the evaluation met the success criterion.
  bool evaluate(int number, Environment& env) {
    const Episode ep = evaluate_greedy(env, learner_.qf, cfg_.cost, cfg_.schedule.eval_steps,
                                       cfg_.agent.lookback, eval_rng_);
    const TrajectoryRecord record = TrajectoryRecord::from_episode(
        ep, "ep" + std::to_string(number), cfg_.seeds.environment);
    const StabilityReport report = stability_metrics(record);
    const CurvePoint point{number, report.avg_cost, report.steps, report.terminated};
    result_.curve.push_back(point);
    result_.reports.push_back(report);
    if (!result_.best_episode || report.avg_cost < result_.best_cost) {
      result_.best_episode = number;
      result_.best_cost = report.avg_cost;
    }
    const bool success = is_success(report, cfg_.schedule.success_cost);
    if (success && !result_.first_success) result_.first_success = number;
    if (hooks_.writer) {
      hooks_.writer->curve(point);
      hooks_.writer->metrics(number, report);
      hooks_.writer->eval(number, record);
    }
    last_point_ = point;
    return success;
  }

  std::optional<CurvePoint> take_point() {
    auto p = last_point_;
    last_point_.reset();
    return p;
  }

  void progress(int episode, double epsilon, const QStats& q) {
    if (hooks_.writer) hooks_.writer->flush();
    if (hooks_.progress) hooks_.progress(episode, epsilon, take_point(), q);
    last_point_.reset();
  }

  void finish() {
    result_.qf = learner_.qf;
    if (hooks_.writer) {
      hooks_.writer->batch(batch());
      hooks_.writer->flush();
    }
  }

  bool due_checkpoint(int n, bool last) const {
    const int every = cfg_.schedule.checkpoint_every;
    return last || (every > 0 && n % every == 0);
  }

 private:
  const ExperimentConfig& cfg_;
  const TrainHooks& hooks_;
  Learner learner_;
  Rng eval_rng_;
  RunResult result_;
  std::optional<CurvePoint> last_point_;
};

// Episode supplier for the growing-batch loop; nullopt stops the run.
using EpisodeSource = std::function<std::optional<Episode>(int episode, double epsilon)>;

RunResult growing_loop(Loop& loop, Environment* eval_env, const ExperimentConfig& cfg,
                       const EpisodeSource& source) {
  const int episodes = cfg.schedule.episodes;
  loop.checkpoint(0);
  try {
    for (int e = 0; e < episodes; ++e) {
      const double eps = epsilon_at(cfg.schedule.epsilon, e, episodes);
      std::optional<Episode> ep = source(e, eps);
      if (!ep) {
        loop.result().stopped_early = true;
        break;
      }
      loop.batch().append_episode(std::move(*ep));
      loop.maybe_refit(e);
      const QStats q = loop.td_rounds(cfg.schedule.train.bellman_updates_per_episode);

      const int number = e + 1;
      bool success = false;
      if (eval_env && cfg.schedule.eval_each_episode) success = loop.evaluate(number, *eval_env);
      const bool stop = success && cfg.schedule.stop_on_success;
      if (loop.due_checkpoint(number, number == episodes || stop)) loop.checkpoint(number);
      loop.progress(number, eps, q);
      if (stop) {
        loop.result().stopped_early = true;
        loop.result().diagnostic = "stopped after the first successful evaluation";
        break;
      }
    }
  } catch (const ProtocolError&) {
    loop.finish();
    throw;
  }
  loop.finish();
  return std::move(loop.result());
}

Episode explore(Environment& env, const QFunction& qf, const ExperimentConfig& cfg, int episode,
                double epsilon, Rng& explore_rng, Rng& env_rng) {
  GreedyQPolicy policy(qf);
  RolloutOptions options;
  options.max_steps = cfg.schedule.steps_per_episode;
  options.epsilon = epsilon;
  options.lookback = cfg.agent.lookback;
  options.action_bound = cfg.agent.action_bound;
  options.start = episode == 0 ? StartSpec::center() : StartSpec{cfg.env.start, {}};
  return run_episode(env, policy, cfg.cost, options, explore_rng, env_rng);
}

// Demonstrations are retried from fresh starts until one settles upright.
void add_demonstrations(Loop& loop, Environment& env, const ExperimentConfig& cfg, Rng& env_rng) {
  constexpr int kAttempts = 20;
  for (int d = 0; d < cfg.schedule.demonstrations; ++d) {
    SwingUpController controller(ActionSet(cfg.agent.actions), cfg.env.sim);
    RolloutOptions options;
    options.max_steps = cfg.schedule.steps_per_episode;
    options.lookback = cfg.agent.lookback;
    options.action_bound = cfg.agent.action_bound;
    Rng unused(0);
    Episode demo;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      demo = run_episode(env, controller, cfg.cost, options, unused, env_rng);
      if (stability_metrics(TrajectoryRecord::from_episode(demo)).N && !demo.terminated()) break;
    }
    loop.batch() = inject_demonstration(std::move(loop.batch()), std::move(demo));
  }
}

void check_log_actions(const GrowingBatch& log, const ExperimentConfig& cfg) {
  if (log.meta().actions.values() != cfg.agent.actions) {
    throw ConfigError("agent.actions: dataset was recorded with a different action set");
  }
  if (log.meta().action_bound != cfg.agent.action_bound) {
    throw ConfigError("agent.action_bound: dataset was recorded with a different action bound");
  }
}

}  // namespace

RunResult train_growing_batch(Environment& env, Environment* eval_env,
                              const ExperimentConfig& config, const TrainHooks& hooks) {
  validate(config);
  Loop loop(config, hooks);
  Rng explore_rng(config.seeds.exploration);
  Rng env_rng(config.seeds.environment);
  add_demonstrations(loop, env, config, env_rng);
  const EpisodeSource source = [&](int e, double eps) -> std::optional<Episode> {
    return explore(env, loop.learner().qf, config, e, eps, explore_rng, env_rng);
  };
  return growing_loop(loop, eval_env, config, source);
}

RunResult train_replay(const GrowingBatch& log, Environment* env, Environment* eval_env,
                       const ExperimentConfig& config, const ReplayOptions& options,
                       const TrainHooks& hooks) {
  validate(config);
  if (log.empty()) throw InputError("replay log is empty");
  check_log_actions(log, config);
  if (options.continue_live && !env) {
    throw ConfigError("continue_live needs an environment");
  }
  Loop loop(config, hooks);
  std::vector<const Episode*> pending;
  for (const auto& ep : log.episodes()) {
    if (ep.start == StartTag::demonstration) {
      loop.batch() = inject_demonstration(std::move(loop.batch()), ep);
    } else {
      pending.push_back(&ep);
    }
  }

  Rng explore_rng(config.seeds.exploration);
  Rng env_rng(config.seeds.environment);
  std::size_t next = 0;
  bool live = false;
  const EpisodeSource source = [&](int e, double eps) -> std::optional<Episode> {
    if (next < pending.size()) return *pending[next++];
    if (options.continue_live) {
      // The log ends wherever the recorded run stopped, so live play starts
      // from the center like a fresh run.
      const bool first = !live;
      if (first) {
        logger()->info("replay log exhausted after {} episodes; exploring live from episode {}",
                       pending.size(), e + 1);
        live = true;
      }
      return explore(*env, loop.learner().qf, config, first ? 0 : e, eps, explore_rng, env_rng);
    }
    loop.result().diagnostic = "replay log exhausted after " + std::to_string(pending.size()) +
                               " episodes, " + std::to_string(config.schedule.episodes) +
                               " configured";
    logger()->warn("{}", loop.result().diagnostic);
    return std::nullopt;
  };
  return growing_loop(loop, eval_env, config, source);
}

RunResult train_offline(const GrowingBatch& batch, Environment* eval_env,
                        const ExperimentConfig& config, const TrainHooks& hooks) {
  validate(config);
  if (batch.empty()) throw InputError("offline training on an empty batch");
  check_log_actions(batch, config);
  Loop loop(config, hooks);
  loop.batch() = batch;
  loop.batch().meta().lookback = config.agent.lookback;

  Normalizer norm = fit_normalizer(
      stacked_states(loop.batch(), config.agent.lookback, config.agent.action_bound));
  norm.frozen = true;
  loop.learner().qf.set_normalizer(std::move(norm));

  const int updates = config.schedule.offline_td_updates;
  const int every = config.schedule.eval_every_td;
  loop.checkpoint(0);
  for (int r = 1; r <= updates; ++r) {
    const QStats q = loop.td_rounds(1);
    if (r % every == 0) {
      if (eval_env) loop.evaluate(r, *eval_env);
      loop.checkpoint(r);
      loop.progress(r, 0.0, q);
    }
  }
  loop.finish();
  return std::move(loop.result());
}

}  // namespace nfq
