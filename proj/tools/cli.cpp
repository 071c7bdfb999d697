#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "nfq/artifacts.hpp"
#include "nfq/batch.hpp"
#include "nfq/checkpoint.hpp"
#include "nfq/config.hpp"
#include "nfq/env.hpp"
#include "nfq/errors.hpp"
#include "nfq/log.hpp"
#include "nfq/metrics.hpp"
#include "nfq/nfq.hpp"

namespace fs = std::filesystem;

namespace nfq::cli {

namespace {

struct Globals {
  std::string config_path;
  std::string preset;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

ExperimentConfig base_config(const Globals& g, const std::optional<ExperimentConfig>& fallback = {}) {
  ExperimentConfig c;
  if (!g.config_path.empty()) {
    c = load_config(g.config_path);
    if (!g.preset.empty()) throw ConfigError("--preset: cannot be combined with --config");
  } else if (!g.preset.empty()) {
    c = make_preset(g.preset);
  } else if (fallback) {
    c = *fallback;
  } else {
    c = make_preset("nfq2-default");
  }
  if (!g.out.empty()) c.io.out_dir = g.out;
  if (g.seed) c.seeds = {*g.seed, *g.seed + 1, *g.seed + 2};
  return c;
}

ProgressFn progress_printer(const std::string& tag) {
  return [tag](int episode, double eps, const std::optional<CurvePoint>& point, const QStats& q) {
    if (point) {
      logger()->info("{}ep {:4d}  eps {:.3f}  eval cost/step {:.5f} ({} steps{})  q [{:.4f} {:.4f} {:.4f}]",
                     tag, episode, eps, point->avg_cost, point->steps,
                     point->terminated ? ", endstop" : "", q.q_min, q.q_avg, q.q_max);
    } else {
      logger()->info("{}ep {:4d}  eps {:.3f}  q [{:.4f} {:.4f} {:.4f}]", tag, episode, eps,
                     q.q_min, q.q_avg, q.q_max);
    }
  };
}

CartPoleSim make_sim(const ExperimentConfig& c) {
  return CartPoleSim(c.env.sim, LatencyModel{c.env.latency_cycles}, c.env.start_jitter);
}

void report_run(const std::string& tag, const RunResult& r) {
  if (r.best_episode) {
    logger()->info("{}best greedy episode {} with cost/step {:.5f}; first success: {}", tag,
                   *r.best_episode, r.best_cost,
                   r.first_success ? std::to_string(*r.first_success) : std::string("none"));
  }
  if (!r.diagnostic.empty()) logger()->info("{}{}", tag, r.diagnostic);
}

// A dataset argument may name the JSONL file or a run directory containing data/batch.jsonl.
fs::path dataset_file(const std::string& data) {
  const fs::path p(data);
  if (fs::is_directory(p)) return p / "data" / "batch.jsonl";
  return p;
}

std::optional<ExperimentConfig> run_config_near(const std::string& data) {
  const fs::path p(data);
  const fs::path cfg = fs::is_directory(p) ? p / "config.json" : p.parent_path().parent_path() / "config.json";
  if (fs::exists(cfg)) return load_config(cfg);
  return std::nullopt;
}

int cmd_train(const Globals& g, std::optional<int> episodes, std::optional<int> steps,
              std::optional<double> lr, int sweep, int jobs, bool stop_on_success,
              std::optional<int> demonstrations) {
  ExperimentConfig c = base_config(g);
  if (episodes) c.schedule.episodes = *episodes;
  if (steps) c.schedule.steps_per_episode = *steps;
  if (lr) c.schedule.train.learning_rate = *lr;
  if (stop_on_success) c.schedule.stop_on_success = true;
  if (demonstrations) c.schedule.demonstrations = *demonstrations;
  validate(c);
  if (c.schedule.episodes < 1) throw ConfigError("schedule.episodes: train needs at least 1 episode");

  if (sweep <= 0) {
    CartPoleSim env = make_sim(c);
    CartPoleSim eval_env = make_sim(c);
    RunWriter writer(c.io.out_dir, c);
    TrainHooks hooks{&writer, progress_printer("")};
    const RunResult r = train_growing_batch(env, &eval_env, c, hooks);
    report_run("", r);
    return kOk;
  }

  std::vector<ExperimentConfig> members;
  for (int k = 0; k < sweep; ++k) {
    ExperimentConfig m = c;
    m.seeds = sweep_seeds(c.seeds, k);
    m.io.out_dir = (fs::path(c.io.out_dir) / ("seed" + std::to_string(k))).string();
    members.push_back(m);
  }
  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr failure;
  const auto worker = [&]() {
    for (;;) {
      std::size_t k = 0;
      {
        std::lock_guard lock(mutex);
        if (next >= members.size() || failure) return;
        k = next++;
      }
      try {
        const auto& m = members[k];
        CartPoleSim env = make_sim(m);
        CartPoleSim eval_env = make_sim(m);
        RunWriter writer(m.io.out_dir, m);
        const std::string tag = fmt::format("[seed{}] ", k);
        TrainHooks hooks{&writer, progress_printer(tag)};
        report_run(tag, train_growing_batch(env, &eval_env, m, hooks));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int j = 0; j < std::max(1, jobs); ++j) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return kOk;
}

void require_out(const Globals& g, const char* command) {
  if (g.out.empty()) {
    throw ConfigError(std::string("--out: required for ") + command +
                      " so the source run is never overwritten");
  }
}

int cmd_offline(const Globals& g, const std::string& data, std::optional<double> lr,
                std::optional<int> eval_every, std::optional<int> td_updates, bool no_eval) {
  require_out(g, "offline");
  ExperimentConfig c = base_config(g, run_config_near(data));
  c.schedule.train.learning_rate = lr.value_or(1e-4);
  if (eval_every) c.schedule.eval_every_td = *eval_every;
  if (td_updates) c.schedule.offline_td_updates = *td_updates;
  const GrowingBatch batch = load_batch(dataset_file(data), c.agent.lookback);
  c.cost = batch.meta().cost;
  validate(c);
  CartPoleSim eval_env = make_sim(c);
  RunWriter writer(c.io.out_dir, c);
  TrainHooks hooks{&writer, progress_printer("")};
  report_run("", train_offline(batch, no_eval ? nullptr : &eval_env, c, hooks));
  return kOk;
}

int cmd_replay(const Globals& g, const std::string& data, std::optional<std::uint64_t> net_seed,
               bool continue_live, bool no_eval, std::optional<int> episodes) {
  require_out(g, "replay");
  ExperimentConfig c = base_config(g, run_config_near(data));
  if (net_seed) c.seeds.network = *net_seed;
  if (episodes) c.schedule.episodes = *episodes;
  const GrowingBatch log = load_batch(dataset_file(data), c.agent.lookback);
  validate(c);
  CartPoleSim env = make_sim(c);
  CartPoleSim eval_env = make_sim(c);
  RunWriter writer(c.io.out_dir, c);
  TrainHooks hooks{&writer, progress_printer("")};
  ReplayOptions options;
  options.continue_live = continue_live;
  report_run("", train_replay(log, continue_live ? &env : nullptr, no_eval ? nullptr : &eval_env,
                              c, options, hooks));
  return kOk;
}

CostSpec parse_cost_arg(const std::string& text) {
  if (fs::exists(text)) {
    std::ifstream in(text);
    try {
      return cost_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("--cost: ") + e.what());
    }
  }
  if (!text.empty() && text.front() == '{') {
    try {
      return cost_from_json(Json::parse(text));
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("--cost: ") + e.what());
    }
  }
  return cost_from_json(Json{{"kind", text}});
}

int cmd_relabel(const std::string& data, const std::string& cost_text,
                std::optional<double> penalty, const std::string& out_path) {
  CostSpec cost = parse_cost_arg(cost_text);
  if (penalty) cost.action_penalty = *penalty;
  validate(cost);
  const GrowingBatch batch = load_batch(dataset_file(data));
  const GrowingBatch relabeled = relabel(batch, cost);
  save_batch(relabeled, out_path);
  logger()->info("relabeled {} transitions in {} episodes to {}", relabeled.transition_count(),
                 relabeled.episode_count(), cost.id());
  return kOk;
}

std::string cell(const std::optional<double>& v, int precision = 3) {
  return v ? fmt::format("{:.{}f}", *v, precision) : std::string();
}

std::string summary_cell(const MetricSummary& m, int precision = 3) {
  if (!m.mean) return "";
  return fmt::format("{:.{}f}±{:.{}f}", *m.mean, precision, *m.std, precision);
}

int cmd_eval(const Globals& g, const std::string& checkpoint, int n_episodes, int steps,
             const std::string& start, const std::string& mask_text,
             const std::string& extend_text) {
  Checkpoint cp = load_checkpoint(checkpoint);
  QFunction qf = cp.qf;
  if (!extend_text.empty()) qf = extend_action_set(qf, ActionSet(parse_list(extend_text, "--extend-actions")));
  std::vector<bool> mask;
  if (!mask_text.empty()) {
    const auto removed = parse_list(mask_text, "--mask-actions");
    mask = qf.actions().mask_excluding(removed);
  }

  const fs::path run_dir = fs::path(checkpoint).parent_path().parent_path();
  std::optional<ExperimentConfig> near;
  if (fs::exists(run_dir / "config.json")) near = load_config(run_dir / "config.json");
  ExperimentConfig c = base_config(g, near);
  c.env.sim.force_bound = std::max(c.env.sim.force_bound, qf.action_bound());
  CartPoleSim env = make_sim(c);
  Rng env_rng(c.seeds.environment);

  if (start != "center_hanging" && start != "random") {
    throw ConfigError("--start: expected center_hanging or random");
  }
  std::vector<StabilityReport> reports;
  std::cout << metrics_csv_header() << '\n';
  for (int k = 0; k < n_episodes; ++k) {
    RolloutOptions options;
    options.max_steps = steps;
    options.lookback = cp.info.lookback;
    options.action_bound = qf.action_bound();
    if (start == "random") {
      SimState s;
      s.x = env_rng.uniform(-1.0, 1.0);
      s.alpha = env_rng.uniform(-std::numbers::pi, std::numbers::pi);
      options.start = StartSpec::at(s);
    }
    GreedyQPolicy policy(qf, mask);
    Rng unused(0);
    const Episode ep = run_episode(env, policy, c.cost, options, unused, env_rng);
    const StabilityReport r = stability_metrics(TrajectoryRecord::from_episode(ep, checkpoint, c.seeds.environment));
    std::cout << metrics_csv_row(k + 1, r) << '\n';
    reports.push_back(r);
  }
  const ReportSummary s = summarize(reports);
  std::cout << fmt::format("mean±std,{},{},{},{},{},{},{},{}/{}\n", summary_cell(s.n, 1),
                           summary_cell(s.N, 1), summary_cell(s.e_inf), summary_cell(s.e_T),
                           summary_cell(s.e_T_mean), summary_cell(s.avg_cost, 5),
                           summary_cell(s.steps, 1), s.terminated, s.count);
  return kOk;
}

int cmd_inspect(const std::string& checkpoint, const std::string& data) {
  const Checkpoint cp = load_checkpoint(checkpoint);
  std::cout << cp.manifest.dump(2) << '\n';
  if (!data.empty()) {
    const GrowingBatch batch = load_batch(dataset_file(data), cp.info.lookback);
    const Matrix states = stacked_states(batch, cp.info.lookback, cp.qf.action_bound());
    const QStats q = q_diagnostics(cp.qf, states, cp.qf.actions());
    std::cout << fmt::format("q over {} states x {} actions: min {:.6f} avg {:.6f} max {:.6f}\n",
                             states.cols(), cp.qf.actions().size(), q.q_min, q.q_avg, q.q_max);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Neural fitted Q iteration for cart-pole swing-up"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config JSON");
  app.add_option("--preset", g.preset, "Named preset instead of a config file");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "Base seed: network N, exploration N+1, environment N+2");
  app.add_flag("--quiet", g.quiet, "Only warnings and errors");

  auto* train = app.add_subcommand("train", "Growing-batch training on the simulator");
  std::optional<int> episodes, steps, demos;
  std::optional<double> lr;
  int sweep = 0;
  int jobs = 1;
  bool stop_on_success = false;
  train->add_option("--episodes", episodes);
  train->add_option("--steps", steps, "Steps per explorative episode");
  train->add_option("--lr", lr);
  train->add_option("--seed-sweep", sweep, "Independent runs with shifted seeds");
  train->add_option("--jobs", jobs, "Parallel workers for a sweep");
  train->add_flag("--stop-on-success", stop_on_success);
  train->add_option("--demonstrations", demos, "Injected swing-up demonstrations");

  auto* offline = app.add_subcommand("offline", "Train on a fixed dataset without exploring");
  std::string data;
  std::optional<int> eval_every, td_updates;
  bool no_eval = false;
  offline->add_option("--data", data, "Dataset JSONL or run directory")->required();
  offline->add_option("--lr", lr, "Learning rate (default 1e-4)");
  offline->add_option("--eval-every", eval_every, "TD updates between evaluations");
  offline->add_option("--td-updates", td_updates);
  offline->add_flag("--no-eval", no_eval);

  auto* replay = app.add_subcommand("replay", "Re-run the growing batch from a logged run");
  std::optional<std::uint64_t> net_seed;
  bool continue_live = false;
  replay->add_option("--data", data, "Dataset JSONL or run directory")->required();
  replay->add_option("--net-seed", net_seed);
  replay->add_option("--episodes", episodes);
  replay->add_flag("--continue-live", continue_live);
  replay->add_flag("--no-eval", no_eval);

  auto* relabel_cmd = app.add_subcommand("relabel", "Recompute costs with another cost function");
  std::string cost_text, out_file;
  std::optional<double> penalty;
  relabel_cmd->add_option("--data", data)->required();
  relabel_cmd->add_option("--cost", cost_text, "Cost kind, JSON object or JSON file")->required();
  relabel_cmd->add_option("--action-penalty", penalty);
  relabel_cmd->add_option("--out-file", out_file)->required();

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string checkpoint, start = "center_hanging", mask_text, extend_text;
  int eval_episodes = 5;
  int eval_steps = 400;
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--episodes", eval_episodes);
  eval->add_option("--steps", eval_steps);
  eval->add_option("--start", start, "center_hanging or random");
  eval->add_option("--mask-actions", mask_text, "Comma separated actions to remove");
  eval->add_option("--extend-actions", extend_text, "Comma separated replacement action set");

  auto* inspect = app.add_subcommand("inspect", "Print a checkpoint manifest and q-statistics");
  inspect->add_option("--checkpoint", checkpoint)->required();
  inspect->add_option("--data", data, "Dataset for q-statistics");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  logger()->set_level(g.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*train) {
      if (episodes && *episodes < 1) throw ConfigError("schedule.episodes: must be >= 1");
      return cmd_train(g, episodes, steps, lr, sweep, jobs, stop_on_success, demos);
    }
    if (*offline) return cmd_offline(g, data, lr, eval_every, td_updates, no_eval);
    if (*replay) return cmd_replay(g, data, net_seed, continue_live, no_eval, episodes);
    if (*relabel_cmd) return cmd_relabel(data, cost_text, penalty, out_file);
    if (*eval) return cmd_eval(g, checkpoint, eval_episodes, eval_steps, start, mask_text, extend_text);
    if (*inspect) return cmd_inspect(checkpoint, data);
  } catch (const ConfigError& e) {
    logger()->error("config error: {}", e.what());
    return kConfigError;
  } catch (const ParseError& e) {
    logger()->error("parse error: {}", e.what());
    return kIoError;
  } catch (const IoError& e) {
    logger()->error("i/o error: {}", e.what());
    return kIoError;
  } catch (const UnsupportedOperation& e) {
    logger()->error("unsupported: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    logger()->error("aborted: {}", e.what());
    return kRuntimeAbort;
  }
  return kOk;
}

}  // namespace nfq::cli
