#include "nfq/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "nfq/errors.hpp"
#include "nfq/log.hpp"

namespace nfq {

std::string_view to_string(InitKind kind) {
  return kind == InitKind::glorot ? "glorot" : "uniform";
}

InitKind init_kind_from_string(std::string_view name) {
  if (name == "glorot") return InitKind::glorot;
  if (name == "uniform") return InitKind::uniform;
  throw ConfigError("unknown init kind '" + std::string(name) + "'");
}

int NormalizerCadence::freeze_episode(int episodes) const {
  if (refit_until >= 0) return refit_until;
  return int(std::ceil(refit_fraction * double(episodes)));
}

namespace {

std::vector<LayerSpec> nfq2_layers(int outputs) {
  return {{256, Activation::relu},
          {256, Activation::relu},
          {100, Activation::tanh},
          {outputs, Activation::sigmoid}};
}

std::vector<LayerSpec> small_layers() {
  return {{20, Activation::tanh}, {20, Activation::tanh}, {1, Activation::sigmoid}};
}

ExperimentConfig nfq2_default() {
  ExperimentConfig c;
  c.preset = "nfq2-default";
  c.agent.layers = nfq2_layers(1);
  c.agent.actions = default_sim_actions().values();
  c.cost = CostSpec::shaped();
  return c;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"nfq2-default",    "nfq-legacy",    "dqn-like",
          "actions-in-output", "time-optimal", "shaped-in-margin",
          "small-network",   "stack-N",       "eps-0",
          "eps-0.1",         "lr-1e-4",       "fresh-network",
          "normalize-every-episode", "normalize-until-50", "episode-200"};
}

ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig c = nfq2_default();
  c.preset = name;
  if (name == "nfq2-default") return c;
  if (name == "nfq-legacy") {
    c.agent.layers = small_layers();
    c.agent.init = InitKind::uniform;
    c.agent.init_range = 0.5;
    c.agent.optimizer = OptimizerKind::rprop;
    c.schedule.train.mini_batch = 0;
    c.schedule.train.gamma = 1.0;
    c.schedule.train.reinit_network_each_iteration = true;
    c.schedule.train.epochs_if_reinit = 300;
    c.schedule.train.bellman_updates_per_episode = 1;
    c.schedule.epsilon.kind = EpsilonKind::constant;
    c.schedule.epsilon.constant_value = 0.1;
    return c;
  }
  if (name == "dqn-like" || name == "actions-in-output") {
    c.agent.encoding = ActionEncoding::action_per_output;
    c.agent.layers = nfq2_layers(int(c.agent.actions.size()));
    return c;
  }
  if (name == "time-optimal") {
    c.cost = CostSpec::time_optimal();
    return c;
  }
  if (name == "shaped-in-margin") {
    c.cost = CostSpec::shaped_in_margin();
    return c;
  }
  if (name == "small-network") {
    c.agent.layers = small_layers();
    return c;
  }
  if (starts_with(name, "stack-")) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(name.substr(6), &used);
      if (used != name.size() - 6 || n < 1) throw std::invalid_argument(name);
      c.agent.lookback = n;
    } catch (const std::exception&) {
      throw ConfigError("preset: stack-N needs a positive integer N, got '" + name + "'");
    }
    return c;
  }
  if (name == "eps-0" || name == "eps-0.1") {
    c.schedule.epsilon.kind = EpsilonKind::constant;
    c.schedule.epsilon.constant_value = name == "eps-0" ? 0.0 : 0.1;
    return c;
  }
  if (name == "lr-1e-4") {
    c.schedule.train.learning_rate = 1e-4;
    return c;
  }
  if (name == "fresh-network") {
    c.schedule.train.reinit_network_each_iteration = true;
    c.schedule.train.epochs_if_reinit = 120;
    c.schedule.train.bellman_updates_per_episode = 1;
    return c;
  }
  if (name == "normalize-every-episode") {
    c.schedule.normalizer.refit_every = 1;
    c.schedule.normalizer.refit_fraction = 1.0;
    return c;
  }
  if (name == "normalize-until-50") {
    c.schedule.normalizer.refit_until = 50;
    return c;
  }
  if (name == "episode-200") {
    c.schedule.steps_per_episode = 200;
    return c;
  }
  throw ConfigError("preset: unknown preset '" + name + "'");
}

void validate(const TrainSchedule& s) {
  if (s.bellman_updates_per_episode < 1) {
    throw ConfigError("schedule.train.bellman_updates_per_episode: must be >= 1");
  }
  if (s.epochs_per_bellman < 0) throw ConfigError("schedule.train.epochs_per_bellman: must be >= 0");
  if (s.mini_batch < 0) throw ConfigError("schedule.train.mini_batch: must be >= 0 (0 = full batch)");
  if (!(s.gamma >= 0.0 && s.gamma <= 1.0)) throw ConfigError("schedule.train.gamma: must lie in [0, 1]");
  if (!(s.learning_rate > 0.0)) throw ConfigError("schedule.train.learning_rate: must be positive");
  if (s.epochs_if_reinit < 1) throw ConfigError("schedule.train.epochs_if_reinit: must be >= 1");
  if (s.gamma >= 1.0 && !s.reinit_network_each_iteration && !s.allow_undiscounted) {
    throw ConfigError(
        "schedule.train.gamma: 1.0 needs reinit_network_each_iteration or allow_undiscounted");
  }
}

void validate(const EpsilonSchedule& e) {
  for (const double v : {e.start, e.end, e.constant_value}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("schedule.epsilon: values must lie in [0, 1]");
  }
  if (e.kind == EpsilonKind::linear && e.start < e.end) {
    throw ConfigError("schedule.epsilon: linear schedule needs start >= end");
  }
  if (!(e.decay_fraction > 0.0 && e.decay_fraction <= 1.0)) {
    throw ConfigError("schedule.epsilon.decay_fraction: must lie in (0, 1]");
  }
}

void validate(const ExperimentConfig& c) {
  try {
    c.env.sim.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("env.sim: ") + e.what());
  }
  if (c.env.latency_cycles < 0) throw ConfigError("env.latency_cycles: must be >= 0");
  if (c.env.start == StartMode::explicit_state) {
    throw ConfigError("env.start: explicit start states are only available programmatically");
  }
  if (!(c.env.start_jitter >= 0.0 && c.env.start_jitter <= CartPoleSim::kStartJitter)) {
    throw ConfigError("env.start_jitter: must lie in [0, 0.05]");
  }

  const auto& a = c.agent;
  if (a.layers.empty()) throw ConfigError("agent.layers: at least one layer required");
  for (const auto& l : a.layers) {
    if (l.width < 1) throw ConfigError("agent.layers: widths must be positive");
  }
  if (a.lookback < 1) throw ConfigError("agent.lookback: must be >= 1");
  ActionSet actions;
  try {
    actions = ActionSet(a.actions);
  } catch (const InputError& e) {
    throw ConfigError(std::string("agent.actions: ") + e.what());
  }
  if (!(a.action_bound > 0.0) || actions.max_magnitude() > a.action_bound) {
    throw ConfigError("agent.action_bound: must be positive and cover every action");
  }
  if (actions.max_magnitude() > c.env.sim.force_bound) {
    throw ConfigError("agent.actions: exceed env.sim.force_bound");
  }
  const int outputs = a.layers.back().width;
  if (a.encoding == ActionEncoding::action_in_input && outputs != 1) {
    throw ConfigError("agent.layers: action_in_input needs a single output");
  }
  if (a.encoding == ActionEncoding::action_per_output && outputs != int(actions.size())) {
    throw ConfigError("agent.layers: action_per_output needs one output per action");
  }
  if (a.init == InitKind::uniform && !(a.init_range > 0.0)) {
    throw ConfigError("agent.init_range: must be positive");
  }
  if (!a.extend_actions.empty()) {
    if (a.encoding == ActionEncoding::action_per_output) {
      throw ConfigError("agent.extend_actions: not available with action_per_output");
    }
    try {
      const ActionSet ext(a.extend_actions);
      if (ext.max_magnitude() > a.action_bound) {
        throw ConfigError("agent.extend_actions: exceed agent.action_bound");
      }
    } catch (const InputError& e) {
      throw ConfigError(std::string("agent.extend_actions: ") + e.what());
    }
  }

  const auto& s = c.schedule;
  validate(s.train);
  validate(s.epsilon);
  if (s.episodes < 0) throw ConfigError("schedule.episodes: must be >= 0");
  if (s.steps_per_episode < 1) throw ConfigError("schedule.steps_per_episode: must be >= 1");
  if (s.eval_steps < 1) throw ConfigError("schedule.eval_steps: must be >= 1");
  if (s.eval_every_td < 1) throw ConfigError("schedule.eval_every_td: must be >= 1");
  if (s.offline_td_updates < 1) throw ConfigError("schedule.offline_td_updates: must be >= 1");
  if (s.checkpoint_every < 0) throw ConfigError("schedule.checkpoint_every: must be >= 0");
  if (s.demonstrations < 0) throw ConfigError("schedule.demonstrations: must be >= 0");
  if (s.normalizer.refit_every < 1) throw ConfigError("schedule.normalizer.refit_every: must be >= 1");
  if (!(s.normalizer.refit_fraction >= 0.0 && s.normalizer.refit_fraction <= 1.0)) {
    throw ConfigError("schedule.normalizer.refit_fraction: must lie in [0, 1]");
  }
  if (!(s.success_cost > 0.0)) throw ConfigError("schedule.success_cost: must be positive");

  validate(c.cost);
  if (s.train.gamma < 1.0) {
    if (!satisfies_safety_relation(c.cost, s.train.gamma)) {
      throw ConfigError("cost.step_cost: step_cost / (1 - gamma) = " +
                        std::to_string(c.cost.step_cost / (1.0 - s.train.gamma)) +
                        " must stay below the terminal cost " +
                        std::to_string(c.cost.terminal_cost));
    }
  } else {
    logger()->warn("gamma = 1.0: discounted returns are unbounded and the Q-function may "
                   "diverge; only sound with a fresh network each iteration");
  }
}

namespace {

// Reads optional members of one JSON object, reporting errors with the field path.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  template <typename E, typename Parse>
  void read_enum(const char* key, E& out, Parse parse) {
    std::string name;
    bool present = j_.contains(key);
    read(key, name);
    if (!present) return;
    try {
      out = parse(name);
    } catch (const Error& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), field(key));
  }

  const Json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  bool has(const char* key) const { return j_.contains(key); }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  // Unknown keys are almost always typos.
  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(field(item.key().c_str()) + ": unknown field");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json sim_to_json(const SimParams& p) {
  return {{"gravity", p.gravity},         {"cart_mass", p.cart_mass}, {"pole_mass", p.pole_mass},
          {"half_length", p.half_length}, {"force_bound", p.force_bound}, {"tau", p.tau},
          {"x_bound", p.x_bound}};
}

}  // namespace

Json config_to_json(const ExperimentConfig& c) {
  const auto& t = c.schedule.train;
  const auto& e = c.schedule.epsilon;
  const auto& s = c.schedule;
  return Json{
      {"preset", c.preset},
      {"env",
       {{"sim", sim_to_json(c.env.sim)},
        {"latency_cycles", c.env.latency_cycles},
        {"start", std::string(to_string(c.env.start))},
        {"start_jitter", c.env.start_jitter}}},
      {"agent",
       {{"encoding", std::string(to_string(c.agent.encoding))},
        {"layers", layers_to_json(c.agent.layers)},
        {"init", std::string(to_string(c.agent.init))},
        {"init_range", c.agent.init_range},
        {"optimizer", std::string(to_string(c.agent.optimizer))},
        {"lookback", c.agent.lookback},
        {"actions", c.agent.actions},
        {"action_bound", c.agent.action_bound},
        {"extend_actions", c.agent.extend_actions}}},
      {"schedule",
       {{"train",
         {{"bellman_updates_per_episode", t.bellman_updates_per_episode},
          {"epochs_per_bellman", t.epochs_per_bellman},
          {"mini_batch", t.mini_batch},
          {"gamma", t.gamma},
          {"learning_rate", t.learning_rate},
          {"reinit_network_each_iteration", t.reinit_network_each_iteration},
          {"epochs_if_reinit", t.epochs_if_reinit},
          {"allow_undiscounted", t.allow_undiscounted}}},
        {"epsilon",
         {{"kind", std::string(to_string(e.kind))},
          {"start", e.start},
          {"end", e.end},
          {"decay_fraction", e.decay_fraction},
          {"constant_value", e.constant_value}}},
        {"episodes", s.episodes},
        {"steps_per_episode", s.steps_per_episode},
        {"eval_steps", s.eval_steps},
        {"eval_each_episode", s.eval_each_episode},
        {"eval_every_td", s.eval_every_td},
        {"offline_td_updates", s.offline_td_updates},
        {"checkpoint_every", s.checkpoint_every},
        {"demonstrations", s.demonstrations},
        {"normalizer",
         {{"refit_every", s.normalizer.refit_every},
          {"refit_fraction", s.normalizer.refit_fraction},
          {"refit_until", s.normalizer.refit_until}}},
        {"stop_on_success", s.stop_on_success},
        {"success_cost", s.success_cost}}},
      {"cost", cost_to_json(c.cost)},
      {"seeds",
       {{"network", c.seeds.network},
        {"exploration", c.seeds.exploration},
        {"environment", c.seeds.environment}}},
      {"io", {{"out_dir", c.io.out_dir}, {"resume", c.io.resume}}}};
}

ExperimentConfig config_from_json(const Json& j) {
  std::string preset = "nfq2-default";
  if (j.is_object() && j.contains("preset")) {
    if (!j.at("preset").is_string()) throw ConfigError("preset: wrong type");
    preset = j.at("preset").get<std::string>();
  }
  return config_from_json(j, make_preset(preset));
}

ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base) {
  ExperimentConfig c = base;
  Section root(j, "");
  root.read("preset", c.preset);

  if (auto env = root.child("env")) {
    if (auto sim = env->child("sim")) {
      auto& p = c.env.sim;
      sim->read("gravity", p.gravity);
      sim->read("cart_mass", p.cart_mass);
      sim->read("pole_mass", p.pole_mass);
      sim->read("half_length", p.half_length);
      sim->read("force_bound", p.force_bound);
      sim->read("tau", p.tau);
      sim->read("x_bound", p.x_bound);
      sim->finish();
    }
    env->read("latency_cycles", c.env.latency_cycles);
    env->read_enum("start", c.env.start, start_mode_from_string);
    env->read("start_jitter", c.env.start_jitter);
    env->finish();
  }

  if (auto agent = root.child("agent")) {
    auto& a = c.agent;
    agent->read_enum("encoding", a.encoding, encoding_from_string);
    if (agent->has("layers")) {
      try {
        a.layers = layers_from_json(agent->raw("layers"));
      } catch (const std::exception& e) {
        throw ConfigError(agent->field("layers") + ": " + e.what());
      }
    }
    agent->read_enum("init", a.init, init_kind_from_string);
    agent->read("init_range", a.init_range);
    agent->read_enum("optimizer", a.optimizer, optimizer_from_string);
    agent->read("lookback", a.lookback);
    agent->read("actions", a.actions);
    agent->read("action_bound", a.action_bound);
    agent->read("extend_actions", a.extend_actions);
    agent->finish();
  }

  if (auto sched = root.child("schedule")) {
    auto& s = c.schedule;
    if (auto train = sched->child("train")) {
      auto& t = s.train;
      train->read("bellman_updates_per_episode", t.bellman_updates_per_episode);
      train->read("epochs_per_bellman", t.epochs_per_bellman);
      train->read("mini_batch", t.mini_batch);
      train->read("gamma", t.gamma);
      train->read("learning_rate", t.learning_rate);
      train->read("reinit_network_each_iteration", t.reinit_network_each_iteration);
      train->read("epochs_if_reinit", t.epochs_if_reinit);
      train->read("allow_undiscounted", t.allow_undiscounted);
      train->finish();
    }
    if (auto eps = sched->child("epsilon")) {
      auto& e = s.epsilon;
      eps->read_enum("kind", e.kind, epsilon_kind_from_string);
      eps->read("start", e.start);
      eps->read("end", e.end);
      eps->read("decay_fraction", e.decay_fraction);
      eps->read("constant_value", e.constant_value);
      eps->finish();
    }
    sched->read("episodes", s.episodes);
    sched->read("steps_per_episode", s.steps_per_episode);
    sched->read("eval_steps", s.eval_steps);
    sched->read("eval_each_episode", s.eval_each_episode);
    sched->read("eval_every_td", s.eval_every_td);
    sched->read("offline_td_updates", s.offline_td_updates);
    sched->read("checkpoint_every", s.checkpoint_every);
    sched->read("demonstrations", s.demonstrations);
    if (auto norm = sched->child("normalizer")) {
      norm->read("refit_every", s.normalizer.refit_every);
      norm->read("refit_fraction", s.normalizer.refit_fraction);
      norm->read("refit_until", s.normalizer.refit_until);
      norm->finish();
    }
    sched->read("stop_on_success", s.stop_on_success);
    sched->read("success_cost", s.success_cost);
    sched->finish();
  }

  if (root.has("cost")) {
    try {
      Json merged = cost_to_json(c.cost);
      const Json& in = root.raw("cost");
      if (!in.is_object()) throw ConfigError("expected an object");
      // A new kind resets the kind-specific defaults.
      if (in.contains("kind")) merged = Json{{"kind", in.at("kind")}};
      for (const auto& item : in.items()) merged[item.key()] = item.value();
      Section check(merged, "cost");
      for (const char* k : {"kind", "center", "hard_limit", "soft_limit", "center_tolerance",
                            "pole_margin", "soft_cost", "step_cost", "terminal_cost",
                            "action_penalty"}) {
        double ignored = 0.0;
        if (std::string(k) != "kind") check.read(k, ignored);
        else {
          std::string kind;
          check.read(k, kind);
          try {
            cost_kind_from_string(kind);
          } catch (const ConfigError& e) {
            throw ConfigError(std::string("cost.kind: ") + e.what());
          }
        }
      }
      check.finish();
      c.cost = cost_from_json(merged);
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      throw ConfigError(starts_with(what, "cost") ? what : "cost: " + what);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cost: ") + e.what());
    }
  }

  if (auto seeds = root.child("seeds")) {
    seeds->read("network", c.seeds.network);
    seeds->read("exploration", c.seeds.exploration);
    seeds->read("environment", c.seeds.environment);
    seeds->finish();
  }
  if (auto io = root.child("io")) {
    io->read("out_dir", c.io.out_dir);
    io->read("resume", c.io.resume);
    io->finish();
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  validate(c);
  return c;
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config " + path.string());
  out << config_to_json(config).dump(2) << '\n';
}

SeedConfig sweep_seeds(const SeedConfig& base, int k) {
  const auto shift = std::uint64_t(1000) * std::uint64_t(k);
  return {base.network + shift, base.exploration + shift, base.environment + shift};
}

}  // namespace nfq
