#include <filesystem>
#include <fstream>

#include <spdlog/sinks/ringbuffer_sink.h>

#include "doctest.h"
#include "nfq/config.hpp"
#include "nfq/errors.hpp"
#include "nfq/log.hpp"

using namespace nfq;
namespace fs = std::filesystem;

namespace {

std::string config_error(const ExperimentConfig& c) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string parse_error(const std::string& text) {
  try {
    config_from_json(Json::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults") {
  const ExperimentConfig c = make_preset("nfq2-default");
  CHECK(config_error(c).empty());
  CHECK(c.agent.layers.size() == 4);
  CHECK(c.agent.layers[0] == LayerSpec{256, Activation::relu});
  CHECK(c.agent.layers[2] == LayerSpec{100, Activation::tanh});
  CHECK(c.agent.layers[3] == LayerSpec{1, Activation::sigmoid});
  CHECK(c.schedule.train == TrainSchedule{});
  CHECK(c.schedule.epsilon == EpsilonSchedule{});
  CHECK(c.agent.actions == std::vector<double>{-10.0, 0.0, 10.0});
  CHECK(c.schedule.normalizer.freeze_episode(200) == 100);
  CHECK(c.cost == CostSpec::shaped());
}

TEST_CASE("every preset validates and round-trips") {
  for (const std::string& name : preset_names()) {
    if (name == "stack-N") continue;
    CAPTURE(name);
    const ExperimentConfig c = make_preset(name);
    CHECK(config_error(c).empty());
    CHECK(config_from_json(config_to_json(c)) == c);
  }
  CHECK(make_preset("stack-6").agent.lookback == 6);
  CHECK_THROWS_AS(make_preset("stack-x"), ConfigError);
  CHECK_THROWS_AS(make_preset("nope"), ConfigError);
}

TEST_CASE("presets only touch their own fields") {
  const ExperimentConfig base = make_preset("nfq2-default");
  SUBCASE("time-optimal") {
    ExperimentConfig c = make_preset("time-optimal");
    c.preset = base.preset;
    c.cost = base.cost;
    CHECK(c == base);
  }
  SUBCASE("lr-1e-4") {
    ExperimentConfig c = make_preset("lr-1e-4");
    CHECK(c.schedule.train.learning_rate == 1e-4);
    c.preset = base.preset;
    c.schedule.train.learning_rate = base.schedule.train.learning_rate;
    CHECK(c == base);
  }
  SUBCASE("dqn-like") {
    ExperimentConfig c = make_preset("dqn-like");
    CHECK(c.agent.encoding == ActionEncoding::action_per_output);
    CHECK(c.agent.layers.back().width == 3);
    c.preset = base.preset;
    c.agent.encoding = base.agent.encoding;
    c.agent.layers = base.agent.layers;
    CHECK(c == base);
  }
}

TEST_CASE("legacy preset") {
  auto sink = std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(8);
  logger()->sinks().push_back(sink);
  const ExperimentConfig c = make_preset("nfq-legacy");
  validate(c);
  logger()->sinks().pop_back();
  CHECK(c.schedule.train.gamma == 1.0);
  CHECK(c.schedule.train.reinit_network_each_iteration);
  CHECK(c.agent.layers == std::vector<LayerSpec>{{20, Activation::tanh}, {20, Activation::tanh}, {1, Activation::sigmoid}});
  CHECK(c.schedule.epsilon.kind == EpsilonKind::constant);
  CHECK(c.schedule.epsilon.constant_value == 0.1);
  CHECK(c.agent.init == InitKind::uniform);
  CHECK(c.agent.optimizer == OptimizerKind::rprop);
  const auto lines = sink->last_formatted();
  REQUIRE_FALSE(lines.empty());
  CHECK(lines.back().find("gamma = 1.0") != std::string::npos);

  ExperimentConfig bare = make_preset("nfq2-default");
  bare.schedule.train.gamma = 1.0;
  CHECK(config_error(bare).find("schedule.train.gamma") == 0);
}

TEST_CASE("cross-field validation") {
  ExperimentConfig c = make_preset("nfq2-default");
  SUBCASE("safety relation") {
    c.cost.step_cost = 0.02;  // 0.02 / 0.02 = 1, not below 1
    CHECK(config_error(c).find("cost.step_cost") == 0);
    c.cost.step_cost = 0.019;
    CHECK(config_error(c).empty());
  }
  SUBCASE("extend-actions plan with per-output heads") {
    c = make_preset("dqn-like");
    c.agent.action_bound = 500;
    c.env.sim.force_bound = 500;
    c.agent.extend_actions = extended_actions().values();
    CHECK(config_error(c).find("agent.extend_actions") == 0);
  }
  SUBCASE("lookback") {
    c.agent.lookback = 0;
    CHECK(config_error(c).find("agent.lookback") == 0);
  }
  SUBCASE("actions over the bound") {
    c.agent.actions = {-20.0, 0.0, 20.0};
    CHECK(config_error(c).find("agent.action_bound") == 0);
  }
}

TEST_CASE("json parsing") {
  SUBCASE("partial documents resolve against the preset") {
    const ExperimentConfig c = config_from_json(Json::parse(
        R"({"preset": "time-optimal", "schedule": {"episodes": 12, "train": {"gamma": 0.9}}})"));
    CHECK(c.cost.kind == CostKind::time_optimal);
    CHECK(c.schedule.episodes == 12);
    CHECK(c.schedule.train.gamma == 0.9);
    CHECK(c.schedule.train.epochs_per_bellman == 8);
  }
  SUBCASE("cost kind switch resets that kind's defaults") {
    const ExperimentConfig c = config_from_json(Json::parse(R"({"cost": {"kind": "sway_killer"}})"));
    CHECK(c.cost == CostSpec::sway_killer());
  }
  CHECK(parse_error(R"({"schedule": {"episodez": 3}})").find("schedule.episodez") == 0);
  CHECK(parse_error(R"({"agent": {"lookback": "six"}})").find("agent.lookback") == 0);
  CHECK(parse_error(R"({"cost": {"kind": "nope"}})").find("cost.kind") == 0);
}

TEST_CASE("file round trip and seed sweeps") {
  const fs::path path = fs::temp_directory_path() / "nfq_test_config.json";
  ExperimentConfig c = make_preset("shaped-in-margin");
  c.seeds = {11, 12, 13};
  c.schedule.demonstrations = 1;
  save_config(c, path);
  CHECK(load_config(path) == c);
  CHECK_THROWS_AS(load_config(fs::temp_directory_path() / "nfq_missing.json"), IoError);

  const SeedConfig s = sweep_seeds(c.seeds, 2);
  CHECK(s.network == 2011);
  CHECK(s.exploration == 2012);
  CHECK(s.environment == 2013);
  CHECK(sweep_seeds(c.seeds, 0) == c.seeds);
}
