#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include <spdlog/sinks/ringbuffer_sink.h>

#include "doctest.h"
#include "nfq/batch.hpp"
#include "nfq/errors.hpp"
#include "nfq/log.hpp"
#include "nfq/nfq.hpp"

using namespace nfq;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Episode of `steps` transitions; the pole angle sweeps from `from` to `to`
// and the cart stays at x. Costs come from `cost`.
Episode sweep_episode(int steps, double from, double to, const CostSpec& cost, double x = 0.0,
                      StartTag start = StartTag::fresh_center) {
  const ActionSet actions = default_sim_actions();
  Episode ep;
  ep.start = start;
  for (int t = 0; t < steps; ++t) {
    const double a0 = from + (to - from) * t / steps;
    const double a1 = from + (to - from) * (t + 1) / steps;
    Transition tr;
    tr.obs = Observation::from_angle(x + 0.001 * t, 0.1, a0, 0.2);
    tr.action_index = std::size_t(t % 3);
    tr.action_value = actions[tr.action_index];
    tr.next_obs = Observation::from_angle(x + 0.001 * (t + 1), 0.1, a1, 0.2);
    const CostResult c = transition_cost(cost, tr.obs, tr.action_value, tr.next_obs);
    tr.cost = c.cost;
    tr.terminal = c.terminal;
    tr.step_index = t;
    ep.transitions.push_back(tr);
  }
  return ep;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nfq_test_batch";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("append_episode") {
  GrowingBatch batch;
  CHECK(batch.empty());
  const Episode ep = sweep_episode(400, kPi, 0.5, CostSpec::shaped());
  batch.append_episode(ep);
  CHECK(batch.transition_count() == 400);

  const GrowingBatch snapshot = batch;
  batch.append_episode(sweep_episode(120, 1.0, 0.0, CostSpec::shaped()));
  CHECK(batch.episode_count() == 2);
  CHECK(batch.transition_count() == 520);
  CHECK(batch.episodes()[0] == snapshot.episodes()[0]);
  CHECK(batch.episodes()[1].transitions[0].episode_id == 1);

  SUBCASE("134 episodes of at most 400 steps") {
    GrowingBatch big;
    for (int e = 0; e < 134; ++e) big.append_episode(sweep_episode(100 + (e * 37) % 301, kPi, 0.0, CostSpec::shaped()));
    CHECK(big.transition_count() <= 53600);
  }
  SUBCASE("invariant violations") {
    CHECK_THROWS_AS(batch.append_episode(Episode{}), InputError);
    Episode bad = ep;
    bad.transitions[3].terminal = true;
    CHECK_THROWS_AS(batch.append_episode(bad), InputError);
    bad = ep;
    bad.transitions[5].step_index = 9;
    CHECK_THROWS_AS(batch.append_episode(bad), InputError);
    bad = ep;
    bad.transitions[0].next_obs.cos_a = 0.5;
    CHECK_THROWS_AS(batch.append_episode(bad), InputError);
    bad = ep;
    bad.transitions[0].action_value = 50.0;
    CHECK_THROWS_AS(batch.append_episode(bad), InputError);
  }
}

TEST_CASE("stacked state layout") {
  CHECK(stacked_dim(1) == 5);
  CHECK(stacked_dim(6) == 35);
  for (int n = 1; n <= 10; ++n) CHECK(stacked_dim(n) == 5 * n + (n - 1));

  const Episode ep = sweep_episode(3, kPi, 0.0, CostSpec::shaped());
  SUBCASE("lookback 1 is the raw observation") {
    const Vector s = stacked_state(ep, 2, 1, 10.0);
    const auto raw = ep.transitions[2].obs.values();
    REQUIRE(s.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(s(i) == raw[std::size_t(i)]);
  }
  SUBCASE("t = 0 pads with the first observation and neutral actions") {
    const Vector s = stacked_state(ep, 0, 6, 10.0);
    REQUIRE(s.size() == 35);
    const auto first = ep.transitions[0].obs.values();
    for (int k = 0; k < 6; ++k)
      for (int i = 0; i < 5; ++i) CHECK(s(5 * k + i) == first[std::size_t(i)]);
    CHECK(s.tail(5).isZero());
  }
  SUBCASE("hand-built two-step history, lookback 6") {
    const Vector s = stacked_state(ep, 2, 6, 10.0);
    Vector expected(35);
    const auto o0 = ep.transitions[0].obs.values();
    const auto o1 = ep.transitions[1].obs.values();
    const auto o2 = ep.transitions[2].obs.values();
    for (int i = 0; i < 5; ++i) {
      expected(i) = o2[std::size_t(i)];
      expected(5 + i) = o1[std::size_t(i)];
      for (int k = 2; k < 6; ++k) expected(5 * k + i) = o0[std::size_t(i)];
    }
    expected(30) = ep.transitions[1].action_value / 10.0;
    expected(31) = ep.transitions[0].action_value / 10.0;
    expected.tail(3).setZero();
    CHECK(s == expected);
  }
  SUBCASE("next state shifts by one step") {
    const Vector next = stacked_next_state(ep, 1, 2, 10.0);
    const auto o1 = ep.transitions[1].obs.values();
    const auto o2 = ep.transitions[1].next_obs.values();
    for (int i = 0; i < 5; ++i) {
      CHECK(next(i) == o2[std::size_t(i)]);
      CHECK(next(5 + i) == o1[std::size_t(i)]);
    }
    CHECK(next(10) == ep.transitions[1].action_value / 10.0);
    const Vector last = stacked_next_state(ep, 2, 1, 10.0);
    CHECK(last(0) == ep.final_observation().x);
  }
  CHECK_THROWS_AS(stacked_state(ep, 3, 1, 10.0), InputError);
}

TEST_CASE("relabel") {
  const CostSpec shaped = CostSpec::shaped();
  GrowingBatch batch;
  batch.meta().cost = shaped;
  batch.append_episode(sweep_episode(200, kPi, 0.2, shaped));
  batch.append_episode(sweep_episode(150, 0.3, kPi, shaped));

  SUBCASE("same cost function is the identity") {
    CHECK(relabel(batch, shaped) == batch);
  }
  SUBCASE("sway killer rewards the hanging pole") {
    const GrowingBatch sway = relabel(batch, CostSpec::sway_killer());
    CHECK(sway.meta().cost == CostSpec::sway_killer());
    const Transition& last = sway.episodes()[1].transitions.back();
    CHECK(std::abs(last.next_obs.angle()) == doctest::Approx(kPi));
    CHECK(last.cost == 0.0);
    CHECK(relabel(sway, CostSpec::sway_killer()) == sway);
  }
  SUBCASE("action penalty raises exactly the non-zero-action costs") {
    CostSpec penalized = shaped;
    penalized.action_penalty = 1e-5;
    const GrowingBatch out = relabel(batch, penalized);
    for (std::size_t e = 0; e < batch.episode_count(); ++e) {
      for (std::size_t t = 0; t < batch.episodes()[e].size(); ++t) {
        const Transition& a = batch.episodes()[e].transitions[t];
        const Transition& b = out.episodes()[e].transitions[t];
        if (a.action_value == 0.0) {
          CHECK(b.cost == a.cost);
        } else {
          CHECK(b.cost == a.cost + 1e-5);
        }
      }
    }
  }
  SUBCASE("a newly terminal transition truncates its episode") {
    CostSpec narrow = shaped;
    narrow.regions = TrackRegions{0.0, 0.05, 0.04, 0.02};
    const GrowingBatch out = relabel(batch, narrow);
    for (const auto& ep : out.episodes()) {
      CHECK(ep.terminated());
      for (std::size_t t = 0; t + 1 < ep.size(); ++t) CHECK_FALSE(ep.transitions[t].terminal);
    }
    CHECK(out.transition_count() < batch.transition_count());
    CHECK(relabel(out, narrow) == out);
  }
}

TEST_CASE("inject_demonstration") {
  const CostSpec shaped = CostSpec::shaped();
  GrowingBatch plain;
  plain.append_episode(sweep_episode(100, kPi, 2.0, shaped, 1.0));  // outside the center band
  const GrowingBatch demo = inject_demonstration(plain, sweep_episode(400, kPi, 0.0, shaped));
  CHECK(demo.transition_count() == 500);
  CHECK(demo.episodes().back().start == StartTag::demonstration);
  const GrowingBatch empty_demo = inject_demonstration(GrowingBatch{}, sweep_episode(400, kPi, 0.0, shaped));
  CHECK(empty_demo.transition_count() == 400);

  // One Bellman sweep with a constant-0.5 Q: the demo's goal costs lower the minimum target.
  Network zero = glorot_init(6, std::vector<LayerSpec>{{4, Activation::relu}, {1, Activation::sigmoid}}, 1);
  for (auto& layer : zero.layers()) layer.weights.setZero();
  const QFunction qf(ActionEncoding::action_in_input, zero, Normalizer::identity(5),
                     default_sim_actions(), 10.0);
  const PatternSet before = generate_pattern_set(plain, qf, 0.98, 1, 10.0);
  const PatternSet after = generate_pattern_set(demo, qf, 0.98, 1, 10.0);
  CHECK(after.inputs.cols() == before.inputs.cols() + 400);
  CHECK(after.targets.values.minCoeff() < before.targets.values.minCoeff());
}

TEST_CASE("save and load") {
  const CostSpec shaped = CostSpec::shaped();
  GrowingBatch batch;
  batch.meta().lookback = 6;
  batch.append_episode(sweep_episode(30, kPi, 0.2, shaped));
  batch.append_episode(sweep_episode(20, 0.1, 1.0, shaped, 0.0, StartTag::continued));
  const fs::path path = temp_file("roundtrip.jsonl");
  save_batch(batch, path);
  CHECK(load_batch(path) == batch);

  SUBCASE("configured lookback wins, with a warning") {
    auto sink = std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(16);
    logger()->sinks().push_back(sink);
    const GrowingBatch loaded = load_batch(path, 4);
    logger()->sinks().pop_back();
    CHECK(loaded.lookback() == 4);
    const auto lines = sink->last_formatted();
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].find("lookback 6") != std::string::npos);
  }
  SUBCASE("cost out of range") {
    std::ifstream in(path);
    std::string header, record;
    std::getline(in, header);
    std::getline(in, record);
    const auto pos = record.find("\"cost\":", record.find("\"action\":"));
    const auto end = record.find(',', pos);
    record = record.substr(0, pos) + "\"cost\":1.5" + record.substr(end);
    const fs::path bad = temp_file("bad_cost.jsonl");
    write_text(bad, header + "\n" + record + "\n");
    try {
      load_batch(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.record() == 2);
    }
  }
  SUBCASE("malformed line reports its position") {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    const fs::path bad = temp_file("bad_json.jsonl");
    write_text(bad, header + "\n{not json\n");
    try {
      load_batch(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.record() == 2);
    }
  }
  CHECK_THROWS_AS(load_batch(temp_file("missing.jsonl")), IoError);
}
