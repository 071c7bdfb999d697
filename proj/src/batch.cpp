#include "nfq/batch.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "nfq/errors.hpp"
#include "nfq/json.hpp"
#include "nfq/log.hpp"

namespace nfq {

std::string_view to_string(StartTag tag) {
  switch (tag) {
    case StartTag::fresh_center:
      return "fresh-center";
    case StartTag::continued:
      return "continued";
    case StartTag::demonstration:
      break;
  }
  return "demonstration";
}

StartTag start_tag_from_string(std::string_view name) {
  if (name == "fresh-center") return StartTag::fresh_center;
  if (name == "continued") return StartTag::continued;
  if (name == "demonstration") return StartTag::demonstration;
  throw InputError("unknown start tag '" + std::string(name) + "'");
}

namespace {

void validate_observation(const Observation& o) {
  for (const double v : o.values()) {
    if (!std::isfinite(v)) throw InputError("observation contains a non-finite value");
  }
  if (std::abs(o.cos_a * o.cos_a + o.sin_a * o.sin_a - 1.0) > 1e-9) {
    throw InputError("observation angle encoding is not on the unit circle");
  }
}

}  // namespace

void validate_episode(const Episode& episode) {
  if (episode.empty()) throw InputError("episode is empty");
  for (std::size_t t = 0; t < episode.size(); ++t) {
    const auto& tr = episode.transitions[t];
    if (tr.step_index != int(t)) throw InputError("episode step indices are not contiguous");
    if (!(tr.cost >= 0.0 && tr.cost <= 1.0)) throw InputError("transition cost outside [0, 1]");
    if (tr.terminal && t + 1 != episode.size()) {
      throw InputError("terminal transition is not the last of its episode");
    }
    validate_observation(tr.obs);
    validate_observation(tr.next_obs);
  }
}

void GrowingBatch::append_episode(Episode episode) {
  validate_episode(episode);
  for (const auto& tr : episode.transitions) {
    if (std::abs(tr.action_value) > meta_.action_bound) {
      throw InputError("transition action exceeds the dataset action bound");
    }
  }
  const int id = int(episodes_.size());
  for (auto& tr : episode.transitions) tr.episode_id = id;
  transitions_ += episode.size();
  episodes_.push_back(std::move(episode));
}

GrowingBatch append_episode(GrowingBatch batch, Episode episode) {
  batch.append_episode(std::move(episode));
  return batch;
}

GrowingBatch inject_demonstration(GrowingBatch batch, Episode episode) {
  episode.start = StartTag::demonstration;
  batch.append_episode(std::move(episode));
  return batch;
}

Vector stack_history(std::span<const Observation> observations, std::span<const double> actions,
                     std::size_t k, int lookback, double action_bound) {
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (k >= observations.size() || actions.size() < k) {
    throw InputError("stacking index outside the recorded history");
  }
  Vector out(stacked_dim(lookback));
  Eigen::Index pos = 0;
  for (int back = 0; back < lookback; ++back) {
    const std::size_t idx = k >= std::size_t(back) ? k - back : 0;
    for (const double v : observations[idx].values()) out[pos++] = v;
  }
  for (int back = 1; back < lookback; ++back) {
    out[pos++] = k >= std::size_t(back) ? scale_action(actions[k - back], action_bound) : 0.0;
  }
  return out;
}

namespace {

// Stacked view at position k in [0, T] of an episode with T transitions.
void write_stacked(const Episode& episode, std::size_t k, int lookback, double action_bound,
                   Eigen::Ref<Vector> out) {
  const auto& trs = episode.transitions;
  const auto obs_at = [&](std::size_t i) -> const Observation& {
    return i < trs.size() ? trs[i].obs : trs.back().next_obs;
  };
  Eigen::Index pos = 0;
  for (int back = 0; back < lookback; ++back) {
    const std::size_t idx = k >= std::size_t(back) ? k - back : 0;
    for (const double v : obs_at(idx).values()) out[pos++] = v;
  }
  for (int back = 1; back < lookback; ++back) {
    out[pos++] =
        k >= std::size_t(back) ? scale_action(trs[k - back].action_value, action_bound) : 0.0;
  }
}

}  // namespace

Vector stacked_state(const Episode& episode, std::size_t t, int lookback, double action_bound) {
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (t >= episode.size()) throw InputError("step index out of range");
  Vector out(stacked_dim(lookback));
  write_stacked(episode, t, lookback, action_bound, out);
  return out;
}

Vector stacked_next_state(const Episode& episode, std::size_t t, int lookback,
                          double action_bound) {
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (t >= episode.size()) throw InputError("step index out of range");
  Vector out(stacked_dim(lookback));
  write_stacked(episode, t + 1, lookback, action_bound, out);
  return out;
}

namespace {

Matrix stack_all(const GrowingBatch& batch, int lookback, double action_bound, std::size_t shift) {
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  Matrix out(stacked_dim(lookback), Eigen::Index(batch.transition_count()));
  Eigen::Index col = 0;
  for (const auto& ep : batch.episodes()) {
    for (std::size_t t = 0; t < ep.size(); ++t) {
      write_stacked(ep, t + shift, lookback, action_bound, out.col(col++));
    }
  }
  return out;
}

}  // namespace

Matrix stacked_states(const GrowingBatch& batch, int lookback, double action_bound) {
  return stack_all(batch, lookback, action_bound, 0);
}

Matrix stacked_next_states(const GrowingBatch& batch, int lookback, double action_bound) {
  return stack_all(batch, lookback, action_bound, 1);
}

GrowingBatch relabel(const GrowingBatch& batch, const CostSpec& cost) {
  DatasetMeta meta = batch.meta();
  meta.cost = cost;
  GrowingBatch out(std::move(meta));
  for (const auto& ep : batch.episodes()) {
    Episode relabeled;
    relabeled.start = ep.start;
    for (const auto& tr : ep.transitions) {
      Transition copy = tr;
      const CostResult c = transition_cost(cost, tr.obs, tr.action_value, tr.next_obs);
      copy.cost = c.cost;
      copy.terminal = c.terminal;
      relabeled.transitions.push_back(copy);
      if (c.terminal) break;
    }
    out.append_episode(std::move(relabeled));
  }
  return out;
}

void save_batch(const GrowingBatch& batch, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write dataset " + path.string());
  const auto& m = batch.meta();
  const Json header{{"type", "header"},
                    {"schema_version", m.schema_version},
                    {"lookback", m.lookback},
                    {"actions", m.actions.values()},
                    {"neutral_index", m.actions.neutral_index()},
                    {"action_bound", m.action_bound},
                    {"cost_id", m.cost.id()},
                    {"cost", cost_to_json(m.cost)},
                    {"source", m.source}};
  out << header.dump() << '\n';
  for (const auto& ep : batch.episodes()) {
    for (const auto& tr : ep.transitions) {
      const Json rec{{"episode", tr.episode_id},
                     {"step", tr.step_index},
                     {"start", std::string(to_string(ep.start))},
                     {"obs", observation_to_json(tr.obs)},
                     {"action_index", tr.action_index},
                     {"action", tr.action_value},
                     {"cost", tr.cost},
                     {"next_obs", observation_to_json(tr.next_obs)},
                     {"terminal", tr.terminal}};
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw IoError("failed writing dataset " + path.string());
}

GrowingBatch load_batch(const std::filesystem::path& path, std::optional<int> configured_lookback) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset " + path.string());

  std::string line;
  std::size_t record = 0;
  GrowingBatch batch;
  Episode current;
  int current_id = -1;

  const auto flush = [&]() {
    if (current.empty()) return;
    try {
      batch.append_episode(std::move(current));
    } catch (const InputError& e) {
      throw ParseError(std::string("invalid episode: ") + e.what(), record);
    }
    current = Episode{};
  };

  while (std::getline(in, line)) {
    ++record;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), record);
    }
    try {
      if (record == 1) {
        if (j.value("type", "") != "header") throw ParseError("missing dataset header", record);
        DatasetMeta meta;
        meta.schema_version = j.at("schema_version").get<int>();
        if (meta.schema_version != 1) throw ParseError("unsupported schema version", record);
        meta.lookback = j.at("lookback").get<int>();
        meta.actions = ActionSet(j.at("actions").get<std::vector<double>>());
        meta.action_bound = j.at("action_bound").get<double>();
        meta.cost = cost_from_json(j.at("cost"));
        meta.source = j.value("source", "sim");
        if (meta.lookback < 1) throw ParseError("lookback must be >= 1", record);
        batch = GrowingBatch(std::move(meta));
        continue;
      }
      Transition tr;
      tr.episode_id = j.at("episode").get<int>();
      tr.step_index = j.at("step").get<int>();
      tr.obs = observation_from_json(j.at("obs"));
      tr.action_index = j.at("action_index").get<std::size_t>();
      tr.action_value = j.at("action").get<double>();
      tr.cost = j.at("cost").get<double>();
      tr.next_obs = observation_from_json(j.at("next_obs"));
      tr.terminal = j.at("terminal").get<bool>();
      if (!(tr.cost >= 0.0 && tr.cost <= 1.0)) {
        throw ParseError("cost " + std::to_string(tr.cost) + " outside [0, 1]", record);
      }
      if (tr.episode_id != current_id) {
        flush();
        current_id = tr.episode_id;
        current.start = start_tag_from_string(j.at("start").get<std::string>());
      }
      current.transitions.push_back(tr);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string("invalid record: ") + e.what(), record);
    }
  }
  if (record == 0) throw ParseError("empty dataset file", 0);
  flush();

  if (configured_lookback && *configured_lookback != batch.lookback()) {
    logger()->warn("dataset {} was written with lookback {}, run is configured for {}; "
                   "stacking uses the run configuration",
                   path.string(), batch.lookback(), *configured_lookback);
    batch.meta().lookback = *configured_lookback;
  }
  return batch;
}

}  // namespace nfq
