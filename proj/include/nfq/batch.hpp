#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nfq/costs.hpp"
#include "nfq/net.hpp"
#include "nfq/observation.hpp"
#include "nfq/qfunc.hpp"

namespace nfq {

enum class StartTag { fresh_center, continued, demonstration };

std::string_view to_string(StartTag tag);
StartTag start_tag_from_string(std::string_view name);

struct Transition {
  Observation obs;
  std::size_t action_index = 0;
  double action_value = 0.0;
  Observation next_obs;
  double cost = 0.0;
  bool terminal = false;
  int episode_id = 0;
  int step_index = 0;

  bool operator==(const Transition&) const = default;
};

struct Episode {
  std::vector<Transition> transitions;
  StartTag start = StartTag::fresh_center;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
  bool terminated() const { return !empty() && transitions.back().terminal; }
  const Observation& final_observation() const { return transitions.back().next_obs; }

  bool operator==(const Episode&) const = default;
};

// Provenance stored in the dataset header.
struct DatasetMeta {
  int schema_version = 1;
  int lookback = 1;
  ActionSet actions = default_sim_actions();
  double action_bound = 10.0;
  CostSpec cost;
  std::string source = "sim";

  bool operator==(const DatasetMeta&) const = default;
};

// Append-only store of explored episodes, the data every Bellman sweep reads.
class GrowingBatch {
 public:
  GrowingBatch() = default;
  explicit GrowingBatch(DatasetMeta meta) : meta_(std::move(meta)) {}

  const DatasetMeta& meta() const { return meta_; }
  DatasetMeta& meta() { return meta_; }
  int lookback() const { return meta_.lookback; }
  const std::vector<Episode>& episodes() const { return episodes_; }
  std::size_t episode_count() const { return episodes_.size(); }
  std::size_t transition_count() const { return transitions_; }
  bool empty() const { return transitions_ == 0; }

  // Validates and appends; episode ids are reassigned to the batch position.
  void append_episode(Episode episode);

  bool operator==(const GrowingBatch&) const = default;

 private:
  DatasetMeta meta_;
  std::vector<Episode> episodes_;
  std::size_t transitions_ = 0;
};

// Throws InputError unless the episode satisfies the Transition/Episode invariants.
void validate_episode(const Episode& episode);

// n observations plus n - 1 previous actions.
constexpr Eigen::Index stacked_dim(int lookback) {
  return Eigen::Index(lookback) * Observation::kDim + (lookback - 1);
}

// Stacked view of step t: observations t, t-1, ..., t-n+1 (missing history
// repeats the first observation) then scaled actions t-1, ..., t-n+1
// (missing history is the neutral action, 0).
Vector stacked_state(const Episode& episode, std::size_t t, int lookback, double action_bound);

// Same layout for the successor state s_{t+1} of transition t.
Vector stacked_next_state(const Episode& episode, std::size_t t, int lookback,
                          double action_bound);

// Stacking over a raw history: observations[0..k] and actions[0..k-1].
Vector stack_history(std::span<const Observation> observations, std::span<const double> actions,
                     std::size_t k, int lookback, double action_bound);

// Stacked states (columns) of every transition, in batch order.
Matrix stacked_states(const GrowingBatch& batch, int lookback, double action_bound);
Matrix stacked_next_states(const GrowingBatch& batch, int lookback, double action_bound);

GrowingBatch append_episode(GrowingBatch batch, Episode episode);

// Recompute every cost and terminal flag; an episode is cut after its first
// terminal transition.
GrowingBatch relabel(const GrowingBatch& batch, const CostSpec& cost);

GrowingBatch inject_demonstration(GrowingBatch batch, Episode episode);

void save_batch(const GrowingBatch& batch, const std::filesystem::path& path);

// Loads a JSONL dataset. If `configured_lookback` differs from the file's
// metadata a warning is logged and the returned batch uses the configured value.
GrowingBatch load_batch(const std::filesystem::path& path,
                        std::optional<int> configured_lookback = std::nullopt);

}  // namespace nfq
