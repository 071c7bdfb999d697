#pragma once

#include <string_view>

namespace nfq {

struct TrainSchedule {
  int bellman_updates_per_episode = 4;
  int epochs_per_bellman = 8;
  int mini_batch = 2048;  // 0: full batch
  double gamma = 0.98;
  double learning_rate = 1e-3;
  bool reinit_network_each_iteration = false;
  int epochs_if_reinit = 120;
  // gamma = 1 without reinit needs this set explicitly.
  bool allow_undiscounted = false;

  bool operator==(const TrainSchedule&) const = default;
};

enum class EpsilonKind { linear, constant };

std::string_view to_string(EpsilonKind kind);
EpsilonKind epsilon_kind_from_string(std::string_view name);

struct EpsilonSchedule {
  EpsilonKind kind = EpsilonKind::linear;
  double start = 0.8;
  double end = 0.05;
  double decay_fraction = 0.25;
  double constant_value = 0.1;

  bool operator==(const EpsilonSchedule&) const = default;
};

// linear: start + (end - start) * min(1, episode / (decay_fraction * total)).
double epsilon_at(const EpsilonSchedule& schedule, int episode, int total_episodes);

void validate(const TrainSchedule& schedule);
void validate(const EpsilonSchedule& schedule);

}  // namespace nfq
