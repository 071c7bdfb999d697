#pragma once

#include <string>
#include <string_view>

#include "nfq/observation.hpp"

namespace nfq {

// Track geometry of the cost functions, in the units of Observation::x.
struct TrackRegions {
  double center = 0.0;
  double hard_limit = 2.4;        // |x - center| beyond this: endstop, terminal
  double soft_limit = 2.1;        // |x - center| beyond this: soft-stop cost
  double center_tolerance = 0.72;  // theta_cart

  // Simulator geometry: theta_cart = 0.15 * track length, track = 2 * hard_limit.
  static TrackRegions for_track(double hard_limit, double soft_limit, double center = 0.0);

  bool operator==(const TrackRegions&) const = default;
};

enum class CostKind { shaped, time_optimal, shaped_in_margin, sway_killer };

std::string_view to_string(CostKind kind);
CostKind cost_kind_from_string(std::string_view name);

struct CostSpec {
  CostKind kind = CostKind::shaped;
  TrackRegions regions;
  double pole_margin = 0.3;  // theta_pole
  double soft_cost = 0.05;
  double step_cost = 0.01;
  double terminal_cost = 1.0;
  double action_penalty = 0.0;  // added for every non-zero action

  // Paper-default parameterizations of each kind.
  static CostSpec shaped();
  static CostSpec time_optimal();
  static CostSpec shaped_in_margin();
  static CostSpec sway_killer();

  // Stable identifier stored in dataset headers, e.g. "sway_killer(margin=0.05)".
  std::string id() const;

  bool operator==(const CostSpec&) const = default;
};

struct CostResult {
  double cost = 0.0;
  bool terminal = false;

  bool operator==(const CostResult&) const = default;
};

// 1 - (cos a + 1) / 2: 0 upright, 1 hanging.
inline double pole_shaping(const Observation& s) { return 1.0 - (s.cos_a + 1.0) / 2.0; }

CostResult shaped_cost(const CostSpec& spec, const Observation& next);
CostResult time_optimal_cost(const CostSpec& spec, const Observation& next);
CostResult sway_killer_cost(const CostSpec& spec, const Observation& next);
CostResult shaped_in_margin_cost(const CostSpec& spec, const Observation& next);

// Cost of the transition (s, a, s'): dispatch on spec.kind, then the action
// penalty for a != 0 (clamped to the terminal cost).
CostResult transition_cost(const CostSpec& spec, const Observation& state, double action,
                           const Observation& next);

// Adds `penalty` to `base` iff action != 0; terminal flag unchanged, result <= 1.
CostResult with_action_penalty(CostResult base, double action, double penalty);

// step_cost / (1 - gamma) < terminal_cost. Always false for gamma >= 1.
bool satisfies_safety_relation(const CostSpec& spec, double gamma);

void validate(const CostSpec& spec);

}  // namespace nfq
