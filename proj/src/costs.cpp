#include "nfq/costs.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nfq/errors.hpp"

namespace nfq {

TrackRegions TrackRegions::for_track(double hard_limit, double soft_limit, double center) {
  return {center, hard_limit, soft_limit, 0.15 * (2.0 * hard_limit)};
}

std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::shaped:
      return "shaped";
    case CostKind::time_optimal:
      return "time_optimal";
    case CostKind::shaped_in_margin:
      return "shaped_in_margin";
    case CostKind::sway_killer:
      break;
  }
  return "sway_killer";
}

CostKind cost_kind_from_string(std::string_view name) {
  if (name == "shaped") return CostKind::shaped;
  if (name == "time_optimal") return CostKind::time_optimal;
  if (name == "shaped_in_margin") return CostKind::shaped_in_margin;
  if (name == "sway_killer") return CostKind::sway_killer;
  throw ConfigError("unknown cost kind '" + std::string(name) + "'");
}

CostSpec CostSpec::shaped() { return CostSpec{}; }

CostSpec CostSpec::time_optimal() {
  CostSpec s;
  s.kind = CostKind::time_optimal;
  s.pole_margin = 0.3;
  return s;
}

CostSpec CostSpec::shaped_in_margin() {
  CostSpec s;
  s.kind = CostKind::shaped_in_margin;
  s.pole_margin = 0.3;
  return s;
}

CostSpec CostSpec::sway_killer() {
  CostSpec s;
  s.kind = CostKind::sway_killer;
  s.pole_margin = 0.05;
  s.soft_cost = 0.1;
  return s;
}

std::string CostSpec::id() const {
  std::string out(to_string(kind));
  if (kind != CostKind::shaped) out += fmt::format("(margin={})", pole_margin);
  if (action_penalty > 0.0) out += fmt::format("+penalty({})", action_penalty);
  return out;
}

namespace {

double offset(const CostSpec& spec, const Observation& s) {
  return std::abs(s.x - spec.regions.center);
}

// Shared outer regions: hard endstop, then soft stop. Returns true if handled.
bool outer_region(const CostSpec& spec, const Observation& s, CostResult& out) {
  const double d = offset(spec, s);
  if (d > spec.regions.hard_limit) {
    out = {spec.terminal_cost, true};
    return true;
  }
  if (d > spec.regions.soft_limit) {
    out = {spec.soft_cost, false};
    return true;
  }
  return false;
}

bool in_goal(const CostSpec& spec, const Observation& s) {
  return pole_shaping(s) <= spec.pole_margin && offset(spec, s) < spec.regions.center_tolerance;
}

}  // namespace

CostResult shaped_cost(const CostSpec& spec, const Observation& next) {
  CostResult out;
  if (outer_region(spec, next, out)) return out;
  if (offset(spec, next) < spec.regions.center_tolerance) {
    return {spec.step_cost * pole_shaping(next), false};
  }
  return {spec.step_cost, false};
}

CostResult time_optimal_cost(const CostSpec& spec, const Observation& next) {
  CostResult out;
  if (outer_region(spec, next, out)) return out;
  if (in_goal(spec, next)) return {0.0, false};
  return {spec.step_cost, false};
}

CostResult sway_killer_cost(const CostSpec& spec, const Observation& next) {
  CostResult out;
  if (outer_region(spec, next, out)) return out;
  const double hanging = (next.cos_a + 1.0) / 2.0;
  if (hanging <= spec.pole_margin && offset(spec, next) <= spec.regions.center_tolerance) {
    return {0.0, false};
  }
  return {spec.step_cost, false};
}

CostResult shaped_in_margin_cost(const CostSpec& spec, const Observation& next) {
  CostResult out;
  if (outer_region(spec, next, out)) return out;
  if (in_goal(spec, next)) {
    // Rescaled so the cost reaches step_cost exactly at the margin boundary.
    return {spec.step_cost * pole_shaping(next) / spec.pole_margin, false};
  }
  return {spec.step_cost, false};
}

CostResult with_action_penalty(CostResult base, double action, double penalty) {
  if (action != 0.0 && penalty > 0.0) base.cost = std::min(base.cost + penalty, 1.0);
  return base;
}

CostResult transition_cost(const CostSpec& spec, const Observation& /*state*/, double action,
                           const Observation& next) {
  CostResult base;
  switch (spec.kind) {
    case CostKind::shaped:
      base = shaped_cost(spec, next);
      break;
    case CostKind::time_optimal:
      base = time_optimal_cost(spec, next);
      break;
    case CostKind::shaped_in_margin:
      base = shaped_in_margin_cost(spec, next);
      break;
    case CostKind::sway_killer:
      base = sway_killer_cost(spec, next);
      break;
  }
  return with_action_penalty(base, action, spec.action_penalty);
}

bool satisfies_safety_relation(const CostSpec& spec, double gamma) {
  if (gamma >= 1.0) return false;
  // Relative slack so that 0.02 / (1 - 0.98) counts as the boundary it is
  // rather than the 0.9999999999999991 it rounds to.
  return spec.step_cost / (1.0 - gamma) < spec.terminal_cost * (1.0 - 1e-9);
}

void validate(const CostSpec& spec) {
  const auto& r = spec.regions;
  if (!(0.0 < r.center_tolerance && r.center_tolerance < r.soft_limit &&
        r.soft_limit < r.hard_limit)) {
    throw ConfigError("cost.regions: need 0 < center_tolerance < soft_limit < hard_limit");
  }
  if (spec.terminal_cost != 1.0) throw ConfigError("cost.terminal_cost: must be 1.0");
  for (const double c : {spec.step_cost, spec.soft_cost}) {
    if (!(c >= 0.0 && c <= spec.terminal_cost)) {
      throw ConfigError("cost: step and soft costs must lie in [0, terminal_cost]");
    }
  }
  if (!(spec.pole_margin > 0.0)) throw ConfigError("cost.pole_margin: must be positive");
  if (!(spec.action_penalty >= 0.0)) throw ConfigError("cost.action_penalty: must be >= 0");
}

}  // namespace nfq
