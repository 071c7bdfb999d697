#include "nfq/json.hpp"

#include "nfq/errors.hpp"

namespace nfq {

Json cost_to_json(const CostSpec& spec) {
  return Json{{"kind", std::string(to_string(spec.kind))},
              {"center", spec.regions.center},
              {"hard_limit", spec.regions.hard_limit},
              {"soft_limit", spec.regions.soft_limit},
              {"center_tolerance", spec.regions.center_tolerance},
              {"pole_margin", spec.pole_margin},
              {"soft_cost", spec.soft_cost},
              {"step_cost", spec.step_cost},
              {"terminal_cost", spec.terminal_cost},
              {"action_penalty", spec.action_penalty}};
}

CostSpec cost_from_json(const Json& j) {
  const CostKind kind = cost_kind_from_string(j.value("kind", std::string("shaped")));
  CostSpec s;
  switch (kind) {
    case CostKind::shaped:
      s = CostSpec::shaped();
      break;
    case CostKind::time_optimal:
      s = CostSpec::time_optimal();
      break;
    case CostKind::shaped_in_margin:
      s = CostSpec::shaped_in_margin();
      break;
    case CostKind::sway_killer:
      s = CostSpec::sway_killer();
      break;
  }
  s.regions.center = j.value("center", s.regions.center);
  s.regions.hard_limit = j.value("hard_limit", s.regions.hard_limit);
  s.regions.soft_limit = j.value("soft_limit", s.regions.soft_limit);
  s.regions.center_tolerance = j.value("center_tolerance", s.regions.center_tolerance);
  s.pole_margin = j.value("pole_margin", s.pole_margin);
  s.soft_cost = j.value("soft_cost", s.soft_cost);
  s.step_cost = j.value("step_cost", s.step_cost);
  s.terminal_cost = j.value("terminal_cost", s.terminal_cost);
  s.action_penalty = j.value("action_penalty", s.action_penalty);
  return s;
}

Json layers_to_json(const std::vector<LayerSpec>& layers) {
  Json out = Json::array();
  for (const auto& l : layers) {
    out.push_back({{"width", l.width}, {"activation", std::string(to_string(l.activation))}});
  }
  return out;
}

std::vector<LayerSpec> layers_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("layers: expected an array");
  std::vector<LayerSpec> out;
  for (const auto& item : j) {
    out.push_back({item.at("width").get<int>(),
                   activation_from_string(item.at("activation").get<std::string>())});
  }
  return out;
}

Json observation_to_json(const Observation& o) {
  return Json::array({o.x, o.dx, o.cos_a, o.sin_a, o.da});
}

Observation observation_from_json(const Json& j) {
  if (!j.is_array() || j.size() != Observation::kDim) {
    throw InputError("observation must be an array of 5 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(),
          j[4].get<double>()};
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected a numeric array");
  Vector v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = j[i].get<double>();
  return v;
}

}  // namespace nfq
