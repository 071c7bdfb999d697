#pragma once

#include <json.hpp>

#include "nfq/costs.hpp"
#include "nfq/net.hpp"
#include "nfq/observation.hpp"
#include "nfq/qfunc.hpp"

namespace nfq {

using Json = nlohmann::ordered_json;

Json cost_to_json(const CostSpec& spec);
// Missing fields fall back to the paper defaults of spec.kind.
CostSpec cost_from_json(const Json& j);

Json layers_to_json(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> layers_from_json(const Json& j);

Json observation_to_json(const Observation& o);
Observation observation_from_json(const Json& j);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

}  // namespace nfq
