#pragma once

#include <vector>

#include "cdfest/predicate.hpp"
#include "json.hpp"

namespace cdfest {

nlohmann::json predicates_to_json(const std::vector<Predicate>& predicates);
/// Throws ParseError.
std::vector<Predicate> predicates_from_json(const nlohmann::json& array);

}  // namespace cdfest
