#pragma once

// Internal JSON helpers shared between translation units; not installed.

#include "json.hpp"
#include "pif/learner.hpp"

namespace pif::detail {

LearnerSpec learner_spec_from_json_value(const nlohmann::json& j);

}  // namespace pif::detail
