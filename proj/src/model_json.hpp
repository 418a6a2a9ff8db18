#pragma once

// JSON encoders shared by the model files of several modules.

#include <json.hpp>

#include "eggs/logistic.hpp"

namespace eggs::detail {

nlohmann::ordered_json linear_model_to_json(const LinearModel& m);
LinearModel linear_model_from_json(const nlohmann::json& j);

}  // namespace eggs::detail
