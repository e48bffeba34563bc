#pragma once

#include "json.hpp"
#include "lcmodel/classify/model.hpp"

namespace lcmodel::classify {

[[nodiscard]] nlohmann::json model_to_json(const ClassifierModel& model);
[[nodiscard]] ClassifierModel model_from_json(const nlohmann::json& j);

}  // namespace lcmodel::classify
