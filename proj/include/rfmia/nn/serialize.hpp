#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rfmia/nn/mlp.hpp"

namespace rfmia::nn {

inline constexpr int kModelFormatVersion = 1;

// JSON weight dump. Doubles are written in shortest round-trip form, so
// save/load reproduces every weight bit for bit.
nlohmann::json to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& j);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace rfmia::nn
