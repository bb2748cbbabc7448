#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "trackcull/classifier.hpp"
#include "trackcull/ert.hpp"
#include "trackcull/mlp.hpp"

namespace trackcull {

inline constexpr std::string_view kModelFormat = "trackcull-model-v1";

std::string model_to_json(const MlpModel& model);
std::string model_to_json(const ErtModel& model);

/// Throw ModelParseError, ModelVersionError, ModelKindError or ModelCorruptError.
MlpModel mlp_from_json(std::string_view text);
ErtModel ert_from_json(std::string_view text);

void save_model(const MlpModel& model, const std::filesystem::path& path);
void save_model(const ErtModel& model, const std::filesystem::path& path);

MlpModel load_mlp(const std::filesystem::path& path);
ErtModel load_ert(const std::filesystem::path& path);

/// Loads either kind, dispatching on the "kind" tag.
std::unique_ptr<Classifier> load_model(const std::filesystem::path& path);

}  // namespace trackcull
