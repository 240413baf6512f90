#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "harmonizer/fitter.hpp"
#include "harmonizer/pipeline.hpp"
#include "harmonizer/regressor.hpp"
#include "harmonizer/training.hpp"

namespace harmonizer {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

/// Pipeline as {"filters": [names...], "priors": [{"mean", "stddev"}...]}.
/// A bare array of names is also accepted on input (default priors).
nlohmann::json pipeline_to_json(const FilterPipeline& pipeline);
FilterPipeline pipeline_from_json(const nlohmann::json& j);

nlohmann::json args_to_json(const ArgVector& args);

/// Versioned model document: shape metadata plus row-major weight arrays.
nlohmann::json model_to_json(const RegressorModel& model);
RegressorModel model_from_json(const nlohmann::json& j);

void save_model(const RegressorModel& model, const std::filesystem::path& path);
RegressorModel load_model(const std::filesystem::path& path);

nlohmann::json fit_result_to_json(const FitResult& result, const FilterPipeline& pipeline);

/// Everything a CLI run may configure. Fields left unset fall back to defaults.
struct RunConfig {
  FilterPipeline pipeline = FilterPipeline::standard();
  std::uint64_t seed = 0;
  RegressorMode mode = RegressorMode::Cascade;
  TrainConfig train;
  double alpha = 0.9;
  double clip_threshold = 0.05;
  std::string model_path;
  std::string out_dir;

  /// Throws DomainError on out-of-range values.
  void validate() const;
};

nlohmann::json config_to_json(const RunConfig& config);
/// Overlays the fields present in `j` onto `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace harmonizer
