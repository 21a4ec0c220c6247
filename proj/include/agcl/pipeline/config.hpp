#pragma once

#include "agcl/eval/localization.hpp"
#include "agcl/nn/types.hpp"
#include "agcl/seeds/loop.hpp"
#include "agcl/synth/generator.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace agcl::pipeline {

struct StageToggles {
  bool curriculum = true;  // false: binaries see all positives at once
  bool agl = true;
  int iterations = 2;      // 0 leaves only the baseline
};

struct ExperimentConfig {
  synth::DatasetConfig data;
  nn::ModelConfig model;
  nn::TrainConfig train;
  eval::EvalConfig eval;
  StageToggles stages;
  std::filesystem::path out_dir = "runs/default";
  std::filesystem::path manifest;  // existing dataset; empty generates one from `data`
  std::filesystem::path lexicon;   // DSL lexicon; empty uses the built-in one
  std::uint64_t seed = 1;

  /// Sets the root seed and the dataset seed together.
  void reseed(std::uint64_t s);
  /// Checks value ranges and that referenced paths exist.
  void validate() const;
};

/// Keys absent from `j` keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

/// JSON with // and /* */ comments allowed.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::json to_json(const nn::ModelConfig& c);
nlohmann::json to_json(const nn::TrainConfig& c);
nlohmann::json to_json(const eval::EvalConfig& c);

/// 64-bit FNV-1a of the canonical dump, as 16 hex digits.
std::string fingerprint(const nlohmann::json& j);

seeds::LoopConfig loop_config(const ExperimentConfig& c);

}  // namespace agcl::pipeline
