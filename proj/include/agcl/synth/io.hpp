#pragma once

#include "agcl/sample.hpp"
#include "agcl/synth/generator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace agcl::synth {

/// 8-bit grayscale PNG. Values are quantized to k/255.
void write_png(const std::filesystem::path& path, const Eigen::MatrixXf& pixels);
Eigen::MatrixXf read_png(const std::filesystem::path& path);

/// Manifest record for one sample (pixels excluded).
nlohmann::json sample_record(const Sample& s, const std::string& split);
Sample sample_from_record(const nlohmann::json& j);

/// Writes images/<id>.png, manifest.jsonl and config.echo.json under `dir`.
void write_dataset(const Dataset& dataset, const DatasetConfig& config, const std::filesystem::path& dir);

/// Loads a manifest and its images (paths resolved relative to the manifest).
Dataset read_dataset(const std::filesystem::path& manifest);

}  // namespace agcl::synth
