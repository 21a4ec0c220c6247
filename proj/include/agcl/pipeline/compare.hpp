#pragma once

#include "agcl/eval/report.hpp"
#include "agcl/pipeline/run.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace agcl::pipeline {

/// Stages side by side, columns in the order given. Deltas are against the
/// first column.
struct Comparison {
  std::vector<std::string> stages;
  std::vector<std::string> diseases;
  std::vector<std::vector<std::optional<double>>> auc;  // [disease][stage]
  std::vector<std::optional<double>> mean_auc;          // [stage]
  std::vector<eval::LocalizationCounts> totals;         // [stage]
  std::vector<seeds::SeedCount> seed_counts;

  std::optional<double> auc_delta(std::size_t disease, std::size_t stage) const;
  std::optional<double> mean_auc_delta(std::size_t stage) const;
};

/// Throws on fewer than two reports or differing disease lists.
Comparison compare_stages(const std::vector<eval::EvalReport>& reports);
Comparison compare_stages(const RunManifest& manifest);

nlohmann::json to_json(const Comparison& c);
std::string comparison_table(const Comparison& c);
std::string comparison_csv(const Comparison& c);

/// Mean AUC (and per-disease AUC, thin lines) against stage.
std::string auc_plot_svg(const Comparison& c);
/// Total seed count against harvest round.
std::string seed_plot_svg(const Comparison& c);

/// Writes comparison.{json,txt,csv}, auc_by_stage.svg and seeds_by_iteration.svg.
void write_comparison(const Comparison& c, const std::filesystem::path& dir);

}  // namespace agcl::pipeline
