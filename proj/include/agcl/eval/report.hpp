#pragma once

#include "agcl/eval/localization.hpp"
#include "agcl/nn/model.hpp"
#include "agcl/sample.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace agcl::eval {

struct LocalizationCounts {
  long gt = 0;
  long detected = 0;
  long true_positives = 0;
  long recalled = 0;

  std::optional<double> recall() const;
  std::optional<double> precision() const;
  LocalizationCounts& operator+=(const LocalizationCounts& o);
};

struct DiseaseRow {
  std::string name;
  std::optional<double> auc;
  std::optional<LocalizationCounts> localization;  // absent without GT boxes
};

/// Per-disease AUC and localization counts for one stage, plus averages.
struct EvalReport {
  std::string stage;
  double iobb_threshold = 0.25;
  std::vector<DiseaseRow> rows;

  std::optional<double> mean_auc() const;
  LocalizationCounts totals() const;
  std::optional<double> macro_recall() const;
  std::optional<double> macro_precision() const;
};

/// Multi-label probabilities and CAM detections of `model` on `samples`.
/// Localization uses only samples with GT boxes, one heatmap per boxed disease.
EvalReport build_report(const nn::MultiLabelModel<float>& model, const std::vector<Sample>& samples,
                        const std::vector<std::string>& names, const EvalConfig& config, const std::string& stage,
                        std::vector<Detection>* detections = nullptr);

/// Report from precomputed scores (samples x classes) and detections.
EvalReport assemble_report(const std::vector<std::vector<double>>& scores, const std::vector<Sample>& samples,
                           const std::vector<Detection>& detections, const std::vector<std::string>& names,
                           const EvalConfig& config, const std::string& stage);

nlohmann::json auc_json(const EvalReport& r);
nlohmann::json localization_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& auc, const nlohmann::json& localization);

/// Aligned text tables, one row per disease plus an average/total row.
std::string auc_table(const EvalReport& r);
std::string localization_table(const EvalReport& r);

}  // namespace agcl::eval
