#pragma once

#include "agcl/nn/model.hpp"
#include "agcl/nn/types.hpp"
#include "agcl/rng.hpp"
#include "agcl/sample.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace agcl::curriculum {

/// Cumulative training subset for one disease. Stage 1 holds severe
/// positives, stage 2 adds moderate, stage 3 adds mild and unannotated ones.
struct CurriculumStage {
  int index = 1;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;  // normal images only, |negatives| == |positives|
  int epochs = 0;
  bool skipped() const { return positives.empty(); }
};

using Curriculum = std::array<CurriculumStage, 3>;

/// Severity-ordered stages for disease `c`, read from each sample's DSL map.
/// Negatives are redrawn per stage, without replacement, from the normal pool.
/// With `ordered == false` every positive enters at stage 3 (no-curriculum
/// ablation). Throws if the normal pool cannot balance a stage.
Curriculum build_curriculum(const std::vector<Sample>& samples, int disease, const std::vector<int>& stage_epochs,
                            Rng& rng, bool ordered = true);

struct StageLog {
  int index = 1;
  bool skipped = false;
  int positives = 0;
  int negatives = 0;
  std::vector<double> train_loss;  // one entry per epoch
  double val_accuracy = 0.0;
};

struct TrainingLog {
  int disease = 0;
  std::vector<StageLog> stages;
};

/// Fine-tunes a binary network for `disease` from `trunk`: fresh 2-way head,
/// then stages 1 -> 2 -> 3 with softmax cross-entropy. Validation accuracy is
/// measured on validation positives of the disease against as many normal
/// validation images. On divergence the last good parameters are written to
/// `failure_checkpoint` (if given) before rethrowing.
nn::BinaryModel<float> finetune_binary(const nn::Trunk<float>& trunk, int disease, const Curriculum& stages,
                                       const std::vector<Sample>& train, const std::vector<Sample>& val,
                                       const nn::TrainConfig& config, Rng& rng, TrainingLog* log = nullptr,
                                       const std::optional<std::filesystem::path>& failure_checkpoint = {});

/// Balanced accuracy set for a disease: positives then equally many normals.
double binary_accuracy(const nn::BinaryModel<float>& model, const std::vector<Sample>& samples);

nlohmann::json to_json(const TrainingLog& log);

}  // namespace agcl::curriculum
