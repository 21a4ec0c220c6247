#pragma once

#include "agcl/nn/model.hpp"
#include "agcl/nn/trainer.hpp"
#include "agcl/nn/types.hpp"
#include "agcl/rng.hpp"
#include "agcl/sample.hpp"
#include "agcl/seeds/seed_set.hpp"

#include <map>
#include <vector>

namespace agcl::seeds {

/// Binary networks indexed by disease id.
using BinaryModels = std::vector<nn::BinaryModel<float>>;

/// S1: positives annotated severe or moderate (skipped when
/// `use_severity == false`). S2: positives whose binary score for the disease
/// exceeds `threshold`. Each record stores the binary network's CAM.
SeedSet harvest_initial_seeds(const std::vector<Sample>& train, const BinaryModels& binaries, double threshold,
                              bool use_severity = true);

/// Adds newly qualifying non-seed positives with provenance
/// additional-iter-`iteration`. Existing records are untouched. Returns the
/// number of records added per disease.
std::map<int, int> harvest_additional_seeds(SeedSet& seeds, const std::vector<Sample>& train,
                                            const BinaryModels& binaries, double threshold, int iteration);

/// Recomputes every stored attention map from the current binary networks.
void refresh_attention_maps(SeedSet& seeds, const std::vector<Sample>& train, const BinaryModels& binaries);

/// Trains the two-path network: sigmoid cross-entropy on every training image
/// plus lambda-weighted heatmap regression on seed (image, class) pairs.
/// Stops on a validation-loss plateau. The seed set is read-only throughout.
nn::MultiLabelModel<float> refine(const nn::MultiLabelModel<float>& start, const std::vector<Sample>& train,
                                  const std::vector<Sample>& val, const SeedSet& seeds,
                                  const nn::TrainConfig& config, Rng& rng,
                                  std::vector<nn::EpochStats>* history = nullptr);

/// Multi-label training from random initialization (refinement with no seeds).
nn::MultiLabelModel<float> train_baseline(const nn::ModelConfig& model_config, const std::vector<Sample>& train,
                                          const std::vector<Sample>& val, const nn::TrainConfig& config, Rng& rng,
                                          std::vector<nn::EpochStats>* history = nullptr);

/// Mean validation classification loss.
double validation_loss(const nn::MultiLabelModel<float>& model, const std::vector<Sample>& val);

Eigen::VectorXf label_vector(const Sample& s, int num_classes);

}  // namespace agcl::seeds
