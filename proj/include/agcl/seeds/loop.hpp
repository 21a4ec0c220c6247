#pragma once

#include "agcl/curriculum/curriculum.hpp"
#include "agcl/eval/report.hpp"
#include "agcl/seeds/harvest.hpp"
#include "agcl/synth/generator.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace agcl::seeds {

struct LoopConfig {
  nn::ModelConfig model;
  nn::TrainConfig train;
  eval::EvalConfig eval;
  int iterations = 2;      // AGCL refinement iterations
  bool agl = true;         // also run the attention-guided ablation without curriculum
  bool curriculum = true;  // false: the AGCL binaries see every positive at once
  std::uint64_t seed = 1;  // root of every per-stage random stream
};

/// Persistence hooks. The default implementation keeps nothing, so every
/// stage is computed; a loader returning a value skips that stage.
class StageStore {
 public:
  virtual ~StageStore() = default;
  virtual std::optional<nn::MultiLabelModel<float>> load_model(const std::string&) { return std::nullopt; }
  virtual void save_model(const std::string&, const nn::MultiLabelModel<float>&, const nlohmann::json&) {}
  virtual std::optional<BinaryModels> load_binaries(const std::string&) { return std::nullopt; }
  virtual void save_binaries(const std::string&, const BinaryModels&, const nlohmann::json&) {}
  virtual std::optional<SeedSet> load_seeds(const std::string&) { return std::nullopt; }
  virtual void save_seeds(const std::string&, const SeedSet&) {}
  virtual void save_report(const eval::EvalReport&) {}
};

struct SeedCount {
  std::string stage;   // "agl", "iter-0", "iter-1", ...
  std::size_t total = 0;
  std::vector<std::size_t> per_disease;
};

struct LoopResult {
  std::vector<eval::EvalReport> reports;  // execution order: baseline, agl, agcl-1, agcl-2, ...
  std::vector<nn::MultiLabelModel<float>> models;  // parallel to reports
  std::vector<SeedCount> seed_counts;
  bool s1_complete = true;                // every severe/moderate positive seeded at iteration 0
};

/// One binary network per disease fine-tuned from `trunk`; with
/// `ordered == false` the curriculum collapses into a single stage.
BinaryModels finetune_all(const nn::Trunk<float>& trunk, const synth::Dataset& data, const nn::TrainConfig& config,
                          std::uint64_t seed, bool ordered, nlohmann::json* logs = nullptr);

/// baseline -> [AGL] -> curriculum binaries -> initial seeds -> refine (AGCL-1)
/// -> re-fine-tune binaries -> refresh + additional seeds -> refine (AGCL-2) ...
/// Each multi-label stage is evaluated on the test split.
LoopResult agcl_loop(const LoopConfig& config, const synth::Dataset& data, StageStore& store);

inline std::string agcl_stage_name(int k) { return "agcl-" + std::to_string(k); }

}  // namespace agcl::seeds
