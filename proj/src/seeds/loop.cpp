#include "agcl/seeds/loop.hpp"
#include "agcl/log.hpp"

namespace agcl::seeds {

namespace {

SeedCount count_seeds(const std::string& stage, const SeedSet& seeds, int num_classes) {
  SeedCount sc{stage, seeds.size(), {}};
  for (int c = 0; c < num_classes; ++c) sc.per_disease.push_back(seeds.size(c));
  return sc;
}

bool severity_seeds_complete(const SeedSet& seeds, const std::vector<Sample>& train) {
  for (const auto& s : train) {
    for (const auto& [c, sev] : s.dsl) {
      if (sev != Severity::mild && !seeds.contains(s.id, c)) return false;
    }
  }
  return true;
}

}  // namespace

BinaryModels finetune_all(const nn::Trunk<float>& trunk, const synth::Dataset& data, const nn::TrainConfig& config,
                          std::uint64_t seed, bool ordered, nlohmann::json* logs) {
  const int C = static_cast<int>(data.disease_names.size());
  BinaryModels models;
  if (logs) *logs = nlohmann::json::array();
  for (int c = 0; c < C; ++c) {
    Rng rng(derive_seed(seed, "binary", static_cast<std::uint64_t>(c)));
    const auto stages = curriculum::build_curriculum(data.train, c, config.stage_epochs, rng, ordered);
    curriculum::TrainingLog log;
    models.push_back(curriculum::finetune_binary(trunk, c, stages, data.train, data.val, config, rng, &log));
    if (logs) logs->push_back(curriculum::to_json(log));
  }
  return models;
}

LoopResult agcl_loop(const LoopConfig& config, const synth::Dataset& data, StageStore& store) {
  const int C = static_cast<int>(data.disease_names.size());
  if (config.model.num_classes != C) throw std::invalid_argument("agcl_loop: model class count differs from dataset");
  LoopResult result;

  const auto multilabel_stage = [&](const std::string& name, auto&& train_fn) {
    if (auto loaded = store.load_model(name)) {
      log::info("stage_resumed", {{"stage", name}});
      return std::move(*loaded);
    }
    log::info("stage_start", {{"stage", name}});
    std::vector<nn::EpochStats> history;
    nn::MultiLabelModel<float> model = train_fn(history);
    nlohmann::json h = nlohmann::json::array();
    for (const auto& e : history) h.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", *e.val_loss}});
    store.save_model(name, model, {{"stage", name}, {"history", h}});
    return model;
  };
  const auto evaluate = [&](const std::string& name, const nn::MultiLabelModel<float>& model) {
    eval::EvalReport report = eval::build_report(model, data.test, data.disease_names, config.eval, name);
    log::info("stage_report", {{"stage", name},
                               {"mean_auc", report.mean_auc().value_or(0.0)},
                               {"recall", report.totals().recall().value_or(0.0)},
                               {"precision", report.totals().precision().value_or(0.0)}});
    store.save_report(report);
    result.reports.push_back(report);
    result.models.push_back(model);
  };
  const auto binaries_stage = [&](const std::string& tag, const nn::Trunk<float>& trunk, bool ordered) {
    if (auto loaded = store.load_binaries(tag)) return std::move(*loaded);
    nlohmann::json logs;
    BinaryModels models = finetune_all(trunk, data, config.train, derive_seed(config.seed, "binaries-" + tag), ordered, &logs);
    store.save_binaries(tag, models, logs);
    return models;
  };

  nn::TrainConfig baseline_cfg = config.train;
  baseline_cfg.max_epochs = config.train.baseline_max_epochs;
  const nn::MultiLabelModel<float> baseline = multilabel_stage("baseline", [&](auto& history) {
    Rng rng(derive_seed(config.seed, "baseline"));
    return train_baseline(config.model, data.train, data.val, baseline_cfg, rng, &history);
  });
  evaluate("baseline", baseline);
  if (config.iterations <= 0) return result;

  if (config.agl) {
    const BinaryModels binaries = binaries_stage("agl", baseline.trunk, false);
    SeedSet seeds;
    if (auto loaded = store.load_seeds("agl")) {
      seeds = std::move(*loaded);
    } else {
      seeds = harvest_initial_seeds(data.train, binaries, config.train.seed_threshold, false);
      store.save_seeds("agl", seeds);
    }
    result.seed_counts.push_back(count_seeds("agl", seeds, C));
    const auto agl = multilabel_stage("agl", [&](auto& history) {
      Rng rng(derive_seed(config.seed, "refine-agl"));
      return refine(baseline, data.train, data.val, seeds, config.train, rng, &history);
    });
    evaluate("agl", agl);
  }

  BinaryModels binaries = binaries_stage("iter-0", baseline.trunk, config.curriculum);
  SeedSet seeds;
  if (auto loaded = store.load_seeds("iter-0")) {
    seeds = std::move(*loaded);
  } else {
    seeds = harvest_initial_seeds(data.train, binaries, config.train.seed_threshold, true);
    store.save_seeds("iter-0", seeds);
  }
  result.s1_complete = severity_seeds_complete(seeds, data.train);
  result.seed_counts.push_back(count_seeds("iter-0", seeds, C));

  nn::MultiLabelModel<float> current = baseline;
  for (int k = 1; k <= config.iterations; ++k) {
    const std::string name = agcl_stage_name(k);
    current = multilabel_stage(name, [&](auto& history) {
      Rng rng(derive_seed(config.seed, "refine", static_cast<std::uint64_t>(k)));
      return refine(current, data.train, data.val, seeds, config.train, rng, &history);
    });
    evaluate(name, current);
    if (k == config.iterations) break;

    const std::string tag = "iter-" + std::to_string(k);
    binaries = binaries_stage(tag, current.trunk, config.curriculum);
    if (auto loaded = store.load_seeds(tag)) {
      seeds = std::move(*loaded);
    } else {
      refresh_attention_maps(seeds, data.train, binaries);
      harvest_additional_seeds(seeds, data.train, binaries, config.train.seed_threshold, k);
      store.save_seeds(tag, seeds);
    }
    result.seed_counts.push_back(count_seeds(tag, seeds, C));
  }
  return result;
}

}  // namespace agcl::seeds
