#include "agcl/curriculum/curriculum.hpp"
#include "agcl/log.hpp"
#include "agcl/nn/checkpoint.hpp"
#include "agcl/nn/heads.hpp"
#include "agcl/nn/objective.hpp"
#include "agcl/nn/trainer.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace agcl::curriculum {

Curriculum build_curriculum(const std::vector<Sample>& samples, int disease, const std::vector<int>& stage_epochs,
                            Rng& rng, bool ordered) {
  if (stage_epochs.size() != 3) throw std::invalid_argument("build_curriculum: need three stage epoch counts");
  std::array<std::vector<std::string>, 4> groups;  // severe, moderate, mild, unannotated
  std::vector<std::string> normals;
  for (const auto& s : samples) {
    if (s.is_normal()) {
      normals.push_back(s.id);
      continue;
    }
    if (!s.has_label(disease)) continue;
    const auto it = s.dsl.find(disease);
    if (!ordered || it == s.dsl.end()) {
      groups[3].push_back(s.id);
    } else {
      groups[2 - static_cast<int>(it->second)].push_back(s.id);
    }
  }

  Curriculum stages;
  std::vector<std::string> cumulative;
  for (int k = 0; k < 3; ++k) {
    auto& stage = stages[k];
    stage.index = k + 1;
    stage.epochs = stage_epochs[k];
    cumulative.insert(cumulative.end(), groups[k].begin(), groups[k].end());
    if (k == 2) cumulative.insert(cumulative.end(), groups[3].begin(), groups[3].end());
    stage.positives = cumulative;
    if (stage.positives.empty()) {
      if (k == 0 && ordered) log::warn("curriculum_stage_skipped", {{"disease", disease}, {"stage", 1}, {"reason", "no severe positives"}});
      continue;
    }
    if (stage.positives.size() > normals.size()) {
      throw std::runtime_error("build_curriculum: disease " + std::to_string(disease) + " stage " +
                               std::to_string(k + 1) + " needs " + std::to_string(stage.positives.size()) +
                               " negatives but only " + std::to_string(normals.size()) + " normal images exist");
    }
    std::vector<std::string> pool = normals;
    std::shuffle(pool.begin(), pool.end(), rng);
    stage.negatives.assign(pool.begin(), pool.begin() + static_cast<long>(stage.positives.size()));
  }
  return stages;
}

double binary_accuracy(const nn::BinaryModel<float>& model, const std::vector<Sample>& samples) {
  std::vector<const Sample*> positives, negatives;
  for (const auto& s : samples) {
    if (s.has_label(model.disease)) positives.push_back(&s);
    else if (s.is_normal()) negatives.push_back(&s);
  }
  negatives.resize(std::min(negatives.size(), positives.size()));
  if (positives.empty()) return 0.0;
  int correct = 0;
  for (const auto* group : {&positives, &negatives}) {
    const bool positive = group == &positives;
    for (const Sample* s : *group) {
      const auto fm = nn::forward_features(s->pixels, model.trunk);
      const auto [p_neg, p_pos] = nn::classify_binary(fm, model.head);
      if ((p_pos > p_neg) == positive) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(positives.size() + negatives.size());
}

nn::BinaryModel<float> finetune_binary(const nn::Trunk<float>& trunk, int disease, const Curriculum& stages,
                                       const std::vector<Sample>& train, const std::vector<Sample>& val,
                                       const nn::TrainConfig& train_config, Rng& rng, TrainingLog* log,
                                       const std::optional<std::filesystem::path>& failure_checkpoint) {
  const nn::TrainConfig config = nn::finetune_phase(train_config);
  std::unordered_map<std::string, const Sample*> by_id;
  for (const auto& s : train) by_id[s.id] = &s;
  const auto lookup = [&](const std::string& id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw std::runtime_error("finetune_binary: unknown sample id " + id);
    return it->second;
  };

  nn::BinaryModel<float> model = nn::init_binary_from(trunk, disease, rng);
  nn::BinaryModel<float> velocity = nn::zeros_like(model);
  if (log) {
    log->disease = disease;
    log->stages.clear();
  }

  int epoch = 0;
  for (const auto& stage : stages) {
    StageLog entry;
    entry.index = stage.index;
    entry.skipped = stage.skipped();
    entry.positives = static_cast<int>(stage.positives.size());
    entry.negatives = static_cast<int>(stage.negatives.size());
    if (!stage.skipped()) {
      std::vector<std::pair<const Sample*, bool>> items;
      for (const auto& id : stage.positives) items.push_back({lookup(id), true});
      for (const auto& id : stage.negatives) items.push_back({lookup(id), false});
      const auto objective = [&](std::size_t i, nn::BinaryModel<float>* grad, float scale) {
        return nn::binary_objective(model, items[i].first->pixels, items[i].second, grad, scale);
      };
      for (int e = 0; e < stage.epochs; ++e, ++epoch) {
        const nn::BinaryModel<float> last_good = model;
        try {
          const auto stats = nn::run_epochs(model, velocity, items.size(), objective, config, 1, epoch, rng);
          entry.train_loss.push_back(stats.front().train_loss);
        } catch (const nn::DivergenceError& err) {
          if (failure_checkpoint) {
            nn::CheckpointMeta meta;
            meta.epoch = epoch;
            meta.extra = {{"diverged", err.what()}, {"stage", stage.index}};
            nn::save_checkpoint(*failure_checkpoint, last_good, meta);
          }
          throw;
        }
      }
      entry.val_accuracy = binary_accuracy(model, val);
      log::debug("curriculum_stage_done", {{"disease", disease},
                                           {"stage", stage.index},
                                           {"positives", entry.positives},
                                           {"val_accuracy", entry.val_accuracy}});
    }
    if (log) log->stages.push_back(std::move(entry));
  }
  return model;
}

nlohmann::json to_json(const TrainingLog& log) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : log.stages) {
    stages.push_back({{"stage", s.index},
                      {"skipped", s.skipped},
                      {"positives", s.positives},
                      {"negatives", s.negatives},
                      {"train_loss", s.train_loss},
                      {"val_accuracy", s.val_accuracy}});
  }
  return {{"disease", log.disease}, {"stages", stages}};
}

}  // namespace agcl::curriculum
