#include "agcl/seeds/harvest.hpp"

#include "agcl/log.hpp"
#include "agcl/nn/heads.hpp"
#include "agcl/nn/objective.hpp"
#include "agcl/nn/trainer.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace agcl::seeds {

namespace {

const nn::BinaryModel<float>& binary_for(const BinaryModels& binaries, int c) {
  if (c < 0 || c >= static_cast<int>(binaries.size()) || binaries[c].disease != c) {
    throw std::invalid_argument("no binary model for disease " + std::to_string(c));
  }
  return binaries[c];
}

struct Scored {
  double probability;
  nn::Heatmap<float> cam;
};

Scored score(const nn::BinaryModel<float>& model, const Sample& s) {
  const auto fm = nn::forward_features(s.pixels, model.trunk);
  return {nn::classify_binary(fm, model.head).second, nn::binary_cam(fm, model)};
}

}  // namespace

Eigen::VectorXf label_vector(const Sample& s, int num_classes) {
  Eigen::VectorXf y = Eigen::VectorXf::Zero(num_classes);
  for (int c : s.labels) {
    if (c < num_classes) y(c) = 1.0f;
  }
  return y;
}

SeedSet harvest_initial_seeds(const std::vector<Sample>& train, const BinaryModels& binaries, double threshold,
                              bool use_severity) {
  SeedSet seeds;
  for (const auto& s : train) {
    for (int c : s.labels) {
      const auto& model = binary_for(binaries, c);
      const auto it = s.dsl.find(c);
      const bool s1 = use_severity && it != s.dsl.end() && it->second != Severity::mild;
      Scored sc = score(model, s);
      const bool s2 = sc.probability > threshold;
      if (!s1 && !s2) continue;
      seeds.add({s.id, c, s1 ? Provenance::s1_severity : Provenance::s2_confidence, 0, sc.probability,
                 std::move(sc.cam)});
    }
  }
  if (seeds.size() == 0) log::warn("seed_set_empty", {{"threshold", threshold}});
  nlohmann::json per = nlohmann::json::object();
  for (int c : seeds.diseases()) per[std::to_string(c)] = seeds.size(c);
  log::info("seeds_harvested", {{"iteration", 0}, {"total", seeds.size()}, {"per_disease", per}});
  return seeds;
}

std::map<int, int> harvest_additional_seeds(SeedSet& seeds, const std::vector<Sample>& train,
                                            const BinaryModels& binaries, double threshold, int iteration) {
  std::map<int, int> added;
  for (const auto& s : train) {
    for (int c : s.labels) {
      if (seeds.contains(s.id, c)) continue;
      Scored sc = score(binary_for(binaries, c), s);
      if (sc.probability > threshold) {
        seeds.add({s.id, c, Provenance::additional, iteration, sc.probability, std::move(sc.cam)});
        ++added[c];
      }
    }
  }
  seeds.iteration = iteration;
  int total = 0;
  for (const auto& [c, n] : added) total += n;
  log::info("seeds_harvested", {{"iteration", iteration}, {"added", total}, {"total", seeds.size()}});
  return added;
}

void refresh_attention_maps(SeedSet& seeds, const std::vector<Sample>& train, const BinaryModels& binaries) {
  for (const auto& s : train) {
    for (int c : s.labels) {
      SeedRecord* r = seeds.find(s.id, c);
      if (!r) continue;
      const auto fm = nn::forward_features(s.pixels, binary_for(binaries, c).trunk);
      r->attention = nn::binary_cam(fm, binaries[c]);
    }
  }
}

namespace {

double best_val_loss(const std::vector<nn::EpochStats>& stats) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : stats) best = std::min(best, e.val_loss.value_or(best));
  return stats.empty() ? 0.0 : best;
}

}  // namespace

double validation_loss(const nn::MultiLabelModel<float>& model, const std::vector<Sample>& val) {
  if (val.empty()) return 0.0;
  double total = 0.0;
  const int C = model.num_classes();
  for (const auto& s : val) {
    total += nn::multilabel_objective<float>(model, s.pixels, label_vector(s, C), {}, 0.0, nullptr);
  }
  return total / static_cast<double>(val.size());
}

namespace {

nn::MultiLabelModel<float> fit_multilabel(const nn::MultiLabelModel<float>& start, const std::vector<Sample>& train,
                                          const std::vector<Sample>& val, const SeedSet& seeds,
                                          const nn::TrainConfig& config, Rng& rng,
                                          std::vector<nn::EpochStats>* history) {
  config.validate();
  const int C = start.num_classes();
  std::vector<Eigen::VectorXf> labels;
  std::vector<std::vector<nn::SeedTarget<float>>> targets;
  std::size_t seeded = 0;
  for (const auto& s : train) {
    labels.push_back(label_vector(s, C));
    targets.push_back(seeds.targets_for(s.id, C));
    if (!targets.back().empty()) ++seeded;
  }
  nn::MultiLabelModel<float> model = start;
  const auto objective = [&](std::size_t i, nn::MultiLabelModel<float>* grad, float scale) {
    return nn::multilabel_objective<float>(model, train[i].pixels, labels[i], targets[i], config.lambda, grad,
                                           scale);
  };
  const auto val_loss = [&](const nn::MultiLabelModel<float>& m) { return validation_loss(m, val); };
  auto stats = nn::fit_until_plateau(model, train.size(), objective, val_loss, config, rng);
  log::info("refine_done", {{"epochs", stats.size()},
                            {"seeded_images", seeded},
                            {"seed_pairs", seeds.size()},
                            {"best_val_loss", best_val_loss(stats)}});
  if (history) *history = std::move(stats);
  return model;
}

}  // namespace

nn::MultiLabelModel<float> refine(const nn::MultiLabelModel<float>& start, const std::vector<Sample>& train,
                                  const std::vector<Sample>& val, const SeedSet& seeds,
                                  const nn::TrainConfig& config, Rng& rng, std::vector<nn::EpochStats>* history) {
  return fit_multilabel(start, train, val, seeds, nn::finetune_phase(config), rng, history);
}

nn::MultiLabelModel<float> train_baseline(const nn::ModelConfig& model_config, const std::vector<Sample>& train,
                                          const std::vector<Sample>& val, const nn::TrainConfig& config, Rng& rng,
                                          std::vector<nn::EpochStats>* history) {
  const auto init = nn::init_multilabel<float>(model_config, rng);
  return fit_multilabel(init, train, val, SeedSet{}, config, rng, history);
}

}  // namespace agcl::seeds
