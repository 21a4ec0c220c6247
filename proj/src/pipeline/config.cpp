#include "agcl/pipeline/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace fs = std::filesystem;

namespace agcl::pipeline {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw std::invalid_argument(where + ": unknown key '" + k + "'");
  }
}

std::set<std::string> keys_of(const nlohmann::json& j) {
  std::set<std::string> out;
  for (const auto& [k, v] : j.items()) out.insert(k);
  return out;
}

nn::ModelConfig model_from_json(const nlohmann::json& j) {
  nn::ModelConfig c;
  reject_unknown(j, keys_of(to_json(c)), "model");
  c.input_size = j.value("input_size", c.input_size);
  c.widths = j.value("widths", c.widths);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.input_mean = j.value("input_mean", c.input_mean);
  c.input_scale = j.value("input_scale", c.input_scale);
  c.head_init_std = j.value("head_init_std", c.head_init_std);
  return c;
}

nn::TrainConfig train_from_json(const nlohmann::json& j) {
  nn::TrainConfig c;
  reject_unknown(j, keys_of(to_json(c)), "train");
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.finetune_learning_rate = j.value("finetune_learning_rate", c.finetune_learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.lr_decay_every = j.value("lr_decay_every", c.lr_decay_every);
  c.lambda = j.value("lambda", c.lambda);
  c.seed_threshold = j.value("seed_threshold", c.seed_threshold);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.baseline_max_epochs = j.value("baseline_max_epochs", c.baseline_max_epochs);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  c.stage_epochs = j.value("stage_epochs", c.stage_epochs);
  return c;
}

eval::EvalConfig eval_from_json(const nlohmann::json& j) {
  eval::EvalConfig c;
  reject_unknown(j, keys_of(to_json(c)), "eval");
  c.binarize_fraction = j.value("binarize_fraction", c.binarize_fraction);
  c.iobb_threshold = j.value("iobb_threshold", c.iobb_threshold);
  c.min_component_cells = j.value("min_component_cells", c.min_component_cells);
  return c;
}

}  // namespace

nlohmann::json to_json(const nn::ModelConfig& c) {
  return {{"input_size", c.input_size}, {"widths", c.widths},         {"num_classes", c.num_classes},
          {"input_mean", c.input_mean}, {"input_scale", c.input_scale}, {"head_init_std", c.head_init_std}};
}

nlohmann::json to_json(const nn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"finetune_learning_rate", c.finetune_learning_rate},
          {"momentum", c.momentum},
          {"lr_decay_every", c.lr_decay_every},
          {"lambda", c.lambda},
          {"seed_threshold", c.seed_threshold},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"baseline_max_epochs", c.baseline_max_epochs},
          {"plateau_patience", c.plateau_patience},
          {"stage_epochs", c.stage_epochs}};
}

nlohmann::json to_json(const eval::EvalConfig& c) {
  return {{"binarize_fraction", c.binarize_fraction},
          {"iobb_threshold", c.iobb_threshold},
          {"min_component_cells", c.min_component_cells}};
}

void ExperimentConfig::reseed(std::uint64_t s) {
  seed = s;
  data.seed = s;
}

void ExperimentConfig::validate() const {
  data.validate();
  model.validate();
  train.validate();
  eval.validate();
  if (stages.iterations < 0) throw std::invalid_argument("stages.iterations must be >= 0");
  if (model.num_classes != data.num_classes && manifest.empty()) {
    throw std::invalid_argument("model.num_classes differs from data.num_classes");
  }
  if (model.input_size != data.image_size && manifest.empty()) {
    throw std::invalid_argument("model.input_size differs from data.image_size");
  }
  if (!manifest.empty() && !fs::exists(manifest)) throw std::invalid_argument("manifest not found: " + manifest.string());
  if (!lexicon.empty() && !fs::exists(lexicon)) throw std::invalid_argument("lexicon not found: " + lexicon.string());
  if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"data", synth::to_json(c.data)},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"eval", to_json(c.eval)},
          {"stages", {{"curriculum", c.stages.curriculum}, {"agl", c.stages.agl}, {"iterations", c.stages.iterations}}},
          {"out_dir", c.out_dir.string()},
          {"manifest", c.manifest.string()},
          {"lexicon", c.lexicon.string()},
          {"seed", c.seed}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  reject_unknown(j, keys_of(to_json(c)), "config");
  const auto section = [&](const char* key) { return j.contains(key) ? j.at(key) : nlohmann::json::object(); };
  {
    const auto d = section("data");
    reject_unknown(d, keys_of(synth::to_json(c.data)), "data");
    c.data = synth::dataset_config_from_json(d);
  }
  c.model = model_from_json(section("model"));
  c.train = train_from_json(section("train"));
  c.eval = eval_from_json(section("eval"));
  const auto st = section("stages");
  reject_unknown(st, {"curriculum", "agl", "iterations"}, "stages");
  c.stages.curriculum = st.value("curriculum", c.stages.curriculum);
  c.stages.agl = st.value("agl", c.stages.agl);
  c.stages.iterations = st.value("iterations", c.stages.iterations);
  c.out_dir = j.value("out_dir", c.out_dir.string());
  c.manifest = j.value("manifest", std::string());
  c.lexicon = j.value("lexicon", std::string());
  c.seed = j.value("seed", c.seed);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  ExperimentConfig c = experiment_config_from_json(j);
  // relative paths inside a config file resolve against its directory
  const auto rebase = [&](fs::path& p) {
    if (!p.empty() && p.is_relative()) p = path.parent_path() / p;
  };
  rebase(c.manifest);
  rebase(c.lexicon);
  return c;
}

std::string fingerprint(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

seeds::LoopConfig loop_config(const ExperimentConfig& c) {
  seeds::LoopConfig lc;
  lc.model = c.model;
  lc.train = c.train;
  lc.eval = c.eval;
  lc.iterations = c.stages.iterations;
  lc.agl = c.stages.agl;
  lc.curriculum = c.stages.curriculum;
  lc.seed = derive_seed(c.seed, "loop");
  return lc;
}

}  // namespace agcl::pipeline
