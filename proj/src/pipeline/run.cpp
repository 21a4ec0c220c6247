#include "agcl/pipeline/run.hpp"
#include "agcl/log.hpp"
#include "agcl/nn/checkpoint.hpp"
#include "agcl/seeds/seed_set.hpp"
#include "agcl/synth/io.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace agcl::pipeline {

namespace {

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return nlohmann::json::parse(in);
}

// Replaces `target` with a freshly written directory in one rename.
template <typename Fn>
void write_directory(const fs::path& target, Fn&& fill) {
  const fs::path tmp = target.string() + ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  fill(tmp);
  fs::remove_all(target);
  fs::rename(tmp, target);
}

class DiskStore : public seeds::StageStore {
 public:
  DiskStore(RunManifest& manifest, nlohmann::json config) : m_(manifest), config_(std::move(config)) {}

  std::optional<nn::MultiLabelModel<float>> load_model(const std::string& name) override {
    const fs::path rel = fs::path("checkpoints") / (name + ".ckpt");
    if (!fs::exists(m_.root / rel)) return std::nullopt;
    auto model = nn::load_multilabel(m_.root / rel);
    m_.checkpoints[name] = rel;
    lap(name, true);
    return model;
  }

  void save_model(const std::string& name, const nn::MultiLabelModel<float>& model,
                  const nlohmann::json& info) override {
    const fs::path rel = fs::path("checkpoints") / (name + ".ckpt");
    fs::create_directories(m_.root / "checkpoints");
    nn::CheckpointMeta meta;
    meta.config = config_;
    meta.extra = info;
    if (info.contains("history")) meta.epoch = static_cast<int>(info["history"].size());
    const fs::path tmp = m_.root / (rel.string() + ".partial");
    nn::save_checkpoint(tmp, model, meta);
    fs::rename(tmp, m_.root / rel);
    m_.checkpoints[name] = rel;
    lap(name, false);
  }

  std::optional<seeds::BinaryModels> load_binaries(const std::string& tag) override {
    const fs::path rel = fs::path("binaries") / tag;
    if (!fs::exists(m_.root / rel / "logs.json")) return std::nullopt;
    seeds::BinaryModels models;
    for (int c = 0; fs::exists(m_.root / rel / disease_file(c)); ++c) {
      models.push_back(nn::load_binary(m_.root / rel / disease_file(c)));
    }
    m_.binaries[tag] = rel;
    lap("binaries-" + tag, true);
    return models;
  }

  void save_binaries(const std::string& tag, const seeds::BinaryModels& models, const nlohmann::json& logs) override {
    const fs::path rel = fs::path("binaries") / tag;
    write_directory(m_.root / rel, [&](const fs::path& dir) {
      for (std::size_t c = 0; c < models.size(); ++c) {
        nn::CheckpointMeta meta;
        meta.config = config_;
        if (logs.is_array() && c < logs.size()) meta.extra = logs[c];
        nn::save_checkpoint(dir / disease_file(static_cast<int>(c)), models[c], meta);
      }
      std::ofstream(dir / "logs.json") << logs.dump(2) << "\n";
    });
    m_.binaries[tag] = rel;
    lap("binaries-" + tag, false);
  }

  std::optional<seeds::SeedSet> load_seeds(const std::string& tag) override {
    const fs::path rel = fs::path("seeds") / tag;
    if (!fs::exists(m_.root / rel)) return std::nullopt;
    m_.seeds[tag] = rel;
    return seeds::load_seed_set(m_.root / rel);
  }

  void save_seeds(const std::string& tag, const seeds::SeedSet& s) override {
    const fs::path rel = fs::path("seeds") / tag;
    write_directory(m_.root / rel, [&](const fs::path& dir) { seeds::save_seed_set(s, dir); });
    m_.seeds[tag] = rel;
    lap("seeds-" + tag, false);
  }

  void save_report(const eval::EvalReport& report) override {
    const StageReportFiles files = write_report(report, m_.root / "reports" / report.stage);
    std::erase_if(m_.reports, [&](const StageReportFiles& f) { return f.stage == report.stage; });
    m_.reports.push_back(files);
    lap("evaluate-" + report.stage, false);
    write_run_manifest(m_);
  }

  void lap(const std::string& what, bool resumed) {
    const auto now = std::chrono::steady_clock::now();
    if (!resumed) m_.seconds[what] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  static std::string disease_file(int c) { return "disease_" + std::to_string(c) + ".ckpt"; }

  RunManifest& m_;
  nlohmann::json config_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

nlohmann::json seed_count_json(const seeds::SeedCount& s) {
  return {{"stage", s.stage}, {"total", s.total}, {"per_disease", s.per_disease}};
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

StageReportFiles write_report(const eval::EvalReport& report, const fs::path& dir) {
  StageReportFiles f{report.stage, dir / "auc.json", dir / "localization.json"};
  write_text(f.auc, eval::auc_json(report).dump(2) + "\n");
  write_text(f.localization, eval::localization_json(report).dump(2) + "\n");
  write_text(dir / "auc.txt", eval::auc_table(report));
  write_text(dir / "localization.txt", eval::localization_table(report));
  return f;
}

eval::EvalReport read_report(const StageReportFiles& files) {
  return eval::report_from_json(read_json(files.auc), read_json(files.localization));
}

void RunManifest::check_artifacts() const {
  const auto need = [&](const fs::path& rel) {
    if (!fs::exists(root / rel)) throw std::runtime_error("manifest artifact missing: " + (root / rel).string());
  };
  if (!dataset.empty()) need(dataset);
  for (const auto& [k, p] : checkpoints) need(p);
  for (const auto& [k, p] : binaries) need(p);
  for (const auto& [k, p] : seeds) need(p);
  for (const auto& r : reports) need(r.auc), need(r.localization);
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : m.reports) {
    reports.push_back({{"stage", r.stage},
                       {"auc", fs::relative(r.auc, m.root).string()},
                       {"localization", fs::relative(r.localization, m.root).string()}});
  }
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& s : m.seed_counts) counts.push_back(seed_count_json(s));
  const auto paths = [](const std::map<std::string, fs::path>& p) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : p) j[k] = v.string();
    return j;
  };
  return {{"status", m.status},
          {"error", m.error},
          {"config", m.config},
          {"config_hash", m.config_hash},
          {"dataset", m.dataset.string()},
          {"checkpoints", paths(m.checkpoints)},
          {"binaries", paths(m.binaries)},
          {"seeds", paths(m.seeds)},
          {"reports", reports},
          {"seed_counts", counts},
          {"s1_complete", m.s1_complete},
          {"seconds", m.seconds}};
}

RunManifest manifest_from_json(const nlohmann::json& j, const fs::path& root) {
  RunManifest m;
  m.root = root;
  m.status = j.at("status").get<std::string>();
  m.error = j.value("error", "");
  m.config = j.at("config");
  m.config_hash = j.at("config_hash").get<std::string>();
  m.dataset = j.value("dataset", "");
  for (const char* key : {"checkpoints", "binaries", "seeds"}) {
    auto& dst = std::string(key) == "checkpoints" ? m.checkpoints : std::string(key) == "binaries" ? m.binaries : m.seeds;
    const nlohmann::json paths = j.value(key, nlohmann::json::object());
    for (const auto& [k, v] : paths.items()) dst[k] = v.get<std::string>();
  }
  for (const auto& r : j.at("reports")) {
    m.reports.push_back({r.at("stage").get<std::string>(), r.at("auc").get<std::string>(),
                         r.at("localization").get<std::string>()});
  }
  for (const auto& s : j.value("seed_counts", nlohmann::json::array())) {
    m.seed_counts.push_back({s.at("stage").get<std::string>(), s.at("total").get<std::size_t>(),
                             s.at("per_disease").get<std::vector<std::size_t>>()});
  }
  m.s1_complete = j.value("s1_complete", true);
  m.seconds = j.value("seconds", std::map<std::string, double>{});
  return m;
}

RunManifest read_run_manifest(const fs::path& path) {
  const fs::path file = fs::absolute(fs::is_directory(path) ? path / "run.json" : path);
  RunManifest m = manifest_from_json(read_json(file), file.parent_path());
  // report paths are relative to the run root
  for (auto& r : m.reports) r.auc = m.root / r.auc, r.localization = m.root / r.localization;
  return m;
}

void write_run_manifest(const RunManifest& m) { write_text(m.root / "run.json", to_json(m).dump(2) + "\n"); }

int apply_mined_dsl(synth::Dataset& data, const text::Lexicon& lexicon) {
  int changed = 0;
  for (auto* split : {&data.train, &data.val, &data.test}) {
    for (auto& s : *split) {
      if (!s.report) continue;
      auto dsl = text::assign_dsl(text::parse_report(*s.report, lexicon));
      // a mined severity for an unlabeled disease carries no training signal
      std::erase_if(dsl, [&](const auto& kv) { return !s.has_label(kv.first); });
      if (dsl != s.dsl) ++changed;
      s.dsl = std::move(dsl);
    }
  }
  return changed;
}

synth::Dataset prepare_dataset(const ExperimentConfig& config, fs::path* manifest_path) {
  synth::Dataset data;
  fs::path manifest = config.manifest;
  if (!manifest.empty()) {
    data = synth::read_dataset(manifest);
  } else {
    data = synth::generate_dataset(config.data);
    const fs::path dir = config.out_dir / "data";
    manifest = dir / "manifest.jsonl";
    const fs::path echo = dir / "config.echo.json";
    if (!fs::exists(manifest) || !fs::exists(echo) || read_json(echo) != synth::to_json(config.data)) {
      write_directory(dir, [&](const fs::path& tmp) { synth::write_dataset(data, config.data, tmp); });
    }
  }
  const int C = static_cast<int>(data.disease_names.size());
  const text::Lexicon lexicon =
      config.lexicon.empty() ? text::default_lexicon(C) : text::lexicon_from_json(read_json(config.lexicon));
  const int changed = apply_mined_dsl(data, lexicon);
  log::info("dataset_ready", {{"manifest", manifest.string()},
                              {"train", data.train.size()},
                              {"val", data.val.size()},
                              {"test", data.test.size()},
                              {"dsl_changed_by_mining", changed}});
  if (manifest_path) *manifest_path = manifest;
  return data;
}

RunManifest run(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  RunManifest m;
  m.root = fs::absolute(config.out_dir);
  m.config = to_json(config);
  m.config.erase("out_dir");  // relocating a run does not change its identity
  m.config_hash = fingerprint(m.config);
  if (fs::exists(m.root / "run.json")) {
    const RunManifest previous = read_run_manifest(m.root);
    if (previous.config_hash != m.config_hash) {
      throw std::runtime_error("output directory " + m.root.string() + " holds a run with a different config (" +
                               previous.config_hash + " vs " + m.config_hash + ")");
    }
    m.seconds = previous.seconds;
    log::info("run_resume", {{"out", m.root.string()}});
  }
  write_run_manifest(m);
  DiskStore store(m, m.config);
  try {
    fs::path manifest;
    const synth::Dataset data = prepare_dataset(config, &manifest);
    m.dataset = fs::relative(manifest, m.root);
    if (m.dataset.string().starts_with("..")) m.dataset = fs::absolute(manifest);
    seeds::LoopConfig lc = loop_config(config);
    if (data.train.empty()) throw std::invalid_argument("dataset has no training samples");
    if (lc.model.num_classes != static_cast<int>(data.disease_names.size()) ||
        lc.model.input_size != data.train.front().pixels.rows()) {
      throw std::invalid_argument("model config does not match the dataset");
    }
    const seeds::LoopResult result = seeds::agcl_loop(lc, data, store);
    m.seed_counts = result.seed_counts;
    m.s1_complete = result.s1_complete;
    m.status = "complete";
    m.check_artifacts();
    write_run_manifest(m);
    log::info("run_complete", {{"out", m.root.string()}, {"reports", m.reports.size()}});
  } catch (const std::exception& e) {
    m.status = "failed";
    m.error = e.what();
    write_run_manifest(m);
    log::event(log::Level::error, "run_failed", {{"error", e.what()}});
    throw;
  }
  return m;
}

}  // namespace agcl::pipeline
