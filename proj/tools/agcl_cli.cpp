#include "agcl/curriculum/curriculum.hpp"
#include "agcl/eval/overlay.hpp"
#include "agcl/eval/report.hpp"
#include "agcl/log.hpp"
#include "agcl/nn/checkpoint.hpp"
#include "agcl/nn/heads.hpp"
#include "agcl/pipeline/compare.hpp"
#include "agcl/pipeline/config.hpp"
#include "agcl/pipeline/run.hpp"
#include "agcl/seeds/harvest.hpp"
#include "agcl/seeds/loop.hpp"
#include "agcl/synth/io.hpp"
#include "agcl/text/miner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace agcl;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string manifest;
  std::string log_level = "info";
};

pipeline::ExperimentConfig experiment(const Common& o) {
  pipeline::ExperimentConfig c = o.config.empty() ? pipeline::ExperimentConfig{} : pipeline::load_experiment_config(o.config);
  if (o.seed_given) c.reseed(o.seed);
  if (!o.out.empty()) c.out_dir = o.out;
  if (!o.manifest.empty()) c.manifest = o.manifest;
  return c;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return nlohmann::json::parse(in);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw CLI::RequiredError(flag);
}

// DSL from a mine-reports jsonl replaces the manifest's.
void apply_dsl_file(synth::Dataset& data, const std::string& path) {
  if (path.empty()) return;
  std::map<std::string, std::map<int, Severity>> mined;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    auto& dsl = mined[j.at("id").get<std::string>()];
    for (const auto& [k, v] : j.at("dsl").items()) dsl[std::stoi(k)] = severity_from_string(v.get<std::string>());
  }
  for (auto* split : {&data.train, &data.val, &data.test}) {
    for (auto& s : *split) {
      if (auto it = mined.find(s.id); it != mined.end()) s.dsl = it->second;
    }
  }
}

seeds::BinaryModels load_binaries(const fs::path& dir) {
  seeds::BinaryModels out;
  for (int c = 0; fs::exists(dir / ("disease_" + std::to_string(c) + ".ckpt")); ++c) {
    out.push_back(nn::load_binary(dir / ("disease_" + std::to_string(c) + ".ckpt")));
  }
  if (out.empty()) throw std::runtime_error("no disease_<c>.ckpt files under " + dir.string());
  return out;
}

nlohmann::json history_json(const std::vector<nn::EpochStats>& h) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : h) j.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", *e.val_loss}});
  return j;
}

void save_multilabel(const fs::path& dir, const std::string& name, const nn::MultiLabelModel<float>& m,
                     const pipeline::ExperimentConfig& cfg, const std::vector<nn::EpochStats>& history) {
  fs::create_directories(dir);
  nn::CheckpointMeta meta;
  meta.config = pipeline::to_json(cfg);
  meta.epoch = static_cast<int>(history.size());
  meta.extra = {{"history", history_json(history)}};
  nn::save_checkpoint(dir / (name + ".ckpt"), m, meta);
  log::info("checkpoint_written", {{"path", (dir / (name + ".ckpt")).string()}});
}

int cmd_generate(const Common& o) {
  require(o.out, "--out");
  auto cfg = experiment(o);
  synth::write_dataset(synth::generate_dataset(cfg.data), cfg.data, o.out);
  log::info("dataset_written", {{"dir", o.out}, {"seed", cfg.data.seed}});
  return 0;
}

int cmd_mine(const Common& o, const std::string& lexicon_path) {
  require(o.manifest, "--manifest");
  require(o.out, "--out");
  const synth::Dataset data = synth::read_dataset(o.manifest);
  const int C = static_cast<int>(data.disease_names.size());
  const text::Lexicon lex = lexicon_path.empty() ? text::default_lexicon(C) : text::lexicon_from_json(read_json(lexicon_path));
  std::ostringstream out;
  long agree = 0, total = 0;
  for (const auto* split : {&data.train, &data.val, &data.test}) {
    for (const auto& s : *split) {
      if (!s.report) continue;
      const auto dsl = text::assign_dsl(text::parse_report(*s.report, lex));
      nlohmann::json d = nlohmann::json::object();
      for (const auto& [c, sev] : dsl) d[std::to_string(c)] = std::string(to_string(sev));
      out << nlohmann::json{{"id", s.id}, {"dsl", d}}.dump() << "\n";
      ++total;
      agree += dsl == s.dsl;
    }
  }
  pipeline::write_text(o.out, out.str());
  log::info("reports_mined", {{"reports", total}, {"matching_manifest_dsl", agree}, {"out", o.out}});
  return 0;
}

int cmd_train_baseline(const Common& o) {
  auto cfg = experiment(o);
  require(o.out, "--out");
  synth::Dataset data = pipeline::prepare_dataset(cfg);
  nn::TrainConfig tc = cfg.train;
  tc.max_epochs = tc.baseline_max_epochs;
  Rng rng(derive_seed(pipeline::loop_config(cfg).seed, "baseline"));
  std::vector<nn::EpochStats> history;
  const auto model = seeds::train_baseline(cfg.model, data.train, data.val, tc, rng, &history);
  save_multilabel(o.out, "baseline", model, cfg, history);
  return 0;
}

int cmd_curriculum(const Common& o, const std::string& disease, const std::string& baseline, bool no_curriculum,
                   const std::string& dsl_file) {
  require(o.manifest, "--manifest");
  require(baseline, "--baseline");
  require(o.out, "--out");
  const auto cfg = experiment(o);
  synth::Dataset data = synth::read_dataset(o.manifest);
  apply_dsl_file(data, dsl_file);
  const auto start = nn::load_multilabel(baseline);
  const int C = static_cast<int>(data.disease_names.size());
  std::vector<int> diseases;
  if (disease == "all") {
    for (int c = 0; c < C; ++c) diseases.push_back(c);
  } else {
    diseases.push_back(std::stoi(disease));
    if (diseases[0] < 0 || diseases[0] >= C) throw std::invalid_argument("--disease out of range");
  }
  fs::create_directories(o.out);
  const std::uint64_t seed = derive_seed(pipeline::loop_config(cfg).seed, no_curriculum ? "binaries-agl" : "binaries-cli");
  for (int c : diseases) {
    Rng rng(derive_seed(seed, "binary", static_cast<std::uint64_t>(c)));
    const auto stages = curriculum::build_curriculum(data.train, c, cfg.train.stage_epochs, rng, !no_curriculum);
    curriculum::TrainingLog tlog;
    const fs::path ckpt = fs::path(o.out) / ("disease_" + std::to_string(c) + ".ckpt");
    const auto model = curriculum::finetune_binary(start.trunk, c, stages, data.train, data.val, cfg.train, rng, &tlog,
                                                   fs::path(o.out) / ("disease_" + std::to_string(c) + ".diverged.ckpt"));
    nn::CheckpointMeta meta;
    meta.config = pipeline::to_json(cfg);
    meta.extra = curriculum::to_json(tlog);
    nn::save_checkpoint(ckpt, model, meta);
    pipeline::write_text(fs::path(o.out) / ("disease_" + std::to_string(c) + ".log.json"),
                         curriculum::to_json(tlog).dump(2) + "\n");
    log::info("binary_written", {{"disease", c}, {"path", ckpt.string()}});
  }
  return 0;
}

int cmd_harvest(const Common& o, const std::string& binaries_dir, const std::string& previous, int iteration,
                bool no_severity, const std::string& dsl_file) {
  require(o.manifest, "--manifest");
  require(binaries_dir, "--binaries");
  require(o.out, "--out");
  const auto cfg = experiment(o);
  synth::Dataset data = synth::read_dataset(o.manifest);
  apply_dsl_file(data, dsl_file);
  const auto binaries = load_binaries(binaries_dir);
  seeds::SeedSet s;
  if (previous.empty()) {
    s = seeds::harvest_initial_seeds(data.train, binaries, cfg.train.seed_threshold, !no_severity);
  } else {
    s = seeds::load_seed_set(previous);
    seeds::refresh_attention_maps(s, data.train, binaries);
    seeds::harvest_additional_seeds(s, data.train, binaries, cfg.train.seed_threshold, iteration);
  }
  seeds::save_seed_set(s, o.out);
  log::info("seeds_written", {{"dir", o.out}, {"total", s.size()}});
  return 0;
}

int cmd_refine(const Common& o, const std::string& start_path, const std::string& seeds_dir, const std::string& name) {
  require(o.manifest, "--manifest");
  require(start_path, "--start");
  require(seeds_dir, "--seeds");
  require(o.out, "--out");
  const auto cfg = experiment(o);
  const synth::Dataset data = synth::read_dataset(o.manifest);
  const auto start = nn::load_multilabel(start_path);
  const auto s = seeds::load_seed_set(seeds_dir);
  Rng rng(derive_seed(pipeline::loop_config(cfg).seed, "refine-cli", static_cast<std::uint64_t>(s.iteration)));
  std::vector<nn::EpochStats> history;
  const auto model = seeds::refine(start, data.train, data.val, s, cfg.train, rng, &history);
  save_multilabel(o.out, name, model, cfg, history);
  return 0;
}

int cmd_run(Common o, int iterations, const std::string& ablation, bool no_curriculum) {
  auto cfg = experiment(o);
  if (iterations >= 0) cfg.stages.iterations = iterations;
  if (ablation == "agl") cfg.stages.agl = true;
  else if (ablation == "none") cfg.stages.agl = false;
  else if (!ablation.empty()) throw std::invalid_argument("--ablation must be 'agl' or 'none'");
  if (no_curriculum) cfg.stages.curriculum = false;
  const auto m = pipeline::run(cfg);
  if (m.reports.size() >= 2) pipeline::write_comparison(pipeline::compare_stages(m), m.root / "compare");
  std::cout << (m.root / "run.json").string() << "\n";
  return 0;
}

int cmd_evaluate(const Common& o, const std::string& ckpt, const std::string& stage, int overlays) {
  require(o.manifest, "--manifest");
  require(ckpt, "--ckpt");
  require(o.out, "--out");
  const auto cfg = experiment(o);
  const synth::Dataset data = synth::read_dataset(o.manifest);
  const auto model = nn::load_multilabel(ckpt);
  std::vector<eval::Detection> detections;
  const auto report = eval::build_report(model, data.test, data.disease_names, cfg.eval, stage, &detections);
  pipeline::write_report(report, o.out);
  std::cout << eval::auc_table(report) << "\n" << eval::localization_table(report);
  int written = 0;
  for (const auto& s : data.test) {
    if (written >= overlays) break;
    if (s.gt_boxes.empty()) continue;
    const auto fm = nn::forward_features(s.pixels, model.trunk);
    for (const auto& g : s.gt_boxes) {
      std::vector<BBox> dets;
      for (const auto& d : detections) {
        if (d.sample_id == s.id && d.disease == g.disease) dets.push_back(d.box);
      }
      const auto img = eval::render_overlay(s.pixels, nn::multilabel_cam(fm, model.head, g.disease), {g.box}, dets);
      fs::create_directories(fs::path(o.out) / "overlays");
      eval::write_rgb_png(fs::path(o.out) / "overlays" / (s.id + "-" + data.disease_names[g.disease] + ".png"), img);
    }
    ++written;
  }
  log::info("evaluation_written", {{"dir", o.out}, {"mean_auc", report.mean_auc().value_or(0.0)}, {"overlays", written}});
  return 0;
}

int cmd_compare(const Common& o, const std::string& run_dir, const std::vector<std::string>& report_dirs) {
  require(o.out, "--out");
  pipeline::Comparison c;
  if (!run_dir.empty()) {
    c = pipeline::compare_stages(pipeline::read_run_manifest(run_dir));
  } else {
    std::vector<eval::EvalReport> reports;
    for (const auto& d : report_dirs) {
      reports.push_back(pipeline::read_report({"", fs::path(d) / "auc.json", fs::path(d) / "localization.json"}));
    }
    c = pipeline::compare_stages(reports);
  }
  pipeline::write_comparison(c, o.out);
  std::cout << pipeline::comparison_table(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-guided curriculum learning on synthetic radiographs"};
  app.require_subcommand(1);
  Common o;
  const auto common = [&](CLI::App* sub, bool manifest) {
    sub->add_option("--config", o.config, "experiment config (JSON, comments allowed)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--seed", o.seed, "root seed (also the dataset seed)")->each([&](const std::string&) { o.seed_given = true; });
    sub->add_option("--log-level", o.log_level)->check(CLI::IsMember({"debug", "info", "warn", "error"}));
    if (manifest) sub->add_option("--manifest", o.manifest, "dataset manifest.jsonl")->check(CLI::ExistingFile);
  };

  auto* gen = app.add_subcommand("generate-data", "write a synthetic dataset");
  common(gen, false);

  std::string lexicon;
  auto* mine = app.add_subcommand("mine-reports", "extract severity levels from reports");
  common(mine, true);
  mine->add_option("--lexicon", lexicon, "lexicon JSON (default: built-in)")->check(CLI::ExistingFile);

  auto* base = app.add_subcommand("train-baseline", "train the multi-label baseline");
  common(base, true);

  std::string disease = "all", baseline, dsl_file;
  bool no_curriculum = false;
  auto* cur = app.add_subcommand("curriculum", "fine-tune per-disease binary networks");
  common(cur, true);
  cur->add_option("--disease", disease, "disease id or 'all'");
  cur->add_option("--baseline", baseline, "multi-label checkpoint")->check(CLI::ExistingFile);
  cur->add_flag("--no-curriculum", no_curriculum, "all positives at once");
  cur->add_option("--dsl", dsl_file, "mine-reports output overriding the manifest DSL")->check(CLI::ExistingFile);

  std::string binaries_dir, previous;
  int iteration = 1;
  bool no_severity = false;
  auto* harvest = app.add_subcommand("harvest-seeds", "harvest seed attention maps");
  common(harvest, true);
  harvest->add_option("--binaries", binaries_dir, "directory of disease_<c>.ckpt")->check(CLI::ExistingDirectory);
  harvest->add_option("--previous", previous, "seed store to refresh and extend")->check(CLI::ExistingDirectory);
  harvest->add_option("--iteration", iteration, "iteration number for additional seeds");
  harvest->add_flag("--no-severity", no_severity, "confidence seeds only");
  harvest->add_option("--dsl", dsl_file, "mine-reports output overriding the manifest DSL")->check(CLI::ExistingFile);

  std::string start_path, seeds_dir, name = "refined";
  auto* ref = app.add_subcommand("refine", "train the two-path network against seed maps");
  common(ref, true);
  ref->add_option("--start", start_path, "multi-label checkpoint to refine")->check(CLI::ExistingFile);
  ref->add_option("--seeds", seeds_dir, "seed store")->check(CLI::ExistingDirectory);
  ref->add_option("--name", name, "output checkpoint name");

  int iterations = -1;
  std::string ablation;
  auto* run = app.add_subcommand("run-agcl", "full pipeline, resumable");
  common(run, true);
  run->add_option("--iterations", iterations, "refinement iterations");
  run->add_option("--ablation", ablation, "'agl' to include the ablation, 'none' to skip it");
  run->add_flag("--no-curriculum", no_curriculum, "AGCL binaries without severity ordering");

  std::string ckpt, stage = "model";
  int overlays = 0;
  auto* ev = app.add_subcommand("evaluate", "AUC and localization on the test split");
  common(ev, true);
  ev->add_option("--ckpt", ckpt, "multi-label checkpoint")->check(CLI::ExistingFile);
  ev->add_option("--stage", stage, "stage label in the report");
  ev->add_option("--overlays", overlays, "heatmap overlays for this many boxed test images");

  std::string run_dir;
  std::vector<std::string> report_dirs;
  auto* cmp = app.add_subcommand("compare", "side-by-side stage comparison");
  common(cmp, false);
  cmp->add_option("--run", run_dir, "run directory (run.json)")->check(CLI::ExistingPath);
  cmp->add_option("--reports", report_dirs, "report directories in stage order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }
  static const std::map<std::string, log::Level> levels = {
      {"debug", log::Level::debug}, {"info", log::Level::info}, {"warn", log::Level::warn}, {"error", log::Level::error}};
  log::set_level(levels.at(o.log_level));

  try {
    if (*gen) return cmd_generate(o);
    if (*mine) return cmd_mine(o, lexicon);
    if (*base) return cmd_train_baseline(o);
    if (*cur) return cmd_curriculum(o, disease, baseline, no_curriculum, dsl_file);
    if (*harvest) return cmd_harvest(o, binaries_dir, previous, iteration, no_severity, dsl_file);
    if (*ref) return cmd_refine(o, start_path, seeds_dir, name);
    if (*run) return cmd_run(o, iterations, ablation, no_curriculum);
    if (*ev) return cmd_evaluate(o, ckpt, stage, overlays);
    if (*cmp) {
      if (run_dir.empty() && report_dirs.size() < 2) throw std::invalid_argument("compare needs --run or two --reports");
      return cmd_compare(o, run_dir, report_dirs);
    }
  } catch (const CLI::Error& e) {
    log::event(log::Level::error, "usage", {{"error", e.what()}});
    return 2;
  } catch (const std::exception& e) {
    log::event(log::Level::error, "failed", {{"error", e.what()}});
    return 1;
  }
  return 0;
}
