#pragma once

#include "agcl/pipeline/config.hpp"
#include "agcl/seeds/loop.hpp"
#include "agcl/text/miner.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace agcl::pipeline {

struct StageReportFiles {
  std::string stage;
  std::filesystem::path auc;           // auc.json
  std::filesystem::path localization;  // localization.json
};

/// Everything a run left on disk. Paths are relative to `root`, except
/// report files, which are resolved against it in memory.
struct RunManifest {
  std::filesystem::path root;
  nlohmann::json config;
  std::string config_hash;
  std::string status = "running";  // running | complete | failed
  std::string error;
  std::filesystem::path dataset;                        // manifest.jsonl
  std::map<std::string, std::filesystem::path> checkpoints;  // multi-label stages
  std::map<std::string, std::filesystem::path> binaries;     // directories of per-disease checkpoints
  std::map<std::string, std::filesystem::path> seeds;        // seed store directories
  std::vector<StageReportFiles> reports;                // execution order
  std::vector<seeds::SeedCount> seed_counts;
  bool s1_complete = true;
  std::map<std::string, double> seconds;  // wall clock per stage; excluded from comparisons

  /// Throws if a listed artifact is missing.
  void check_artifacts() const;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root);
RunManifest read_run_manifest(const std::filesystem::path& path);
void write_run_manifest(const RunManifest& m);  // <root>/run.json

/// Loads `config.manifest` or generates the dataset (writing it under
/// <out>/data), optionally re-mining DSL from the reports.
synth::Dataset prepare_dataset(const ExperimentConfig& config, std::filesystem::path* manifest_path = nullptr);

/// Replaces each sample's DSL with what the lexicon mines from its report.
/// Returns the number of samples whose DSL changed.
int apply_mined_dsl(synth::Dataset& data, const text::Lexicon& lexicon);

/// Baseline, AGL and AGCL stages in order under `config.out_dir`. Stages
/// whose artifacts already exist are loaded instead of recomputed. On
/// failure the partial manifest is written with status "failed" and the
/// error rethrown.
RunManifest run(const ExperimentConfig& config);

/// Writes <dir>/auc.json, localization.json, auc.txt, localization.txt.
StageReportFiles write_report(const eval::EvalReport& report, const std::filesystem::path& dir);
eval::EvalReport read_report(const StageReportFiles& files);

/// Atomic text write (temp file + rename).
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace agcl::pipeline
