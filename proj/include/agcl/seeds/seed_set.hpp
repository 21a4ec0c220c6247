#pragma once

#include "agcl/nn/loss.hpp"
#include "agcl/nn/model.hpp"
#include "agcl/sample.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace agcl::seeds {

enum class Provenance { s1_severity, s2_confidence, additional };

std::string provenance_name(Provenance p, int iteration_added);
Provenance provenance_from_name(std::string_view name);

/// A confident (image, disease) pair and its stored attention map, the
/// regression target of the heatmap path.
struct SeedRecord {
  std::string sample_id;
  int disease = 0;
  Provenance provenance = Provenance::s1_severity;
  int iteration_added = 0;
  double probability = 0.0;  // binary-classifier score when harvested
  nn::Heatmap<float> attention;
};

/// Seeds per disease, at most one record per (sample, disease). Grows
/// monotonically; records are never removed.
class SeedSet {
 public:
  int iteration = 0;

  bool contains(const std::string& sample_id, int disease) const;
  const SeedRecord* find(const std::string& sample_id, int disease) const;
  SeedRecord* find(const std::string& sample_id, int disease);

  /// False (and no change) if the pair is already a seed.
  bool add(SeedRecord record);

  std::size_t size() const;
  std::size_t size(int disease) const;
  std::vector<int> diseases() const;
  const std::map<std::string, SeedRecord>& records(int disease) const;

  /// Per-class regression targets for one image: flagged entries point at the
  /// stored maps. Empty vector when the image is not a seed for any class.
  std::vector<nn::SeedTarget<float>> targets_for(const std::string& sample_id, int num_classes) const;

 private:
  std::map<int, std::map<std::string, SeedRecord>> by_disease_;
};

/// On-disk layout: <dir>/index.json, <dir>/disease_<c>.json and one
/// shape-tagged binary map per record under <dir>/maps/.
void save_seed_set(const SeedSet& seeds, const std::filesystem::path& dir);
SeedSet load_seed_set(const std::filesystem::path& dir);

/// Heatmap file: "AGHM" | i32 class | i32 height | i32 width | float32 row-major.
void write_heatmap(const std::filesystem::path& path, const nn::Heatmap<float>& h);
nn::Heatmap<float> read_heatmap(const std::filesystem::path& path);

}  // namespace agcl::seeds
