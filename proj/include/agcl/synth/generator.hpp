#pragma once

#include "agcl/rng.hpp"
#include "agcl/sample.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace agcl::synth {

struct DatasetConfig {
  int image_size = 64;
  int num_classes = 6;
  int train_samples = 2000;
  int val_samples = 300;
  int test_samples = 500;
  std::array<double, 3> severity_mix = {0.4, 0.35, 0.25};  // mild, moderate, severe
  double dsl_fraction = 0.25;     // positives whose report carries a severity adjective
  double normal_fraction = 0.3;
  double cooccurrence = 0.2;      // positives with a second disease
  int images_per_patient = 2;
  double noise_stddev = 0.05;
  std::uint64_t seed = 7;

  void validate() const;
};

nlohmann::json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

struct Dataset {
  std::vector<std::string> disease_names;
  std::vector<Sample> train, val, test;
};

/// Lesion footprint extents for a severity cluster. Ranges do not overlap
/// across clusters, and contrast grows with severity.
struct SeverityProfile {
  int min_radius, max_radius;      // inclusive
  double min_contrast, max_contrast;
};
const SeverityProfile& severity_profile(Severity s);

/// Deterministic in (config, seed). Patients never span splits.
Dataset generate_dataset(const DatasetConfig& config);

/// Shape intensity in [0,1] of class `c` at offset (dx, dy) from the lesion
/// centre with radius `r`. Each class has its own signature.
double lesion_profile(int c, double dx, double dy, int r);

/// Half extents (rx, ry) of the lesion support.
std::pair<int, int> lesion_extent(int c, int r);

/// One sentence per labeled disease; annotated diseases carry an adjective
/// from their severity cluster. Normal samples get "No <disease>." sentences.
std::string render_report(const Sample& sample, int num_classes, Rng& rng);

}  // namespace agcl::synth
