#include "agcl/synth/generator.hpp"
#include "agcl/vocabulary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace agcl::synth {

void DatasetConfig::validate() const {
  if (image_size < 32) throw std::invalid_argument("DatasetConfig: image size must be >= 32");
  if (num_classes < 2) throw std::invalid_argument("DatasetConfig: need at least two classes");
  if (num_classes > kMaxClasses) {
    throw std::invalid_argument("DatasetConfig: only " + std::to_string(kMaxClasses) +
                                " distinct lesion shapes are available");
  }
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (double f : severity_mix) {
    if (!in_unit(f)) throw std::invalid_argument("DatasetConfig: severity mix entries must lie in [0,1]");
  }
  if (std::abs(severity_mix[0] + severity_mix[1] + severity_mix[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("DatasetConfig: severity mix must sum to 1");
  }
  if (!in_unit(dsl_fraction) || !in_unit(normal_fraction) || !in_unit(cooccurrence)) {
    throw std::invalid_argument("DatasetConfig: fractions must lie in [0,1]");
  }
  if (train_samples < 0 || val_samples < 0 || test_samples < 0 || images_per_patient < 1) {
    throw std::invalid_argument("DatasetConfig: sample counts must be non-negative");
  }
  if (noise_stddev < 0) throw std::invalid_argument("DatasetConfig: noise must be non-negative");
}

nlohmann::json to_json(const DatasetConfig& c) {
  return {{"image_size", c.image_size},
          {"num_classes", c.num_classes},
          {"train_samples", c.train_samples},
          {"val_samples", c.val_samples},
          {"test_samples", c.test_samples},
          {"severity_mix", c.severity_mix},
          {"dsl_fraction", c.dsl_fraction},
          {"normal_fraction", c.normal_fraction},
          {"cooccurrence", c.cooccurrence},
          {"images_per_patient", c.images_per_patient},
          {"noise_stddev", c.noise_stddev},
          {"seed", c.seed}};
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig c;
  c.image_size = j.value("image_size", c.image_size);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.train_samples = j.value("train_samples", c.train_samples);
  c.val_samples = j.value("val_samples", c.val_samples);
  c.test_samples = j.value("test_samples", c.test_samples);
  c.severity_mix = j.value("severity_mix", c.severity_mix);
  c.dsl_fraction = j.value("dsl_fraction", c.dsl_fraction);
  c.normal_fraction = j.value("normal_fraction", c.normal_fraction);
  c.cooccurrence = j.value("cooccurrence", c.cooccurrence);
  c.images_per_patient = j.value("images_per_patient", c.images_per_patient);
  c.noise_stddev = j.value("noise_stddev", c.noise_stddev);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

const SeverityProfile& severity_profile(Severity s) {
  static const std::array<SeverityProfile, 3> profiles = {{
      {3, 4, 0.12, 0.20},
      {5, 7, 0.22, 0.32},
      {8, 11, 0.35, 0.50},
  }};
  return profiles[static_cast<int>(s)];
}

double lesion_profile(int c, double dx, double dy, int r) {
  const double rr = r;
  const double dist2 = dx * dx + dy * dy;
  switch (c) {
    case 0: {  // horizontal band
      const double ry = std::max(1.0, rr / 2.0);
      return (dx * dx) / (rr * rr) + (dy * dy) / (ry * ry) <= 1.0 ? 1.0 : 0.0;
    }
    case 1:  // disk
      return dist2 <= rr * rr ? 1.0 : 0.0;
    case 2:  // ring
      return dist2 <= rr * rr && dist2 >= 0.3 * rr * rr ? 1.0 : 0.0;
    case 3: {  // diagonally striped disk
      if (dist2 > rr * rr) return 0.0;
      const int band = static_cast<int>(std::floor((dx + dy + 1000.0) / 2.0));
      return band % 2 == 0 ? 1.0 : 0.0;
    }
    case 4: {  // square
      const double h = std::floor(0.8 * rr);
      return std::abs(dx) <= h && std::abs(dy) <= h ? 1.0 : 0.0;
    }
    case 5: {  // cross
      const double arm = std::max(1.0, std::floor(rr / 3.0));
      return (std::abs(dx) <= arm && std::abs(dy) <= rr) || (std::abs(dy) <= arm && std::abs(dx) <= rr) ? 1.0
                                                                                                        : 0.0;
    }
    case 6:  // diamond
      return std::abs(dx) + std::abs(dy) <= rr ? 1.0 : 0.0;
    case 7: {  // vertical band
      const double rx = std::max(1.0, rr / 2.0);
      return (dx * dx) / (rx * rx) + (dy * dy) / (rr * rr) <= 1.0 ? 1.0 : 0.0;
    }
    default: throw std::invalid_argument("lesion_profile: no shape for class " + std::to_string(c));
  }
}

std::pair<int, int> lesion_extent(int c, int r) {
  (void)c;
  return {r, r};  // every footprint fits in the (2r+1)^2 square
}

namespace {

std::string format_id(const char* fmt, const std::string& split, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, split.c_str(), index);
  return buf;
}

struct Anatomy {
  double base, left_cx, right_cx, cy, rx, ry, depth, tilt;
};

Anatomy sample_anatomy(Rng& rng, int size) {
  const double s = size;
  return {0.52 + 0.06 * (uniform01(rng) - 0.5), 0.30 * s + 2.0 * (uniform01(rng) - 0.5),
          0.70 * s + 2.0 * (uniform01(rng) - 0.5), 0.50 * s + 2.0 * (uniform01(rng) - 0.5),
          (0.16 + 0.03 * uniform01(rng)) * s, (0.30 + 0.05 * uniform01(rng)) * s,
          0.18 + 0.06 * uniform01(rng), 0.08 * (uniform01(rng) - 0.5)};
}

Eigen::MatrixXd render_background(const Anatomy& a, int size, double noise, Rng& rng) {
  Eigen::MatrixXd img(size, size);
  std::normal_distribution<double> gauss(0.0, noise);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double v = a.base + a.tilt * (static_cast<double>(y) / size - 0.5);
      for (double cx : {a.left_cx, a.right_cx}) {
        const double d = std::pow((x - cx) / a.rx, 2) + std::pow((y - a.cy) / a.ry, 2);
        if (d < 1.0) v -= a.depth * (1.0 - d);
      }
      img(y, x) = v;
    }
  }
  // low-contrast clutter that is not tied to any label
  const int blobs = uniform_int(rng, 2, 4);
  for (int b = 0; b < blobs; ++b) {
    const double cx = uniform01(rng) * size, cy = uniform01(rng) * size;
    const double sigma = 2.0 + 3.0 * uniform01(rng);
    const double amp = 0.12 * (uniform01(rng) - 0.5);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        img(y, x) += amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma));
      }
    }
  }
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) img(y, x) += gauss(rng);
  }
  return img;
}

Severity draw_severity(const std::array<double, 3>& mix, Rng& rng) {
  const double u = uniform01(rng);
  if (u < mix[2]) return Severity::severe;
  if (u < mix[2] + mix[1]) return Severity::moderate;
  // an all-zero mild share still falls through here only when u hits the top edge
  if (mix[0] == 0.0) return mix[1] > 0.0 ? Severity::moderate : Severity::severe;
  return Severity::mild;
}

/// Draws the lesion and returns its tight bounding box.
BBox paint_lesion(Eigen::MatrixXd& img, int c, int cx, int cy, int r, double contrast) {
  const int size = static_cast<int>(img.rows());
  BBox box{size, size, 0, 0};
  for (int y = cy - r; y <= cy + r; ++y) {
    for (int x = cx - r; x <= cx + r; ++x) {
      if (x < 0 || y < 0 || x >= size || y >= size) continue;
      const double p = lesion_profile(c, x - cx, y - cy, r);
      if (p <= 0.0) continue;
      img(y, x) += contrast * p;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  return box;
}

bool overlaps(const BBox& a, const BBox& b) {
  const BBox i = intersect(a, b);
  return i.x1 > i.x0 && i.y1 > i.y0;
}

Sample make_sample(const DatasetConfig& cfg, const std::string& split, int index, bool normal,
                   const Anatomy& anatomy) {
  Rng rng(derive_seed(cfg.seed, split, static_cast<std::uint64_t>(index)));
  Sample s;
  s.id = format_id("%s-%05d", split, index);
  s.patient = format_id("%s-p%05d", split, index / cfg.images_per_patient);
  Eigen::MatrixXd img = render_background(anatomy, cfg.image_size, cfg.noise_stddev, rng);

  if (!normal) {
    const int first = uniform_int(rng, 0, cfg.num_classes - 1);
    s.labels.push_back(first);
    if (uniform01(rng) < cfg.cooccurrence) {
      const int second = (first + uniform_int(rng, 1, cfg.num_classes - 1)) % cfg.num_classes;
      s.labels.push_back(second);
    }
    std::sort(s.labels.begin(), s.labels.end());
    const bool annotated = uniform01(rng) < cfg.dsl_fraction;

    std::vector<BBox> placed;
    for (int c : s.labels) {
      const Severity sev = draw_severity(cfg.severity_mix, rng);
      const auto& prof = severity_profile(sev);
      const int r = uniform_int(rng, prof.min_radius, prof.max_radius);
      const double contrast = prof.min_contrast + (prof.max_contrast - prof.min_contrast) * uniform01(rng);
      const auto [rx, ry] = lesion_extent(c, r);
      int cx = 0, cy = 0;
      for (int attempt = 0; attempt < 50; ++attempt) {
        cx = uniform_int(rng, rx + 1, cfg.image_size - rx - 2);
        cy = uniform_int(rng, ry + 1, cfg.image_size - ry - 2);
        const BBox candidate{cx - rx, cy - ry, cx + rx + 1, cy + ry + 1};
        if (std::none_of(placed.begin(), placed.end(), [&](const BBox& b) { return overlaps(b, candidate); })) {
          break;
        }
      }
      placed.push_back({cx - rx, cy - ry, cx + rx + 1, cy + ry + 1});
      const BBox box = paint_lesion(img, c, cx, cy, r, contrast);
      s.gt_boxes.push_back({c, box, sev});
      if (annotated) s.dsl[c] = sev;
    }
  }

  s.pixels = img.unaryExpr([](double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; })
                 .cast<float>();
  s.report = render_report(s, cfg.num_classes, rng);
  return s;
}

std::vector<Sample> generate_split(const DatasetConfig& cfg, const std::string& split, int count) {
  Rng rng(derive_seed(cfg.seed, split));
  const int normals = static_cast<int>(std::lround(cfg.normal_fraction * count));
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> is_normal(count, 0);
  for (int i = 0; i < normals; ++i) is_normal[order[i]] = 1;

  std::vector<Sample> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int patient = i / cfg.images_per_patient;
    Rng patient_rng(derive_seed(cfg.seed, split + "-patient", static_cast<std::uint64_t>(patient)));
    const Anatomy anatomy = sample_anatomy(patient_rng, cfg.image_size);
    samples.push_back(make_sample(cfg, split, i, is_normal[i] != 0, anatomy));
  }
  return samples;
}

const char* pick(const std::vector<const char*>& options, Rng& rng) {
  return options[uniform_int(rng, 0, static_cast<int>(options.size()) - 1)];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace

Dataset generate_dataset(const DatasetConfig& config) {
  config.validate();
  Dataset d;
  d.disease_names = disease_names(config.num_classes);
  d.train = generate_split(config, "train", config.train_samples);
  d.val = generate_split(config, "val", config.val_samples);
  d.test = generate_split(config, "test", config.test_samples);
  return d;
}

std::string render_report(const Sample& sample, int num_classes, Rng& rng) {
  static const std::vector<const char*> sides = {"left", "right", "bilateral"};
  static const std::vector<const char*> zones = {"upper zone", "lower zone", "base", "mid lung"};
  std::vector<std::string> sentences;

  for (int c : sample.labels) {
    const std::string keyword = kDiseases[c].keyword;
    const std::string side = pick(sides, rng);
    const auto it = sample.dsl.find(c);
    if (it != sample.dsl.end()) {
      const auto& terms = severity_terms(it->second);
      const std::string adj = terms[uniform_int(rng, 0, static_cast<int>(terms.size()) - 1)];
      switch (uniform_int(rng, 0, 2)) {
        case 0: sentences.push_back(capitalize(adj) + " " + side + " " + keyword + "."); break;
        case 1:
          sentences.push_back("There is a " + adj + " " + keyword + " in the " + side + " " + pick(zones, rng) + ".");
          break;
        default: sentences.push_back(capitalize(side) + " " + keyword + " appears " + adj + "."); break;
      }
    } else if (uniform_int(rng, 0, 1) == 0) {
      sentences.push_back(capitalize(side) + " " + keyword + " is noted.");
    } else {
      sentences.push_back("Findings consistent with " + keyword + " in the " + pick(zones, rng) + ".");
    }
  }

  // negated findings for diseases that are absent
  std::vector<int> absent;
  for (int c = 0; c < num_classes; ++c) {
    if (!sample.has_label(c)) absent.push_back(c);
  }
  std::shuffle(absent.begin(), absent.end(), rng);
  const int negations = sample.is_normal() ? uniform_int(rng, 1, 2) : uniform_int(rng, 0, 1);
  for (int i = 0; i < negations && i < static_cast<int>(absent.size()); ++i) {
    sentences.push_back(std::string("No ") + kDiseases[absent[i]].keyword + ".");
  }

  std::string report;
  for (const auto& s : sentences) {
    if (!report.empty()) report += ' ';
    report += s;
  }
  return report;
}

}  // namespace agcl::synth
