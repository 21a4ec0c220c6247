#include "agcl/synth/generator.hpp"
#include "agcl/synth/io.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace agcl;
using namespace agcl::synth;
namespace fs = std::filesystem;

namespace {

DatasetConfig small_config() {
  DatasetConfig c;
  c.train_samples = 200;
  c.val_samples = 40;
  c.test_samples = 40;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("agcl_synth_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("generated samples satisfy the sample invariants") {
  const auto data = generate_dataset(small_config());
  CHECK(data.disease_names.size() == 6);
  std::set<std::string> ids;
  for (const auto* split : {&data.train, &data.val, &data.test}) {
    for (const auto& s : *split) {
      CHECK_NOTHROW(validate(s));
      CHECK(ids.insert(s.id).second);
      CHECK(s.pixels.rows() == 64);
      CHECK(s.pixels.minCoeff() >= 0.0f);
      CHECK(s.pixels.maxCoeff() <= 1.0f);
      for (const auto& [c, sev] : s.dsl) CHECK(s.has_label(c));
      for (const auto& g : s.gt_boxes) {
        CHECK(s.has_label(g.disease));
        CHECK(g.box.inside(64, 64));
      }
      if (!s.is_normal()) CHECK(s.gt_boxes.size() == s.labels.size());
      // pixels are exact multiples of 1/255
      const Eigen::ArrayXXf k = s.pixels.array() * 255.0f;
      CHECK((k - k.round()).abs().maxCoeff() < 1e-3f);
    }
  }
}

TEST_CASE("patients never span splits") {
  const auto data = generate_dataset(small_config());
  std::map<std::string, std::string> owner;
  for (auto [name, split] : {std::pair{"train", &data.train}, {"val", &data.val}, {"test", &data.test}}) {
    for (const auto& s : *split) {
      const auto [it, fresh] = owner.emplace(s.patient, name);
      CHECK(it->second == name);
    }
  }
}

TEST_CASE("normal fraction is exact") {
  DatasetConfig c = small_config();
  c.train_samples = 1000;
  const auto data = generate_dataset(c);
  CHECK(std::count_if(data.train.begin(), data.train.end(), [](const Sample& s) { return s.is_normal(); }) == 300);
}

TEST_CASE("a severe-only mix annotates every labeled class as severe") {
  DatasetConfig c = small_config();
  c.severity_mix = {0, 0, 1};
  c.dsl_fraction = 1.0;
  const auto data = generate_dataset(c);
  for (const auto& s : data.train) {
    CHECK(s.dsl.size() == s.labels.size());
    for (const auto& [cls, sev] : s.dsl) CHECK(sev == Severity::severe);
  }
}

TEST_CASE("lesion area and contrast grow with severity") {
  DatasetConfig c = small_config();
  c.train_samples = 1500;
  const auto data = generate_dataset(c);
  for (int cls = 0; cls < c.num_classes; ++cls) {
    std::array<double, 3> area{}, n{};
    for (const auto& s : data.train) {
      for (const auto& g : s.gt_boxes) {
        if (g.disease != cls) continue;
        area[static_cast<int>(g.severity)] += static_cast<double>(g.box.area());
        n[static_cast<int>(g.severity)] += 1;
      }
    }
    CAPTURE(cls);
    REQUIRE(n[0] > 0);
    REQUIRE(n[1] > 0);
    REQUIRE(n[2] > 0);
    CHECK(area[2] / n[2] > area[1] / n[1]);
    CHECK(area[1] / n[1] > area[0] / n[0]);
  }
  for (int k = 0; k < 2; ++k) {
    const auto& lo = severity_profile(static_cast<Severity>(k));
    const auto& hi = severity_profile(static_cast<Severity>(k + 1));
    CHECK(lo.max_radius < hi.min_radius);
    CHECK(lo.max_contrast < hi.min_contrast);
  }
}

TEST_CASE("each class has a distinct lesion footprint") {
  for (int r = 3; r <= 11; ++r) {
    std::set<std::vector<int>> shapes;
    for (int c = 0; c < 8; ++c) {
      std::vector<int> bits;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) bits.push_back(lesion_profile(c, dx, dy, r) > 0 ? 1 : 0);
      }
      shapes.insert(bits);
    }
    CHECK(shapes.size() == 8);
  }
  CHECK_THROWS(lesion_profile(8, 0, 0, 3));
}

TEST_CASE("config validation") {
  DatasetConfig c;
  c.num_classes = 9;
  CHECK_THROWS(c.validate());
  c = DatasetConfig{};
  c.image_size = 16;
  CHECK_THROWS(c.validate());
  c = DatasetConfig{};
  c.severity_mix = {0.5, 0.5, 0.5};
  CHECK_THROWS(c.validate());
  c = DatasetConfig{};
  c.normal_fraction = 1.5;
  CHECK_THROWS(c.validate());
  c = DatasetConfig{};
  c.num_classes = 1;
  CHECK_THROWS(c.validate());

  DatasetConfig d;
  d.seed = 99;
  d.cooccurrence = 0.4;
  const auto back = dataset_config_from_json(to_json(d));
  CHECK(to_json(back) == to_json(d));
}

TEST_CASE("same config and seed give byte-identical datasets on disk") {
  const DatasetConfig c = small_config();
  const fs::path a = scratch("a"), b = scratch("b");
  write_dataset(generate_dataset(c), c, a);
  write_dataset(generate_dataset(c), c, b);
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  CHECK(slurp(a / "images" / "train-00007.png") == slurp(b / "images" / "train-00007.png"));
  CHECK(fs::exists(a / "config.echo.json"));

  DatasetConfig other = c;
  other.seed = c.seed + 1;
  const fs::path o = scratch("o");
  write_dataset(generate_dataset(other), other, o);
  CHECK(slurp(a / "manifest.jsonl") != slurp(o / "manifest.jsonl"));

  // read back: pixels survive the PNG round trip exactly
  const auto original = generate_dataset(c);
  const auto loaded = read_dataset(a / "manifest.jsonl");
  REQUIRE(loaded.train.size() == original.train.size());
  CHECK(loaded.disease_names == original.disease_names);
  for (std::size_t i = 0; i < loaded.train.size(); i += 17) {
    const auto& x = loaded.train[i];
    const auto& y = original.train[i];
    CHECK(x.id == y.id);
    CHECK(x.labels == y.labels);
    CHECK(x.dsl == y.dsl);
    CHECK(x.report == y.report);
    REQUIRE(x.gt_boxes.size() == y.gt_boxes.size());
    for (std::size_t k = 0; k < x.gt_boxes.size(); ++k) {
      CHECK(x.gt_boxes[k].box == y.gt_boxes[k].box);
      CHECK(x.gt_boxes[k].severity == y.gt_boxes[k].severity);
    }
    CHECK(x.pixels == y.pixels);
  }
  for (const auto& p : {a, b, o}) fs::remove_all(p);
}

TEST_CASE("manifest record round trip") {
  const auto data = generate_dataset(small_config());
  for (const auto& s : data.val) {
    const auto back = sample_from_record(sample_record(s, "val"));
    CHECK(back.id == s.id);
    CHECK(back.patient == s.patient);
    CHECK(back.labels == s.labels);
    CHECK(back.dsl == s.dsl);
    CHECK(back.report == s.report);
  }
}
