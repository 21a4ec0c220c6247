#include "agcl/synth/io.hpp"
#include "agcl/vocabulary.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace fs = std::filesystem;

namespace agcl::synth {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const fs::path& path, const Eigen::MatrixXf& pixels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: cannot create write struct");
  }
  const int h = static_cast<int>(pixels.rows()), w = static_cast<int>(pixels.cols());
  std::vector<png_byte> row(w);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[x] = static_cast<png_byte>(std::lround(std::clamp(pixels(y, x), 0.0f, 1.0f) * 255.0f));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Eigen::MatrixXf read_png(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: cannot create read struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: error reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path.string() + ": expected 8-bit grayscale PNG");
  }
  std::vector<png_byte> row(w);
  Eigen::MatrixXf pixels(h, w);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) pixels(y, x) = static_cast<float>(row[x]) / 255.0f;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

nlohmann::json sample_record(const Sample& s, const std::string& split) {
  nlohmann::json dsl = nlohmann::json::object();
  for (const auto& [c, sev] : s.dsl) dsl[std::to_string(c)] = std::string(to_string(sev));
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& g : s.gt_boxes) {
    boxes.push_back({{"disease", g.disease},
                     {"x0", g.box.x0},
                     {"y0", g.box.y0},
                     {"x1", g.box.x1},
                     {"y1", g.box.y1},
                     {"severity", std::string(to_string(g.severity))}});
  }
  nlohmann::json j = {{"id", s.id},
                      {"patient", s.patient},
                      {"split", split},
                      {"image", "images/" + s.id + ".png"},
                      {"labels", s.labels},
                      {"dsl", dsl},
                      {"boxes", boxes},
                      {"height", s.pixels.rows()},
                      {"width", s.pixels.cols()}};
  if (s.report) j["report"] = *s.report;
  return j;
}

Sample sample_from_record(const nlohmann::json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.patient = j.value("patient", s.id);
  s.labels = j.at("labels").get<std::vector<int>>();
  const nlohmann::json dsl = j.value("dsl", nlohmann::json::object());
  for (const auto& [k, v] : dsl.items()) {
    s.dsl[std::stoi(k)] = severity_from_string(v.get<std::string>());
  }
  const nlohmann::json boxes = j.value("boxes", nlohmann::json::array());
  for (const auto& b : boxes) {
    GroundTruthBox g;
    g.disease = b.at("disease").get<int>();
    g.box = {b.at("x0").get<int>(), b.at("y0").get<int>(), b.at("x1").get<int>(), b.at("y1").get<int>()};
    g.severity = severity_from_string(b.value("severity", "mild"));
    s.gt_boxes.push_back(g);
  }
  if (j.contains("report")) s.report = j.at("report").get<std::string>();
  return s;
}

void write_dataset(const Dataset& dataset, const DatasetConfig& config, const fs::path& dir) {
  fs::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.jsonl").string());
  const auto emit = [&](const std::vector<Sample>& split, const char* name) {
    for (const auto& s : split) {
      write_png(dir / "images" / (s.id + ".png"), s.pixels);
      manifest << sample_record(s, name).dump() << '\n';
    }
  };
  emit(dataset.train, "train");
  emit(dataset.val, "val");
  emit(dataset.test, "test");
  nlohmann::json echo = to_json(config);
  echo["disease_names"] = dataset.disease_names;
  std::ofstream(dir / "config.echo.json") << echo.dump(2) << '\n';
}

Dataset read_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
  const fs::path root = manifest_path.parent_path();
  Dataset d;
  int max_class = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(manifest_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Sample s = sample_from_record(j);
    s.pixels = read_png(root / j.at("image").get<std::string>());
    validate(s);
    for (int c : s.labels) max_class = std::max(max_class, c);
    const std::string split = j.value("split", "train");
    if (split == "train") d.train.push_back(std::move(s));
    else if (split == "val") d.val.push_back(std::move(s));
    else if (split == "test") d.test.push_back(std::move(s));
    else throw std::runtime_error("unknown split '" + split + "' in " + manifest_path.string());
  }
  int num_classes = max_class + 1;
  const fs::path echo = root / "config.echo.json";
  if (fs::exists(echo)) {
    const auto j = nlohmann::json::parse(std::ifstream(echo));
    num_classes = j.value("num_classes", num_classes);
  }
  d.disease_names = disease_names(num_classes);
  return d;
}

}  // namespace agcl::synth
