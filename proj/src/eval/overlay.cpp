#include "agcl/eval/overlay.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace agcl::eval {

namespace {

// piecewise-linear blue -> cyan -> yellow -> red
std::array<double, 3> heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (t < 1.0 / 3) return {0.0, 3 * t, 1.0};
  if (t < 2.0 / 3) return {3 * t - 1, 1.0, 2 - 3 * t};
  return {1.0, 3 - 3 * t, 0.0};
}

void outline(RgbImage& img, const BBox& b, std::array<unsigned char, 3> color) {
  const auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    std::copy(color.begin(), color.end(), img.data.begin() + (static_cast<std::size_t>(y) * img.width + x) * 3);
  };
  for (int x = b.x0; x < b.x1; ++x) put(x, b.y0), put(x, b.y1 - 1);
  for (int y = b.y0; y < b.y1; ++y) put(b.x0, y), put(b.x1 - 1, y);
}

}  // namespace

std::array<unsigned char, 3> RgbImage::at(int x, int y) const {
  const auto* p = data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  return {p[0], p[1], p[2]};
}

RgbImage render_overlay(const Eigen::MatrixXf& pixels, const nn::Heatmap<float>& heatmap,
                        const std::vector<BBox>& gt, const std::vector<BBox>& detections, double alpha) {
  if (heatmap.values.size() == 0) throw std::invalid_argument("render_overlay: empty heatmap");
  RgbImage img;
  img.height = static_cast<int>(pixels.rows());
  img.width = static_cast<int>(pixels.cols());
  img.data.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  const double lo = heatmap.values.minCoeff(), hi = heatmap.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  const int sy = std::max(1, img.height / heatmap.height()), sx = std::max(1, img.width / heatmap.width());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int hy = std::min(y / sy, heatmap.height() - 1), hx = std::min(x / sx, heatmap.width() - 1);
      const auto c = heat_color((heatmap.values(hy, hx) - lo) / span);
      const double g = std::clamp(static_cast<double>(pixels(y, x)), 0.0, 1.0);
      for (int k = 0; k < 3; ++k) {
        const double v = (1 - alpha) * g + alpha * c[k];
        img.data[(static_cast<std::size_t>(y) * img.width + x) * 3 + k] =
            static_cast<unsigned char>(std::lround(v * 255));
      }
    }
  }
  for (const auto& b : detections) outline(img, b, {255, 0, 0});
  for (const auto& b : gt) outline(img, b, {0, 255, 0});
  return img;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: cannot create write struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: error writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.data.data() + static_cast<std::size_t>(y) * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace agcl::eval
