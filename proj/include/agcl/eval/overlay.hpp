#pragma once

#include "agcl/eval/localization.hpp"
#include "agcl/nn/types.hpp"
#include "agcl/sample.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <vector>

namespace agcl::eval {

/// Interleaved 8-bit RGB, row-major: data[(y * width + x) * 3 + k].
struct RgbImage {
  int width = 0, height = 0;
  std::vector<unsigned char> data;

  std::array<unsigned char, 3> at(int x, int y) const;
};

/// Grayscale image blended with the heatmap (min-max scaled, nearest
/// upsampled); GT boxes outlined green, detections red.
RgbImage render_overlay(const Eigen::MatrixXf& pixels, const nn::Heatmap<float>& heatmap,
                        const std::vector<BBox>& gt, const std::vector<BBox>& detections, double alpha = 0.45);

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace agcl::eval
