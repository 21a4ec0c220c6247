#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agcl {

enum class Severity { mild = 0, moderate = 1, severe = 2 };

std::string_view to_string(Severity s);
Severity severity_from_string(std::string_view s);

/// Axis-aligned pixel box, half-open: [x0, x1) x [y0, y1).
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return static_cast<long>(width()) * height(); }
  bool valid() const { return x0 >= 0 && y0 >= 0 && x1 > x0 && y1 > y0; }
  bool inside(int image_width, int image_height) const {
    return valid() && x1 <= image_width && y1 <= image_height;
  }
  bool contains(const BBox& o) const { return o.x0 >= x0 && o.y0 >= y0 && o.x1 <= x1 && o.y1 <= y1; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

BBox intersect(const BBox& a, const BBox& b);  // may be empty (non-positive extent)

struct GroundTruthBox {
  int disease = 0;
  BBox box;
  Severity severity = Severity::mild;  // rendered severity; evaluation-only, never a training signal
};

/// One grayscale image with labels and optional annotations. Class ids are
/// zero-based.
struct Sample {
  std::string id;
  std::string patient;
  Eigen::MatrixXf pixels;             // height x width, values in [0, 1]
  std::vector<int> labels;            // sorted, unique
  std::map<int, Severity> dsl;        // annotated severity, subset of labels
  std::vector<GroundTruthBox> gt_boxes;
  std::optional<std::string> report;

  bool is_normal() const { return labels.empty(); }
  bool has_label(int c) const;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const Sample& s);

}  // namespace agcl
