#include "agcl/sample.hpp"
#include "agcl/vocabulary.hpp"

#include <algorithm>

namespace agcl {

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::mild: return "mild";
    case Severity::moderate: return "moderate";
    case Severity::severe: return "severe";
  }
  return "mild";
}

Severity severity_from_string(std::string_view s) {
  if (s == "mild") return Severity::mild;
  if (s == "moderate") return Severity::moderate;
  if (s == "severe") return Severity::severe;
  throw std::invalid_argument("unknown severity cluster '" + std::string(s) + "'");
}

BBox intersect(const BBox& a, const BBox& b) {
  return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
}

bool Sample::has_label(int c) const { return std::binary_search(labels.begin(), labels.end(), c); }

void validate(const Sample& s) {
  if (!std::is_sorted(s.labels.begin(), s.labels.end()) ||
      std::adjacent_find(s.labels.begin(), s.labels.end()) != s.labels.end()) {
    throw std::invalid_argument(s.id + ": labels must be sorted and unique");
  }
  for (const auto& [c, sev] : s.dsl) {
    if (!s.has_label(c)) throw std::invalid_argument(s.id + ": dsl class " + std::to_string(c) + " not labeled");
  }
  for (const auto& g : s.gt_boxes) {
    if (!s.has_label(g.disease)) {
      throw std::invalid_argument(s.id + ": box class " + std::to_string(g.disease) + " not labeled");
    }
    if (!g.box.inside(static_cast<int>(s.pixels.cols()), static_cast<int>(s.pixels.rows()))) {
      throw std::invalid_argument(s.id + ": box outside image bounds");
    }
  }
  if (s.pixels.size() > 0 && (s.pixels.minCoeff() < 0.0f || s.pixels.maxCoeff() > 1.0f)) {
    throw std::invalid_argument(s.id + ": pixel values outside [0,1]");
  }
}

std::vector<std::string> disease_names(int num_classes) {
  std::vector<std::string> names;
  for (int c = 0; c < num_classes && c < kMaxClasses; ++c) names.emplace_back(kDiseases[c].name);
  return names;
}

}  // namespace agcl
