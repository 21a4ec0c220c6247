#include "agcl/eval/report.hpp"
#include "agcl/eval/auc.hpp"
#include "agcl/nn/heads.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace agcl::eval {

std::optional<double> LocalizationCounts::recall() const {
  if (gt == 0) return std::nullopt;
  return static_cast<double>(recalled) / static_cast<double>(gt);
}

std::optional<double> LocalizationCounts::precision() const {
  if (detected == 0) return std::nullopt;
  return static_cast<double>(true_positives) / static_cast<double>(detected);
}

LocalizationCounts& LocalizationCounts::operator+=(const LocalizationCounts& o) {
  gt += o.gt;
  detected += o.detected;
  true_positives += o.true_positives;
  recalled += o.recalled;
  return *this;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(const std::optional<double>& v, const char* spec = "%.4f") {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::optional<double> EvalReport::mean_auc() const {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.auc) v.push_back(*r.auc);
  }
  return mean_of(v);
}

LocalizationCounts EvalReport::totals() const {
  LocalizationCounts t;
  for (const auto& r : rows) {
    if (r.localization) t += *r.localization;
  }
  return t;
}

std::optional<double> EvalReport::macro_recall() const {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.localization && r.localization->recall()) v.push_back(*r.localization->recall());
  }
  return mean_of(v);
}

std::optional<double> EvalReport::macro_precision() const {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.localization && r.localization->precision()) v.push_back(*r.localization->precision());
  }
  return mean_of(v);
}

EvalReport assemble_report(const std::vector<std::vector<double>>& scores, const std::vector<Sample>& samples,
                           const std::vector<Detection>& detections, const std::vector<std::string>& names,
                           const EvalConfig& config, const std::string& stage) {
  config.validate();
  const int num_classes = static_cast<int>(names.size());
  EvalReport report;
  report.stage = stage;
  report.iobb_threshold = config.iobb_threshold;

  std::map<std::pair<std::string, int>, std::vector<BBox>> detected;
  for (const auto& d : detections) detected[{d.sample_id, d.disease}].push_back(d.box);

  for (int c = 0; c < num_classes; ++c) {
    DiseaseRow row;
    row.name = names[c];
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      s.push_back(scores[i][c]);
      y.push_back(samples[i].has_label(c) ? 1 : 0);
    }
    row.auc = auc_roc(s, y);

    LocalizationCounts counts;
    bool any_gt = false;
    for (const auto& sample : samples) {
      std::vector<BBox> gt;
      for (const auto& g : sample.gt_boxes) {
        if (g.disease == c) gt.push_back(g.box);
      }
      if (gt.empty()) continue;
      any_gt = true;
      const auto it = detected.find({sample.id, c});
      const std::vector<BBox> dets = it == detected.end() ? std::vector<BBox>{} : it->second;
      const MatchResult m = match_detections(gt, dets, config.iobb_threshold);
      counts.gt += static_cast<long>(gt.size());
      counts.detected += static_cast<long>(dets.size());
      counts.true_positives += m.true_positives;
      for (bool hit : m.gt_recalled) counts.recalled += hit ? 1 : 0;
    }
    if (any_gt) row.localization = counts;
    report.rows.push_back(std::move(row));
  }
  return report;
}

EvalReport build_report(const nn::MultiLabelModel<float>& model, const std::vector<Sample>& samples,
                        const std::vector<std::string>& names, const EvalConfig& config, const std::string& stage,
                        std::vector<Detection>* detections_out) {
  const int num_classes = static_cast<int>(names.size());
  if (model.num_classes() != num_classes) throw std::invalid_argument("build_report: class count mismatch");
  const int stride = model.trunk.input_size / model.trunk.feature_side();
  std::vector<std::vector<double>> scores;
  std::vector<Detection> detections;
  for (const auto& sample : samples) {
    const auto fm = nn::forward_features(sample.pixels, model.trunk);
    const auto probs = nn::classify_multilabel(fm, model.head);
    scores.emplace_back(probs.data(), probs.data() + probs.size());
    std::vector<int> boxed;
    for (const auto& g : sample.gt_boxes) {
      if (std::find(boxed.begin(), boxed.end(), g.disease) == boxed.end()) boxed.push_back(g.disease);
    }
    for (int c : boxed) {
      auto dets = detect(nn::multilabel_cam(fm, model.head, c), sample.id, stride, model.trunk.input_size, config);
      detections.insert(detections.end(), dets.begin(), dets.end());
    }
  }
  EvalReport report = assemble_report(scores, samples, detections, names, config, stage);
  if (detections_out) *detections_out = std::move(detections);
  return report;
}

nlohmann::json auc_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) rows.push_back({{"disease", row.name}, {"auc", optional_json(row.auc)}});
  return {{"stage", r.stage},
          {"diseases", rows},
          {"average", optional_json(r.mean_auc())},
          // full-scale averages; the expected direction, not a target at this scale
          {"reference_direction", {{"baseline_avg_auc", 0.7708}, {"agcl2_avg_auc", 0.8027}}}};
}

nlohmann::json localization_json(const EvalReport& r) {
  const auto row_json = [](const std::string& name, const LocalizationCounts& c) {
    return nlohmann::json{{"disease", name},
                          {"gt", c.gt},
                          {"detected", c.detected},
                          {"true_positives", c.true_positives},
                          {"recalled", c.recalled},
                          {"recall", optional_json(c.recall())},
                          {"precision", optional_json(c.precision())}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    if (row.localization) rows.push_back(row_json(row.name, *row.localization));
    else rows.push_back({{"disease", row.name}, {"absent", true}});
  }
  return {{"stage", r.stage},
          {"iobb_threshold", r.iobb_threshold},
          {"diseases", rows},
          {"total", row_json("Total", r.totals())},
          {"macro_recall", optional_json(r.macro_recall())},
          {"macro_precision", optional_json(r.macro_precision())}};
}

EvalReport report_from_json(const nlohmann::json& auc, const nlohmann::json& localization) {
  EvalReport r;
  r.stage = auc.at("stage").get<std::string>();
  r.iobb_threshold = localization.value("iobb_threshold", 0.25);
  std::map<std::string, LocalizationCounts> loc;
  for (const auto& row : localization.at("diseases")) {
    if (row.value("absent", false)) continue;
    LocalizationCounts c;
    c.gt = row.at("gt").get<long>();
    c.detected = row.at("detected").get<long>();
    c.true_positives = row.at("true_positives").get<long>();
    c.recalled = row.at("recalled").get<long>();
    loc[row.at("disease").get<std::string>()] = c;
  }
  for (const auto& row : auc.at("diseases")) {
    DiseaseRow d;
    d.name = row.at("disease").get<std::string>();
    d.auc = optional_from(row, "auc");
    if (auto it = loc.find(d.name); it != loc.end()) d.localization = it->second;
    r.rows.push_back(std::move(d));
  }
  return r;
}

std::string auc_table(const EvalReport& r) {
  std::ostringstream out;
  out << "Stage: " << r.stage << "\n";
  out << pad("Disease", 14, true) << pad("AUC", 8) << "\n";
  for (const auto& row : r.rows) out << pad(row.name, 14, true) << pad(fmt(row.auc), 8) << "\n";
  out << pad("AVG", 14, true) << pad(fmt(r.mean_auc()), 8) << "\n";
  return out.str();
}

std::string localization_table(const EvalReport& r) {
  std::ostringstream out;
  char threshold[32];
  std::snprintf(threshold, sizeof threshold, "%.2f", r.iobb_threshold);
  out << "Stage: " << r.stage << "  T(IoBB) = " << threshold << "\n";
  out << pad("Disease", 14, true) << pad("GT", 6) << pad("Detected", 10) << pad("TP", 6) << pad("Recall", 8)
      << pad("Precision", 11) << "\n";
  const auto line = [&](const std::string& name, const LocalizationCounts& c) {
    out << pad(name, 14, true) << pad(std::to_string(c.gt), 6) << pad(std::to_string(c.detected), 10)
        << pad(std::to_string(c.true_positives), 6) << pad(fmt(c.recall(), "%.2f"), 8)
        << pad(fmt(c.precision(), "%.2f"), 11) << "\n";
  };
  for (const auto& row : r.rows) {
    if (row.localization) line(row.name, *row.localization);
    else out << pad(row.name, 14, true) << pad("-", 6) << pad("-", 10) << pad("-", 6) << pad("-", 8) << pad("-", 11) << "\n";
  }
  line("Total", r.totals());
  return out.str();
}

}  // namespace agcl::eval
