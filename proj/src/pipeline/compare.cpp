#include "agcl/pipeline/compare.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace agcl::pipeline {

namespace {

std::string fmt(std::optional<double> v, const char* spec = "%.4f") {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, *v);
  return buf;
}

std::string signed_fmt(std::optional<double> v) { return fmt(v, "%+.4f"); }

std::string cell(const std::string& s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s + " ";
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

nlohmann::json opt(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

struct Series {
  std::string label;
  std::vector<std::optional<double>> y;
  double width;
};

// Minimal line chart: one x tick per label, y range from the data.
std::string line_plot(const std::string& title, const std::vector<std::string>& xlabels, const std::vector<Series>& series,
                      const std::string& ylabel) {
  constexpr double W = 640, H = 400, L = 70, R = 160, T = 40, B = 60;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : series) {
    for (const auto& v : s.y) {
      if (v) lo = std::min(lo, *v), hi = std::max(hi, *v);
    }
  }
  if (lo > hi) lo = 0, hi = 1;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad, hi += pad;
  const std::size_t n = xlabels.size();
  const auto px = [&](std::size_t i) { return L + (n > 1 ? (W - L - R) * static_cast<double>(i) / (n - 1) : (W - L - R) / 2); };
  const auto py = [&](double v) { return T + (H - T - B) * (hi - v) / (hi - lo); };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream o;
  char buf[256];
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  o << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
  o << buf;
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.3f</text>\n", L - 6, py(v) + 4, v);
    o << buf;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">", px(i), H - B + 18);
    o << buf << xlabels[i] << "</text>\n";
  }
  std::snprintf(buf, sizeof buf, "<text x=\"15\" y=\"%g\" transform=\"rotate(-90 15 %g)\" text-anchor=\"middle\">", H / 2, H / 2);
  o << buf << ylabel << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % 10];
    std::string points;
    for (std::size_t i = 0; i < series[s].y.size() && i < n; ++i) {
      if (!series[s].y[i]) continue;
      std::snprintf(buf, sizeof buf, "%g,%g ", px(i), py(*series[s].y[i]));
      points += buf;
      std::snprintf(buf, sizeof buf, "<circle cx=\"%g\" cy=\"%g\" r=\"%g\" fill=\"%s\"/>\n", px(i), py(*series[s].y[i]),
                    series[s].width + 1.5, color);
      o << buf;
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << series[s].width << "\" points=\"" << points
      << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" fill=\"%s\">", W - R + 10, T + 16.0 * (s + 1), color);
    o << buf << series[s].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::optional<double> Comparison::auc_delta(std::size_t d, std::size_t s) const {
  if (!auc[d][s] || !auc[d][0]) return std::nullopt;
  return *auc[d][s] - *auc[d][0];
}

std::optional<double> Comparison::mean_auc_delta(std::size_t s) const {
  if (!mean_auc[s] || !mean_auc[0]) return std::nullopt;
  return *mean_auc[s] - *mean_auc[0];
}

Comparison compare_stages(const std::vector<eval::EvalReport>& reports) {
  if (reports.size() < 2) throw std::invalid_argument("compare_stages: need at least two stage reports");
  Comparison c;
  for (const auto& row : reports.front().rows) c.diseases.push_back(row.name);
  c.auc.assign(c.diseases.size(), {});
  for (const auto& r : reports) {
    std::vector<std::string> names;
    for (const auto& row : r.rows) names.push_back(row.name);
    if (names != c.diseases) {
      throw std::invalid_argument("compare_stages: stage '" + r.stage + "' has a different disease set");
    }
    c.stages.push_back(r.stage);
    for (std::size_t d = 0; d < r.rows.size(); ++d) c.auc[d].push_back(r.rows[d].auc);
    c.mean_auc.push_back(r.mean_auc());
    c.totals.push_back(r.totals());
  }
  return c;
}

Comparison compare_stages(const RunManifest& manifest) {
  std::vector<eval::EvalReport> reports;
  for (const auto& f : manifest.reports) reports.push_back(read_report(f));
  Comparison c = compare_stages(reports);
  c.seed_counts = manifest.seed_counts;
  return c;
}

nlohmann::json to_json(const Comparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t d = 0; d < c.diseases.size(); ++d) {
    nlohmann::json auc = nlohmann::json::array(), delta = nlohmann::json::array();
    for (std::size_t s = 0; s < c.stages.size(); ++s) auc.push_back(opt(c.auc[d][s])), delta.push_back(opt(c.auc_delta(d, s)));
    rows.push_back({{"disease", c.diseases[d]}, {"auc", auc}, {"delta", delta}});
  }
  nlohmann::json mean = nlohmann::json::array(), mean_delta = nlohmann::json::array(), loc = nlohmann::json::array();
  for (std::size_t s = 0; s < c.stages.size(); ++s) {
    mean.push_back(opt(c.mean_auc[s]));
    mean_delta.push_back(opt(c.mean_auc_delta(s)));
    const auto& t = c.totals[s];
    loc.push_back({{"stage", c.stages[s]},
                   {"gt", t.gt},
                   {"detected", t.detected},
                   {"true_positives", t.true_positives},
                   {"recalled", t.recalled},
                   {"recall", opt(t.recall())},
                   {"precision", opt(t.precision())},
                   {"recall_delta", opt(t.recall() && c.totals[0].recall() ? std::optional(*t.recall() - *c.totals[0].recall()) : std::nullopt)},
                   {"precision_delta", opt(t.precision() && c.totals[0].precision() ? std::optional(*t.precision() - *c.totals[0].precision()) : std::nullopt)}});
  }
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : c.seed_counts) seeds.push_back({{"stage", s.stage}, {"total", s.total}, {"per_disease", s.per_disease}});
  return {{"stages", c.stages},
          {"diseases", rows},
          {"average", {{"auc", mean}, {"delta", mean_delta}}},
          {"localization_totals", loc},
          {"seed_counts", seeds},
          // full-scale averages give the expected sign of the last delta
          {"reference_direction", {{"baseline_avg_auc", 0.7708}, {"agcl2_avg_auc", 0.8027}, {"delta", 0.0319}}}};
}

std::string comparison_table(const Comparison& c) {
  std::ostringstream o;
  const std::size_t w = 10;
  o << cell("Disease", 14, true);
  for (const auto& s : c.stages) o << cell(s, w);
  for (std::size_t s = 1; s < c.stages.size(); ++s) o << cell("d(" + c.stages[s] + ")", w + 4);
  o << "\n";
  const auto line = [&](const std::string& name, const std::vector<std::optional<double>>& v,
                        const std::vector<std::optional<double>>& d) {
    o << cell(name, 14, true);
    for (const auto& x : v) o << cell(fmt(x), w);
    for (std::size_t s = 1; s < d.size(); ++s) o << cell(signed_fmt(d[s]), w + 4);
    o << "\n";
  };
  for (std::size_t d = 0; d < c.diseases.size(); ++d) {
    std::vector<std::optional<double>> delta;
    for (std::size_t s = 0; s < c.stages.size(); ++s) delta.push_back(c.auc_delta(d, s));
    line(c.diseases[d], c.auc[d], delta);
  }
  std::vector<std::optional<double>> md;
  for (std::size_t s = 0; s < c.stages.size(); ++s) md.push_back(c.mean_auc_delta(s));
  line("AVG", c.mean_auc, md);
  o << "\nLocalization totals\n" << cell("Stage", 14, true) << cell("GT", 6) << cell("Detected", 10) << cell("TP", 6)
    << cell("Recall", 8) << cell("Precision", 11) << "\n";
  for (std::size_t s = 0; s < c.stages.size(); ++s) {
    const auto& t = c.totals[s];
    o << cell(c.stages[s], 14, true) << cell(std::to_string(t.gt), 6) << cell(std::to_string(t.detected), 10)
      << cell(std::to_string(t.true_positives), 6) << cell(fmt(t.recall(), "%.3f"), 8)
      << cell(fmt(t.precision(), "%.3f"), 11) << "\n";
  }
  if (!c.seed_counts.empty()) {
    o << "\nSeeds\n";
    for (const auto& s : c.seed_counts) o << cell(s.stage, 14, true) << cell(std::to_string(s.total), 8) << "\n";
  }
  return o.str();
}

std::string comparison_csv(const Comparison& c) {
  std::ostringstream o;
  o << "disease";
  for (const auto& s : c.stages) o << "," << s;
  for (std::size_t s = 1; s < c.stages.size(); ++s) o << ",delta_" << c.stages[s];
  o << "\n";
  const auto num = [](std::optional<double> v) { return v ? fmt(v, "%.6f") : std::string(); };
  for (std::size_t d = 0; d <= c.diseases.size(); ++d) {
    const bool avg = d == c.diseases.size();
    o << (avg ? "AVG" : c.diseases[d]);
    for (std::size_t s = 0; s < c.stages.size(); ++s) o << "," << num(avg ? c.mean_auc[s] : c.auc[d][s]);
    for (std::size_t s = 1; s < c.stages.size(); ++s) o << "," << num(avg ? c.mean_auc_delta(s) : c.auc_delta(d, s));
    o << "\n";
  }
  return o.str();
}

std::string auc_plot_svg(const Comparison& c) {
  std::vector<Series> series;
  series.push_back({"AVG", c.mean_auc, 3.0});
  for (std::size_t d = 0; d < c.diseases.size(); ++d) series.push_back({c.diseases[d], c.auc[d], 1.0});
  return line_plot("Test AUC by stage", c.stages, series, "AUC");
}

std::string seed_plot_svg(const Comparison& c) {
  std::vector<std::string> labels;
  Series total{"seeds", {}, 2.0};
  for (const auto& s : c.seed_counts) {
    labels.push_back(s.stage);
    total.y.push_back(static_cast<double>(s.total));
  }
  return line_plot("Seed count by harvest round", labels, {total}, "seed (image, disease) pairs");
}

void write_comparison(const Comparison& c, const std::filesystem::path& dir) {
  write_text(dir / "comparison.json", to_json(c).dump(2) + "\n");
  write_text(dir / "comparison.txt", comparison_table(c));
  write_text(dir / "comparison.csv", comparison_csv(c));
  write_text(dir / "auc_by_stage.svg", auc_plot_svg(c));
  write_text(dir / "seeds_by_iteration.svg", seed_plot_svg(c));
}

}  // namespace agcl::pipeline
