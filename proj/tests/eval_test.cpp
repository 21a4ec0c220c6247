#include "agcl/eval/auc.hpp"
#include "agcl/eval/localization.hpp"
#include "agcl/eval/report.hpp"

#include "doctest.h"

#include <numeric>
#include <random>

using namespace agcl;
using namespace agcl::eval;

namespace {

// Probability that a random positive outranks a random negative, ties half.
std::optional<double> pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  if (pairs == 0) return std::nullopt;
  return wins / static_cast<double>(pairs);
}

long pixel_overlap(const BBox& a, const BBox& b) {
  long n = 0;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) n += (x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1 && x >= b.x0 && x < b.x1 &&
                                       y >= b.y0 && y < b.y1);
  }
  return n;
}

BBox random_box(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pos(0, 30), ext(1, 9);
  const int x = pos(rng), y = pos(rng);
  return {x, y, x + ext(rng), y + ext(rng)};
}

nn::Heatmap<float> heatmap(std::initializer_list<std::initializer_list<float>> rows) {
  nn::Heatmap<float> h{0, nn::Matrix<float>(rows.size(), rows.begin()->size())};
  int y = 0;
  for (const auto& r : rows) {
    int x = 0;
    for (float v : r) h.values(y, x++) = v;
    ++y;
  }
  return h;
}

}  // namespace

TEST_CASE("auc_roc on small cases") {
  const std::vector<double> s = {0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y = {0, 0, 1, 1};
  CHECK(*auc_roc(s, y) == doctest::Approx(0.75).epsilon(1e-12));

  const std::vector<double> three = {0.6, 0.5, 0.4};
  CHECK(*auc_roc(three, std::vector<int>{1, 0, 1}) == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<double> perfect = {0.1, 0.2, 0.8, 0.9};
  CHECK(*auc_roc(perfect, y) == 1.0);
  const std::vector<double> reversed = {0.9, 0.8, 0.2, 0.1};
  CHECK(*auc_roc(reversed, y) == 0.0);
  const std::vector<double> tied = {0.5, 0.5, 0.5, 0.5};
  CHECK(*auc_roc(tied, y) == 0.5);

  const std::vector<int> all_neg = {0, 0, 0, 0};
  const std::vector<int> all_pos = {1, 1, 1, 1};
  CHECK_FALSE(auc_roc(s, all_neg).has_value());
  CHECK_FALSE(auc_roc(s, all_pos).has_value());
  CHECK_FALSE(auc_roc(std::vector<double>{}, std::vector<int>{}).has_value());
  CHECK_THROWS_AS(auc_roc(s, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST_CASE("auc_roc matches the exhaustive pairwise count on random tied data") {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    const int levels = std::uniform_int_distribution<int>(1, 8)(rng);  // few levels -> many ties
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = std::uniform_int_distribution<int>(0, levels - 1)(rng) / 7.0;
      y[i] = std::uniform_int_distribution<int>(0, 1)(rng);
    }
    const auto expect = pairwise_auc(s, y);
    const auto got = auc_roc(s, y);
    REQUIRE(expect.has_value() == got.has_value());
    if (!expect) continue;
    ++compared;
    CHECK(std::abs(*got - *expect) <= 1e-12);

    // invariance under strictly increasing transforms, complement under label flip
    std::vector<double> t(n);
    std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(3 * v) - 2; });
    CHECK(std::abs(*auc_roc(t, y) - *got) <= 1e-12);
    std::vector<int> flipped(n);
    std::transform(y.begin(), y.end(), flipped.begin(), [](int v) { return 1 - v; });
    CHECK(std::abs(*auc_roc(s, flipped) - (1.0 - *got)) <= 1e-12);
  }
  CHECK(compared >= 1000);
}

TEST_CASE("auc_roc is exact on every small input size") {
  std::mt19937_64 rng(99);
  for (int n = 2; n <= 12; ++n) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) {
        s[i] = std::uniform_int_distribution<int>(0, 3)(rng) * 0.25;
        y[i] = std::uniform_int_distribution<int>(0, 1)(rng);
      }
      const auto expect = pairwise_auc(s, y);
      const auto got = auc_roc(s, y);
      REQUIRE(expect.has_value() == got.has_value());
      if (expect) CHECK(std::abs(*got - *expect) <= 1e-12);
    }
  }
}

TEST_CASE("iobb") {
  const BBox gt{10, 10, 30, 30};
  CHECK(iobb(gt, {15, 15, 25, 25}) == 1.0);
  CHECK(iobb(gt, {20, 20, 40, 40}) == doctest::Approx(0.25));
  CHECK(iobb(gt, {0, 0, 20, 20}) == doctest::Approx(0.25));
  CHECK(iobb(gt, {40, 40, 50, 50}) == 0.0);
  CHECK(iobb(gt, {30, 10, 40, 30}) == 0.0);  // touching edges share no pixel
  CHECK(iobb(gt, {12, 12, 12, 20}) == 0.0);  // degenerate detection
  // not symmetric: a huge detection covering the GT scores low
  CHECK(iobb(gt, {0, 0, 40, 40}) == doctest::Approx(0.25));
  CHECK(iobb({0, 0, 40, 40}, gt) == 1.0);
  CHECK(iobb({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(iobb(gt, gt) == 1.0);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const BBox a = random_box(rng), b = random_box(rng);
    const double v = iobb(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(static_cast<double>(pixel_overlap(a, b)) / static_cast<double>(b.area())));
    if (a.contains(b)) CHECK(v == 1.0);
    const BBox sa{a.x0 + 3, a.y0 + 5, a.x1 + 3, a.y1 + 5}, sb{b.x0 + 3, b.y0 + 5, b.x1 + 3, b.y1 + 5};
    CHECK(iobb(sa, sb) == v);
  }
}

TEST_CASE("binarize_heatmap") {
  const auto h = heatmap({{0.1f, 0.8f}, {0.75f, 1.0f}});
  const Mask m = binarize_heatmap(h, 0.7);
  CHECK_FALSE(m(0, 0));
  CHECK(m(0, 1));
  CHECK(m(1, 0));
  CHECK(m(1, 1));

  const Mask row = binarize_heatmap(heatmap({{1.0f, 0.8f, 0.5f}}), 0.7);
  CHECK((row(0, 0) && row(0, 1) && !row(0, 2)));
  CHECK(binarize_heatmap(heatmap({{0.3f, 0.3f}, {0.3f, 0.3f}}), 0.7).all());
  const Mask single = binarize_heatmap(heatmap({{0.f, 0.f}, {0.f, 2.f}}), 0.7);
  CHECK(single.count() == 1);
  CHECK(single(1, 1));

  // a cell exactly at tau * max is kept
  nn::Heatmap<double> edge{0, nn::Matrix<double>(1, 2)};
  edge.values << 0.7, 1.0;
  CHECK(binarize_heatmap(edge, 0.7).all());

  CHECK_FALSE(binarize_heatmap(heatmap({{-1.f, -0.5f}, {-2.f, -3.f}}), 0.7).any());
  CHECK_FALSE(binarize_heatmap(heatmap({{0.f, 0.f}, {0.f, 0.f}}), 0.7).any());
  // negative cells never pass a positive cut
  const Mask mixed = binarize_heatmap(heatmap({{-5.f, 2.f}}), 0.7);
  CHECK_FALSE(mixed(0, 0));
  CHECK(mixed(0, 1));

  std::mt19937_64 rng(37);
  std::normal_distribution<float> g(0.f, 1.f);
  for (int trial = 0; trial < 200; ++trial) {
    nn::Heatmap<float> r{0, nn::Matrix<float>(8, 8)};
    for (Eigen::Index i = 0; i < r.values.size(); ++i) r.values.data()[i] = g(rng);
    const Mask lo = binarize_heatmap(r, 0.5), hi = binarize_heatmap(r, 0.9);
    CHECK((hi <= lo).all());  // raising tau only removes cells
    if (r.values.maxCoeff() > 0) {
      Eigen::Index py, px;
      r.values.maxCoeff(&py, &px);
      CHECK(hi(py, px));
    }
  }
}

TEST_CASE("label_components uses 8-connectivity") {
  Mask m = Mask::Constant(4, 4, false);
  m(0, 0) = m(1, 1) = true;  // diagonal neighbours join
  m(3, 3) = true;
  const auto c = label_components(m);
  CHECK(c.count == 2);
  CHECK(c.labels(0, 0) == c.labels(1, 1));
  CHECK(c.labels(3, 3) != c.labels(0, 0));
  CHECK(c.labels(0, 1) == 0);
  CHECK(label_components(Mask::Constant(3, 3, false)).count == 0);
  CHECK(label_components(Mask::Constant(3, 3, true)).count == 1);
}

TEST_CASE("extract_boxes scales by the stride and clips") {
  Mask m = Mask::Constant(8, 8, false);
  m(1, 2) = m(2, 3) = true;  // one component spanning x 2..3, y 1..2
  m.block(6, 6, 2, 2) = true;
  const auto boxes = extract_boxes(m, 8, 64, 64);
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[0] == BBox{16, 8, 32, 24});
  CHECK(boxes[1] == BBox{48, 48, 64, 64});
  for (const auto& b : boxes) CHECK(b.inside(64, 64));

  Mask block = Mask::Constant(8, 8, false);
  block.block(1, 1, 2, 2) = true;
  const auto one = extract_boxes(block, 8, 64, 64);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == BBox{8, 8, 24, 24});

  // every true cell is covered by the box of its component
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    Mask r = Mask::Constant(8, 8, false);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = std::uniform_int_distribution<int>(0, 3)(rng) == 0;
    const auto comp = label_components(r);
    const auto bs = extract_boxes(r, 8, 64, 64);
    REQUIRE(static_cast<int>(bs.size()) == comp.count);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (!r(y, x)) continue;
        const BBox cell{x * 8, y * 8, x * 8 + 8, y * 8 + 8};
        CHECK(bs[comp.labels(y, x) - 1].contains(cell));
      }
    }
    for (const auto& b : bs) CHECK(b.inside(64, 64));
  }

  const auto clipped = extract_boxes(m, 8, 60, 60);
  CHECK(clipped[1] == BBox{48, 48, 60, 60});
  CHECK(extract_boxes(m, 8, 64, 64, 3).size() == 1);
  CHECK(extract_boxes(Mask::Constant(8, 8, false), 8, 64, 64).empty());

  // detect() agrees with binarize + extract_boxes
  nn::Heatmap<float> h{3, nn::Matrix<float>::Zero(8, 8)};
  h.values(1, 2) = 1.0f;
  h.values(2, 3) = 0.9f;
  h.values(6, 6) = 0.75f;
  const auto dets = detect(h, "s", 8, 64, EvalConfig{});
  const auto ref = extract_boxes(binarize_heatmap(h, 0.7), 8, 64, 64);
  REQUIRE(dets.size() == ref.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(dets[i].box == ref[i]);
    CHECK(dets[i].disease == 3);
  }
  CHECK(dets[0].peak == doctest::Approx(1.0));
}

TEST_CASE("match_detections and rates") {
  const std::vector<BBox> gt = {{10, 10, 30, 30}};
  // two detections inside one GT box: both true positives, TP exceeds GT
  const auto m = match_detections(gt, {{12, 12, 20, 20}, {22, 22, 28, 28}}, 0.25);
  CHECK(m.true_positives == 2);
  CHECK(m.gt_recalled == std::vector<bool>{true});
  LocalizationCounts c{1, 2, m.true_positives, 1};
  CHECK(*c.recall() == 1.0);
  CHECK(*c.precision() == 1.0);

  const auto same = match_detections(gt, gt, 0.25);
  CHECK(same.true_positives == 1);
  CHECK(same.gt_recalled == std::vector<bool>{true});

  // two detections each with IoBB 0.5
  const auto halves = match_detections({{0, 0, 10, 10}}, {{5, 0, 15, 10}, {-5, 0, 5, 10}}, 0.25);
  CHECK(halves.true_positives == 2);

  const auto none = match_detections(gt, {}, 0.25);
  CHECK(none.true_positives == 0);
  CHECK(none.gt_recalled == std::vector<bool>{false});
  LocalizationCounts empty{1, 0, 0, 0};
  CHECK(*empty.recall() == 0.0);
  CHECK_FALSE(empty.precision().has_value());

  // exactly on the threshold counts
  CHECK(match_detections(gt, {{20, 20, 40, 40}}, 0.25).true_positives == 1);
  CHECK(match_detections(gt, {{21, 20, 41, 40}}, 0.25).true_positives == 0);

  // one detection covering two GT boxes recalls both
  const std::vector<BBox> two = {{0, 0, 10, 10}, {10, 0, 20, 10}};
  const auto both = match_detections(two, {{0, 0, 20, 10}}, 0.25);
  CHECK(both.true_positives == 1);
  CHECK(both.gt_recalled == std::vector<bool>{true, true});

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<BBox> g(std::uniform_int_distribution<int>(1, 3)(rng)), d(std::uniform_int_distribution<int>(0, 4)(rng));
    for (auto& b : g) b = random_box(rng);
    for (auto& b : d) b = random_box(rng);
    const auto lo = match_detections(g, d, 0.1), hi = match_detections(g, d, 0.5);
    CHECK(hi.true_positives <= lo.true_positives);
    CHECK(lo.true_positives <= static_cast<int>(d.size()));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK((!hi.gt_recalled[i] || lo.gt_recalled[i]));
  }
}

TEST_CASE("assemble_report pools counts and skips classes without boxes") {
  std::vector<Sample> samples(3);
  samples[0].id = "a";
  samples[0].labels = {0};
  samples[0].gt_boxes = {{0, {0, 0, 16, 16}, Severity::severe}};
  samples[1].id = "b";
  samples[1].labels = {0, 1};
  samples[1].gt_boxes = {{0, {32, 32, 48, 48}, Severity::mild}};
  samples[2].id = "c";
  const std::vector<std::vector<double>> scores = {{0.9, 0.2}, {0.8, 0.7}, {0.1, 0.3}};
  const std::vector<Detection> dets = {{"a", 0, {0, 0, 8, 8}, 1.0}, {"a", 0, {40, 40, 48, 48}, 0.8}};
  const auto r = assemble_report(scores, samples, dets, {"A", "B"}, EvalConfig{}, "s");
  REQUIRE(r.rows.size() == 2);
  CHECK(*r.rows[0].auc == 1.0);
  CHECK(*r.rows[1].auc == 1.0);
  REQUIRE(r.rows[0].localization.has_value());
  CHECK(r.rows[0].localization->gt == 2);
  CHECK(r.rows[0].localization->detected == 2);
  CHECK(r.rows[0].localization->true_positives == 1);
  CHECK(r.rows[0].localization->recalled == 1);
  CHECK_FALSE(r.rows[1].localization.has_value());
  CHECK(*r.totals().recall() == 0.5);
  CHECK(*r.totals().precision() == 0.5);
  CHECK(*r.mean_auc() == 1.0);

  const auto back = report_from_json(auc_json(r), localization_json(r));
  CHECK(back.stage == "s");
  CHECK(*back.rows[0].auc == 1.0);
  CHECK(back.rows[0].localization->true_positives == 1);
  CHECK_FALSE(back.rows[1].localization.has_value());
}
