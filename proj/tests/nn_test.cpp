#include "agcl/nn/checkpoint.hpp"
#include "agcl/nn/heads.hpp"
#include "agcl/nn/loss.hpp"
#include "agcl/nn/objective.hpp"
#include "agcl/nn/sgd.hpp"
#include "agcl/nn/trainer.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

using namespace agcl::nn;

namespace {

FeatureMap<double> make_fm(int h, int w, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMap<double> fm{h, w, Matrix<double>(d, h * w)};
  for (Eigen::Index i = 0; i < fm.data.size(); ++i) fm.data.data()[i] = g(rng);
  return fm;
}

Linear<double> make_head(int rows, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Linear<double> head{Matrix<double>(rows, d), Vector<double>(rows)};
  for (Eigen::Index i = 0; i < head.weight.size(); ++i) head.weight.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < head.bias.size(); ++i) head.bias(i) = g(rng);
  return head;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.input_size = 16;
  c.widths = {3, 4};
  c.num_classes = 3;
  return c;
}

Eigen::MatrixXd random_image(int side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd img(side, side);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  return img;
}

/// Central finite differences of `loss()` over every parameter of `model`,
/// compared against `analytic`.
template <typename Model, typename Loss>
int count_gradient_mismatches(Model& model, Model& analytic, Loss&& loss, double rel_tol = 1e-4,
                              double abs_tol = 1e-6) {
  auto params = parameter_views(model);
  auto grads = parameter_views(analytic);
  int mismatches = 0;
  const double h = 1e-6;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t].size(); ++i) {
      double& p = params[t].data[i];
      const double saved = p;
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = grads[t].data[i];
      const double err = std::abs(a - numeric);
      if (err > abs_tol && err > rel_tol * std::max(std::abs(a), std::abs(numeric))) {
        ++mismatches;
        MESSAGE(params[t].name << "[" << i << "] analytic " << a << " numeric " << numeric);
      }
    }
  }
  return mismatches;
}

}  // namespace

TEST_CASE("forward_features shape, determinism and zero preservation") {
  std::mt19937_64 rng(3);
  ModelConfig cfg;
  const auto trunk = init_trunk<float>(cfg, rng);
  Eigen::MatrixXf img = Eigen::MatrixXf::Random(64, 64).cwiseAbs();
  const auto a = forward_features(img, trunk);
  const auto b = forward_features(img, trunk);
  CHECK(a.height == 8);
  CHECK(a.width == 8);
  CHECK(a.channels() == 32);
  CHECK(cfg.heatmap_side() == 8);
  CHECK((a.data.array() == b.data.array()).all());

  // a flat image at the input mean standardizes to zero and stays zero
  const auto zero = forward_features(Eigen::MatrixXf::Constant(64, 64, 0.5f), trunk);
  CHECK(zero.data.isZero(0.0));

  CHECK_THROWS_AS(forward_features(Eigen::MatrixXf::Zero(32, 64), trunk), ShapeError);
}

TEST_CASE("classify_multilabel") {
  FeatureMap<double> fm{1, 1, Matrix<double>::Constant(1, 1, 2.0)};
  Linear<double> head{Matrix<double>::Constant(1, 1, 1.5), Vector<double>::Constant(1, -1.0)};
  CHECK(classify_multilabel(fm, head)(0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(classify_multilabel(fm, head)(0) == doctest::Approx(0.8808).epsilon(1e-4));

  Linear<double> zero{Matrix<double>::Zero(3, 1), Vector<double>::Zero(3)};
  CHECK(classify_multilabel(fm, zero).isApproxToConstant(0.5));

  Linear<double> big{Matrix<double>::Zero(1, 1), Vector<double>::Constant(1, 50.0)};
  CHECK(std::abs(classify_multilabel(fm, big)(0) - 1.0) < 1e-6);

  Linear<double> wrong{Matrix<double>::Zero(1, 2), Vector<double>::Zero(1)};
  CHECK_THROWS_AS(classify_multilabel(fm, wrong), ShapeError);
}

TEST_CASE("classify_binary softmax") {
  FeatureMap<double> fm{1, 1, Matrix<double>::Constant(1, 1, 1.0)};
  Linear<double> head{Matrix<double>::Zero(2, 1), Vector<double>::Zero(2)};
  auto [n0, p0] = classify_binary(fm, head);
  CHECK(n0 == doctest::Approx(0.5));
  CHECK(p0 == doctest::Approx(0.5));

  head.bias << 0.0, std::log(3.0);
  auto [n1, p1] = classify_binary(fm, head);
  CHECK(n1 == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p1 == doctest::Approx(0.75).epsilon(1e-12));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto f = make_fm(2, 2, 3, rng);
    auto h = make_head(2, 3, rng);
    auto [n, p] = classify_binary(f, h);
    CHECK(std::abs(n + p - 1.0) < 1e-12);
  }
}

TEST_CASE("compute_cam") {
  FeatureMap<double> fm{1, 1, Matrix<double>(2, 1)};
  fm.data << 2.0, 3.0;
  Vector<double> w(2);
  w << 0.5, -1.0;
  CHECK(compute_cam(fm, w).values(0, 0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(compute_cam(fm, Vector<double>::Zero(2)).values.isZero(0.0));
  CHECK_THROWS_AS(compute_cam(fm, Vector<double>::Zero(3)), ShapeError);

  std::mt19937_64 rng(5);
  auto f = make_fm(3, 4, 5, rng);
  auto g = make_fm(3, 4, 5, rng);
  auto head = make_head(2, 5, rng);
  const Vector<double> w1 = head.weight.row(0).transpose(), w2 = head.weight.row(1).transpose();
  // linearity in w and additivity in f
  CHECK(compute_cam(f, 2.0 * w1).values.isApprox(2.0 * compute_cam(f, w1).values));
  CHECK(compute_cam(f, w1 + w2).values.isApprox(compute_cam(f, w1).values + compute_cam(f, w2).values));
  FeatureMap<double> sum{3, 4, f.data + g.data};
  CHECK(compute_cam(sum, w1).values.isApprox(compute_cam(f, w1).values + compute_cam(g, w1).values));
  // one-hot weights pick out a channel, spatial layout (y, x)
  for (int d = 0; d < 5; ++d) {
    const auto h = compute_cam(f, Vector<double>::Unit(5, d));
    for (int y = 0; y < 3; ++y) {
      for (int x = 0; x < 4; ++x) CHECK(h.values(y, x) == f.at(x, y, d));
    }
  }
}

TEST_CASE("binary_cam averages to the positive log-odds") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = make_fm(4, 4, 5, rng);
    BinaryModel<double> m;
    m.disease = 2;
    m.head = make_head(2, 5, rng);
    const auto [pn, pp] = classify_binary(f, m.head);
    const auto h = binary_cam(f, m);
    CHECK(h.class_id == 2);
    CHECK(h.values.mean() + m.head.bias(1) - m.head.bias(0) == doctest::Approx(std::log(pp / pn)).epsilon(1e-9));
    // a shift shared by both rows changes neither the softmax nor the map
    BinaryModel<double> shifted = m;
    const RowVector<double> v = make_head(1, 5, rng).weight;
    shifted.head.weight.row(0) += v;
    shifted.head.weight.row(1) += v;
    CHECK(binary_cam(f, shifted).values.isApprox(h.values, 1e-12));
  }
}

TEST_CASE("smooth_l1 values and properties") {
  CHECK(smooth_l1(0.0) == 0.0);
  CHECK(smooth_l1(1.0) == doctest::Approx(0.5));
  CHECK(smooth_l1(-1.0) == doctest::Approx(0.5));
  CHECK(smooth_l1(2.0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(smooth_l1(0.5) == doctest::Approx(0.125).epsilon(1e-12));
  // both branches agree at the knot
  CHECK(0.5 * 1.0 * 1.0 == 1.0 - 0.5);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double z = u(rng);
    CHECK(smooth_l1(z) == smooth_l1(-z));
    CHECK(smooth_l1(z) >= 0.0);
    CHECK(smooth_l1(z) <= std::abs(z));
  }
  // derivative is continuous at |z| = 1
  CHECK(smooth_l1_grad(1.0 - 1e-12) == doctest::Approx(smooth_l1_grad(1.0 + 1e-12)));
}

TEST_CASE("regression_loss") {
  Heatmap<double> a{2, Matrix<double>::Constant(2, 2, 1.0)};
  Heatmap<double> b{2, Matrix<double>::Constant(2, 2, 1.5)};
  CHECK(regression_loss(a, a) == 0.0);
  CHECK(regression_loss(a, b) == doctest::Approx(0.5).epsilon(1e-12));

  Heatmap<double> p{0, Matrix<double>::Constant(1, 1, 4.0)};
  Heatmap<double> q{0, Matrix<double>::Constant(1, 1, 1.0)};
  CHECK(regression_loss(p, q) == doctest::Approx(2.5).epsilon(1e-12));

  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    auto f = make_fm(3, 3, 1, rng);
    auto g = make_fm(3, 3, 1, rng);
    Heatmap<double> x{1, f.data.reshaped(3, 3)}, y{1, g.data.reshaped(3, 3)};
    CHECK(regression_loss(x, y) == doctest::Approx(regression_loss(y, x)));
    CHECK(regression_loss(x, y) > 0.0);
  }

  Heatmap<double> other_class{1, Matrix<double>::Constant(2, 2, 1.0)};
  CHECK_THROWS_AS(regression_loss(a, other_class), ShapeError);
  Heatmap<double> other_shape{2, Matrix<double>::Constant(3, 2, 1.0)};
  CHECK_THROWS_AS(regression_loss(a, other_shape), ShapeError);
}

TEST_CASE("classification losses") {
  Vector<double> half = Vector<double>::Constant(4, 0.5);
  Vector<double> labels(4);
  labels << 1, 0, 1, 1;
  CHECK(classification_loss(half, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Vector<double> sure = Vector<double>::Constant(1, 1.0 - kProbabilityClamp);
  const Vector<double> one = Vector<double>::Ones(1);
  CHECK(classification_loss(sure, one) <= 1.2e-7);
  CHECK(classification_loss(one, one) <= 1.2e-7);

  const Vector<double> p08 = Vector<double>::Constant(1, 0.8);
  CHECK(classification_loss(p08, one) ==
        doctest::Approx(-std::log(0.8)).epsilon(1e-12));
  CHECK(binary_classification_loss<double>({0.2, 0.8}, true) == doctest::Approx(0.2231435513).epsilon(1e-9));
}

TEST_CASE("total_loss follows the joint objective") {
  std::mt19937_64 rng(29);
  auto fm = make_fm(2, 2, 3, rng);
  auto head = make_head(2, 3, rng);
  Vector<double> labels(2);
  labels << 1, 0;
  const double cls = classification_loss(classify_multilabel(fm, head), labels);

  // non-seed image
  CHECK(total_loss<double>(fm, head, labels, {}, 0.005) == doctest::Approx(cls).epsilon(1e-12));
  std::vector<SeedTarget<double>> none(2);
  CHECK(total_loss<double>(fm, head, labels, none, 1.0) == doctest::Approx(cls).epsilon(1e-12));

  Heatmap<double> target{0, Matrix<double>::Constant(2, 2, 7.0)};
  std::vector<SeedTarget<double>> seeded = {{true, &target}, {}};
  CHECK(total_loss<double>(fm, head, labels, seeded, 0.0) == doctest::Approx(cls).epsilon(1e-12));
  const double reg = regression_loss(multilabel_cam(fm, head, 0), target);
  CHECK(total_loss<double>(fm, head, labels, seeded, 0.005) == doctest::Approx(cls + 0.005 * reg).epsilon(1e-12));

  // Loss_cls = 0.7 and Loss_reg = 10 give 0.75 at lambda = 0.005
  CHECK(0.7 + 0.005 * 10.0 == doctest::Approx(0.75).epsilon(1e-12));

  std::vector<SeedTarget<double>> corrupt = {{true, nullptr}, {}};
  CHECK_THROWS_AS(total_loss<double>(fm, head, labels, corrupt, 0.005), SeedStoreError);
}

TEST_CASE("learning-rate schedule and sgd_step") {
  TrainConfig cfg;
  CHECK(learning_rate(cfg, 0) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(learning_rate(cfg, 9) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(learning_rate(cfg, 10) == doctest::Approx(0.0001).epsilon(1e-12));
  CHECK(learning_rate(cfg, 25) == doctest::Approx(0.00001).epsilon(1e-12));

  std::mt19937_64 rng(1);
  ModelConfig mc = tiny_config();
  auto model = init_multilabel<double>(mc, rng);
  auto before = model;
  auto grad = zeros_like(model);
  auto velocity = zeros_like(model);
  sgd_step(model, grad, velocity, cfg, 0);
  CHECK(model.head.weight == before.head.weight);
  CHECK(model.trunk.layers[0].weight == before.trunk.layers[0].weight);

  // scalar update: momentum 0, lr 0.1, grad 1 on a zero parameter
  TrainConfig plain = cfg;
  plain.momentum = 0.0;
  plain.learning_rate = 0.1;
  set_zero(model);
  grad.head.bias(0) = 1.0;
  sgd_step(model, grad, velocity, plain, 0);
  CHECK(model.head.bias(0) == doctest::Approx(-0.1).epsilon(1e-12));

  grad.head.bias(1) = std::nan("");
  CHECK_THROWS_AS(sgd_step(model, grad, velocity, plain, 0), DivergenceError);
}

TEST_CASE("gradient check of the joint objective against finite differences") {
  std::mt19937_64 rng(41);
  const ModelConfig mc = tiny_config();
  auto model = init_multilabel<double>(mc, rng);
  // larger head weights so every term carries signal
  model.head = make_head(mc.num_classes, mc.feature_channels(), rng);
  REQUIRE(parameter_count(model) <= 2000);

  const auto img = random_image(mc.input_size, rng);
  Vector<double> labels(3);
  labels << 1, 0, 1;
  const int side = mc.heatmap_side();
  Heatmap<double> target0{0, Matrix<double>(side, side)};
  Heatmap<double> target2{2, Matrix<double>(side, side)};
  std::normal_distribution<double> g(0.0, 2.0);
  for (Eigen::Index i = 0; i < target0.values.size(); ++i) {
    target0.values.data()[i] = g(rng);
    target2.values.data()[i] = g(rng);
  }
  const std::vector<SeedTarget<double>> seed = {{true, &target0}, {}, {true, &target2}};
  const std::vector<SeedTarget<double>> non_seed;

  for (double lambda : {0.0, 0.005, 0.5}) {
    for (const auto* seeds : {&seed, &non_seed}) {
      CAPTURE(lambda);
      CAPTURE(seeds == &seed);
      auto grad = zeros_like(model);
      const double loss = multilabel_objective<double>(model, img, labels, *seeds, lambda, &grad);
      auto fm = forward_features(img, model.trunk);
      CHECK(loss == doctest::Approx(total_loss<double>(fm, model.head, labels, *seeds, lambda)).epsilon(1e-12));
      const auto f = [&] { return multilabel_objective<double>(model, img, labels, *seeds, lambda, nullptr); };
      CHECK(count_gradient_mismatches(model, grad, f) == 0);
    }
  }
}

TEST_CASE("gradient check of the binary objective") {
  std::mt19937_64 rng(43);
  const ModelConfig mc = tiny_config();
  const auto trunk = init_trunk<double>(mc, rng);
  auto model = init_binary_from(trunk, 1, rng);
  model.head = make_head(2, mc.feature_channels(), rng);
  const auto img = random_image(mc.input_size, rng);
  for (bool positive : {true, false}) {
    auto grad = zeros_like(model);
    binary_objective<double>(model, img, positive, &grad);
    const auto f = [&] { return binary_objective<double>(model, img, positive, nullptr); };
    CHECK(count_gradient_mismatches(model, grad, f) == 0);
  }
}

TEST_CASE("non-seed images contribute no regression gradient") {
  std::mt19937_64 rng(47);
  const ModelConfig mc = tiny_config();
  auto model = init_multilabel<double>(mc, rng);
  const auto img = random_image(mc.input_size, rng);
  Vector<double> labels = Vector<double>::Zero(3);
  auto g0 = zeros_like(model), g1 = zeros_like(model);
  multilabel_objective<double>(model, img, labels, {}, 0.0, &g0);
  multilabel_objective<double>(model, img, labels, {}, 10.0, &g1);
  auto v0 = parameter_views(g0), v1 = parameter_views(g1);
  for (std::size_t i = 0; i < v0.size(); ++i) CHECK(v0[i].flat() == v1[i].flat());
}

TEST_CASE("checkpoint round-trip is bit exact") {
  std::mt19937_64 rng(53);
  ModelConfig mc;
  const auto model = init_multilabel<float>(mc, rng);
  const auto path = std::filesystem::temp_directory_path() / "agcl_ckpt_test.ckpt";
  CheckpointMeta meta;
  meta.epoch = 12;
  std::ostringstream state;
  state << rng;
  meta.rng_state = state.str();
  meta.config = {{"lambda", 0.005}};
  save_checkpoint(path, model, meta);
  CHECK(checkpoint_kind(path) == "multilabel");

  CheckpointMeta back;
  auto loaded = load_multilabel(path, &back);
  CHECK(back.epoch == 12);
  CHECK(back.config["lambda"] == 0.005);
  std::mt19937_64 resumed;
  std::istringstream(back.rng_state) >> resumed;
  CHECK(resumed == rng);
  CHECK(loaded.trunk.same_shape(model.trunk));
  auto a = parameter_views(const_cast<MultiLabelModel<float>&>(model));
  auto b = parameter_views(loaded);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].flat() == b[i].flat());
  }
  CHECK_THROWS(load_binary(path));

  const auto binary = init_binary_from(model.trunk, 4, rng);
  save_checkpoint(path, binary, {});
  auto lb = load_binary(path);
  CHECK(lb.disease == 4);
  CHECK(lb.trunk.same_shape(model.trunk));
  CHECK(lb.head.weight == binary.head.weight);
  std::filesystem::remove(path);
}

TEST_CASE("training is deterministic and resumes bit-exactly from a checkpointed state") {
  const ModelConfig mc = tiny_config();
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 4;
  std::mt19937_64 data_rng(59);
  std::vector<Eigen::MatrixXd> images;
  std::vector<Vector<double>> labels;
  for (int i = 0; i < 12; ++i) {
    images.push_back(random_image(mc.input_size, data_rng));
    Vector<double> y = Vector<double>::Zero(3);
    y(i % 3) = 1;
    labels.push_back(y);
  }
  const auto train = [&](MultiLabelModel<double>& m, MultiLabelModel<double>& v, int epochs, int offset,
                         std::mt19937_64& rng) {
    const auto obj = [&](std::size_t i, MultiLabelModel<double>* g, double s) {
      return multilabel_objective<double>(m, images[i], labels[i], {}, 0.0, g, s);
    };
    return run_epochs(m, v, images.size(), obj, cfg, epochs, offset, rng);
  };

  std::mt19937_64 init_rng(61);
  const auto start = init_multilabel<double>(mc, init_rng);

  auto a = start, va = zeros_like(start);
  std::mt19937_64 ra(7);
  train(a, va, 4, 0, ra);

  auto b = start, vb = zeros_like(start);
  std::mt19937_64 rb(7);
  train(b, vb, 2, 0, rb);
  // interrupt: snapshot params, velocity and RNG, then continue from the copies
  std::ostringstream rng_state;
  rng_state << rb;
  auto b2 = b, vb2 = vb;
  std::mt19937_64 rb2;
  std::istringstream(rng_state.str()) >> rb2;
  train(b2, vb2, 2, 2, rb2);

  auto pa = parameter_views(a), pb = parameter_views(b2);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].flat() == pb[i].flat());
}
