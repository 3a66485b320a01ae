#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "aat/apr.hpp"
#include "aat/attack.hpp"
#include "aat/confusion.hpp"
#include "aat/crop_bank.hpp"
#include "aat/errors.hpp"
#include "aat/scene.hpp"
#include "doctest.h"

using namespace aat;

namespace {

Detection det(double x1, double y1, double x2, double y2, int cls = 0, double score = 0.9) {
  return Detection{Box{x1, y1, x2, y2}, cls, score};
}

ConfusionMatrix with_diagonal(const std::vector<double>& diag) {
  const int n = static_cast<int>(diag.size());
  ConfusionMatrix m(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n, n > 1 ? (1 - diag[i]) / (n - 1) : 0.0);
    row[i] = diag[i];
    m.set_row(i, row);
  }
  return m;
}

ConfusionMatrix random_simplex(Rng& rng, int n) {
  ConfusionMatrix m(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(n);
    double s = 0;
    for (double& v : row) s += (v = -std::log(1 - rng.uniform()));
    for (double& v : row) v /= s;
    // Coarse values make exact ties in the dominance test common.
    if (rng.bernoulli(0.5)) {
      std::vector<double> coarse(n, 0.0);
      int left = 4;
      for (int j = 0; j + 1 < n; ++j) {
        const int k = rng.randint(0, left);
        coarse[j] = k / 4.0;
        left -= k;
      }
      coarse[n - 1] = left / 4.0;
      row = coarse;
    }
    m.set_row(i, row);
  }
  return m;
}

// Literal reading of the listing: exhaustive best-match search with the pinned
// tie order, then the two branches.
Detections reference_algorithm(const Detections& bt, const Detections& bt_adv, const ConfusionMatrix& M) {
  Detections out;
  double avg_diag = 0;
  for (int c = 0; c < M.num_classes(); ++c) avg_diag += M.at(c, c);
  avg_diag /= M.num_classes();
  for (const Detection& bi : bt_adv) {
    std::vector<std::size_t> order(bt.size());
    for (std::size_t j = 0; j < bt.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ia = iou(bi.box, bt[a].box), ib = iou(bi.box, bt[b].box);
      if (ia != ib) return ia > ib;
      if (bt[a].score != bt[b].score) return bt[a].score > bt[b].score;
      const Box& x = bt[a].box;
      const Box& y = bt[b].box;
      return std::tie(x.x1, x.y1, x.x2, x.y2) < std::tie(y.x1, y.y1, y.x2, y.y2);
    });
    const bool have = !order.empty();
    if (have && iou(bi.box, bt[order[0]].box) > 0.5) {
      const int cj = bt[order[0]].class_id, ci = bi.class_id;
      if (M.at(ci, cj) >= M.at(cj, ci)) out.push_back(bi);
    } else if (M.at(bi.class_id, bi.class_id) < avg_diag) {
      out.push_back(bi);
    }
  }
  return out;
}

Detections random_labels(Rng& rng, int n, int classes) {
  Detections out;
  for (int i = 0; i < n; ++i) {
    const double x = rng.randint(0, 12), y = rng.randint(0, 12);
    out.push_back(det(x, y, x + rng.randint(4, 10), y + rng.randint(4, 10), rng.randint(0, classes - 1),
                      rng.randint(1, 4) / 4.0));
  }
  return out;
}

DetectorConfig tiny_config(int classes = 3) {
  DetectorConfig c;
  c.num_classes = classes;
  c.channels = {4, 8, 8, 8};
  return c;
}

}  // namespace

TEST_CASE("sign convention for the FGSM step") {
  const double beta = 4.0 / 255;
  CHECK(beta * sign_of(0.3) == beta);
  CHECK(beta * sign_of(-0.2) == -beta);
  CHECK(beta * sign_of(0.0) == 0.0);
}

TEST_CASE("fgsm attack invariants on a random detector") {
  GridDetector<double> det_model(tiny_config());
  const auto params = det_model.init_parameters(3);
  Rng rng(12);
  int increased = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = generate_scene(seed, SceneSpec{.class_shapes = {ShapeKind::kCircle, ShapeKind::kSquare,
                                                                    ShapeKind::kTriangle},
                                                   .class_weights = {1, 1, 1}},
                                   DomainConfig::default_target());
    const double beta = std::vector<double>{1, 2, 4, 8}[seed % 4] / 255;
    const AdversarialExample ex = fgsm_attack(det_model, params, s.image, s.objects, beta);
    CHECK_FALSE(ex.skipped);
    const auto pert = ex.perturbation(s.image);
    for (std::size_t i = 0; i < pert.size(); ++i) {
      const float st = ex.step[i];
      REQUIRE((st == 0.0f || st == static_cast<float>(beta) || st == -static_cast<float>(beta)));
      REQUIRE(std::abs(pert[i]) <= static_cast<float>(beta) + 1e-6f);
      REQUIRE((ex.image.pixels[i] >= 0.0f && ex.image.pixels[i] <= 1.0f));
    }
    if (s.objects.empty()) continue;
    ++trials;
    increased += attack_loss(det_model, params, ex.image, s.objects) >=
                 attack_loss(det_model, params, s.image, s.objects);
  }
  CHECK(increased >= 0.9 * trials);
}

TEST_CASE("fgsm with no pseudo-labels leaves the image unchanged") {
  GridDetector<float> model(tiny_config());
  const auto params = model.init_parameters(1);
  const Image img = generate_scene(4, SceneSpec{}, DomainConfig::source()).image;
  const AdversarialExample ex = fgsm_attack(model, params, img, {}, 8.0 / 255);
  CHECK(ex.image == img);
  CHECK(std::all_of(ex.step.begin(), ex.step.end(), [](float v) { return v == 0.0f; }));
  CHECK(std::none_of(ex.attacked_cells.begin(), ex.attacked_cells.end(), [](auto v) { return v != 0; }));
}

TEST_CASE("batched attack equals per-image attacks and leaves the teacher untouched") {
  GridDetector<double> model(tiny_config());
  const auto params = model.init_parameters(5);
  const auto before = params;
  SceneSpec spec;
  spec.class_shapes = {ShapeKind::kCircle, ShapeKind::kSquare, ShapeKind::kTriangle};
  spec.class_weights = {1, 1, 1};
  const Scene a = generate_scene(1, spec, DomainConfig::default_target());
  const Scene b = generate_scene(2, spec, DomainConfig::default_target());
  const auto batch = fgsm_attack(model, params, {&a.image, &b.image}, {a.objects, {}}, 2.0 / 255);
  CHECK(batch[0].image == fgsm_attack(model, params, a.image, a.objects, 2.0 / 255).image);
  CHECK(batch[1].image == b.image);
  for (std::size_t i = 0; i < params.size(); ++i) CHECK(params[i].value == before[i].value);
  CHECK_THROWS_AS(fgsm_attack(model, params, {&a.image}, {}, 0.1), ContractError);
}

TEST_CASE("confusion matrix update") {
  ConfusionMatrix m(2, 0.9);
  m.update(0, {0.6, 0.4});
  CHECK(m.at(0, 0) == doctest::Approx(0.96));
  CHECK(m.at(0, 1) == doctest::Approx(0.04));
  CHECK(m.row(1) == std::vector<double>{0, 1});
  CHECK(m.observations(0) == 1);
  CHECK(m.observations(1) == 0);
  CHECK_THROWS_AS(m.update(2, {0.5, 0.5}), ContractError);
  CHECK_THROWS_AS(m.update(0, {0.5, 0.6}), ContractError);
}

TEST_CASE("confusion matrix rows stay on the simplex") {
  Rng rng(3);
  ConfusionMatrix m(5, 0.99);
  for (int step = 0; step < 10000; ++step) {
    std::vector<double> q(5);
    double s = 0;
    for (double& v : q) s += (v = rng.uniform() * rng.uniform());
    for (double& v : q) v /= s;
    m.update(rng.randint(0, 3), q);
  }
  for (int i = 0; i < 5; ++i) {
    double s = 0;
    for (int j = 0; j < 5; ++j) {
      REQUIRE((m.at(i, j) >= 0 && m.at(i, j) <= 1));
      s += m.at(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(m.row(4) == std::vector<double>{0, 0, 0, 0, 1});
}

TEST_CASE("confusion matrix from detector outputs drops the background column") {
  RawOutputs<double> raw;
  raw.logits = Tensor<double>(Shape{1, 3, 2, 2});
  // Cell (0,0): logits (log 3, log 1, log 4) -> foreground (0.75, 0.25).
  raw.logits[0] = std::log(3.0);
  raw.logits[4] = 0.0;
  raw.logits[8] = std::log(4.0);
  GridAssignment a;
  a.grid = 2;
  a.background = 2;
  a.target_class = {0, 2, 2, 2};
  ConfusionMatrix m(2, 0.5);
  CHECK(update_confusion_matrix(m, raw, {a}) == 1);
  CHECK(m.at(0, 0) == doctest::Approx(0.875));
  CHECK(m.at(0, 1) == doctest::Approx(0.125));
}

TEST_CASE("dominance and minority") {
  ConfusionMatrix m(2);
  CHECK(less_dominant(0, 0, m));
  m.set_row(1, {0.3, 0.7});
  m.set_row(0, {0.9, 0.1});
  CHECK(less_dominant(1, 0, m));
  CHECK_FALSE(less_dominant(0, 1, m));
  m.set_row(1, {0.1, 0.9});
  CHECK(less_dominant(0, 1, m));
  CHECK(less_dominant(1, 0, m));

  CHECK(minority_classes(ConfusionMatrix(4)).empty());
  const ConfusionMatrix d = with_diagonal({0.9, 0.9, 0.3});
  CHECK_FALSE(is_minority(0, d));
  CHECK_FALSE(is_minority(1, d));
  CHECK(is_minority(2, d));
  CHECK_FALSE(is_minority(0, with_diagonal({0.4})));
}

TEST_CASE("adversarial pseudo-label examples") {
  const Detections vanilla{det(10, 10, 30, 30, 0, 0.95), det(40, 40, 60, 60, 1, 0.85)};
  ConfusionMatrix m(3);
  CHECK(generate_adversarial_pseudo_labels(vanilla, vanilla, m) == vanilla);

  // Class 0 "car" at A; attacked pass says class 1 "truck" at IoU ~0.9.
  ConfusionMatrix bias(2);
  bias.set_row(1, {0.3, 0.7});  // M[truck][car]
  bias.set_row(0, {0.9, 0.1});  // M[car][truck]
  const Detections car{det(10, 10, 30, 30, 0)};
  const Detections truck{det(10, 11, 30, 30, 1, 0.81)};
  CHECK(iou(car[0].box, truck[0].box) > 0.9);
  CHECK(generate_adversarial_pseudo_labels(car, truck, bias) == truck);
  const auto why = explain_adversarial_pseudo_labels(car, truck, bias);
  REQUIRE(why.size() == 1);
  CHECK(why[0].disposition == Disposition::kCorrected);
  // Reversed dominance: the relabel is rejected and the vanilla label is suppressed.
  const auto rejected = explain_adversarial_pseudo_labels(Detections{det(10, 10, 30, 30, 1)},
                                                          Detections{det(10, 11, 30, 30, 0)}, bias);
  REQUIRE(rejected.size() == 1);
  CHECK(rejected[0].disposition == Disposition::kSuppressed);
  CHECK(rejected[0].from_vanilla);

  // An unmatched detection (IoU ~0.2) is recovered only for a minority class.
  const Detections v{det(0, 0, 20, 20, 0)};
  const Detections a{det(12, 12, 32, 32, 2)};
  CHECK(iou(v[0].box, a[0].box) < 0.25);
  const ConfusionMatrix minority = with_diagonal({0.9, 0.9, 0.3});
  CHECK(generate_adversarial_pseudo_labels(v, a, minority) == a);
  CHECK(generate_adversarial_pseudo_labels(v, a, with_diagonal({0.6, 0.6, 0.9})).empty());
  const auto rec = explain_adversarial_pseudo_labels(v, a, minority);
  REQUIRE(rec.size() == 2);
  CHECK(rec[0].disposition == Disposition::kRecovered);
  CHECK(rec[1].disposition == Disposition::kSuppressed);

  // Empty vanilla set: only the minority branch applies.
  CHECK(generate_adversarial_pseudo_labels({}, a, minority) == a);
  CHECK(generate_adversarial_pseudo_labels({}, Detections{det(0, 0, 9, 9, 0)}, minority).empty());
  CHECK_THROWS_AS(generate_adversarial_pseudo_labels({}, Detections{det(0, 0, 9, 9, 5)}, minority), ContractError);
}

TEST_CASE("best match tie-breaks") {
  // Two identical boxes: the higher score wins, then the smaller box.
  const Detections v{det(0, 0, 10, 10, 0, 0.5), det(0, 0, 10, 10, 1, 0.9)};
  CHECK(best_match(Box{0, 0, 10, 10}, v) == 1);
  const Detections w{det(2, 0, 12, 10, 0, 0.9), det(-2, 0, 8, 10, 1, 0.9)};
  CHECK(iou(Box{0, 0, 10, 10}, w[0].box) == iou(Box{0, 0, 10, 10}, w[1].box));
  CHECK(best_match(Box{0, 0, 10, 10}, w) == 1);
  CHECK(best_match(Box{0, 0, 10, 10}, {}) == -1);
}

TEST_CASE("adversarial pseudo-labels match the literal reference") {
  Rng rng(2024);
  int corrected = 0, recovered = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int classes = rng.randint(1, 5);
    const ConfusionMatrix M = random_simplex(rng, classes);
    const Detections vanilla = random_labels(rng, rng.randint(0, 10), classes);
    Detections adv = random_labels(rng, rng.randint(0, 5), classes);
    for (const Detection& v : vanilla)
      if (rng.bernoulli(0.5)) adv.push_back(Detection{v.box, rng.randint(0, classes - 1), v.score});
    if (adv.size() > 10) adv.resize(10);
    const Detections got = generate_adversarial_pseudo_labels(vanilla, adv, M);
    REQUIRE(got == reference_algorithm(vanilla, adv, M));
    for (const Detection& d : got)
      REQUIRE(std::any_of(adv.begin(), adv.end(), [&](const Detection& a) { return a == d; }));
    for (const auto& why : explain_adversarial_pseudo_labels(vanilla, adv, M)) {
      corrected += why.disposition == Disposition::kCorrected;
      recovered += why.disposition == Disposition::kRecovered;
    }
  }
  CHECK(corrected > 0);
  CHECK(recovered > 0);
}

TEST_CASE("crop bank FIFO and capacity") {
  CropBank bank(2, 3);
  for (int i = 0; i < 4; ++i) bank.push(CropEntry{Image(2, 2, i / 10.0f), 1, i, i});
  CHECK(bank.size(1) == 3);
  CHECK(bank.queue(1).front().image_id == 1);
  CHECK(bank.queue(1).back().image_id == 3);
  CHECK(bank.size(0) == 0);
  CHECK_THROWS_AS(bank.push(CropEntry{Image(2, 2), 2, 0, 0}), ContractError);
  bank.retain_only({0});
  CHECK(bank.total() == 0);
}

TEST_CASE("crop bank exhaustive trace against a deque model") {
  // Every sequence of harvest events up to length 2K over three kinds of
  // labels: robust minority, non-robust minority, robust majority.
  const int K = 3;
  const ConfusionMatrix m = with_diagonal({0.9, 0.2, 0.9});
  const Image img = generate_scene(1, SceneSpec{}, DomainConfig::source()).image;
  int sequences = 0;
  std::function<void(std::vector<int>&)> run = [&](std::vector<int>& seq) {
    CropBank bank(3, K);
    std::deque<int> model;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const int kind = seq[t];
      const int cls = kind == 2 ? 0 : 1;
      const Detections vanilla{det(4, 4, 20, 20 + static_cast<double>(t), cls)};
      const Detections adv = kind == 1 ? Detections{det(30, 30, 40, 40, cls)} : vanilla;
      harvest_robust_minority_crops(img, vanilla, adv, m, bank, static_cast<int>(t), static_cast<long>(t));
      if (kind == 0) {
        model.push_back(static_cast<int>(t));
        if (static_cast<int>(model.size()) > K) model.pop_front();
      }
      REQUIRE(bank.size(0) == 0);
      REQUIRE(bank.size(2) == 0);
      REQUIRE(bank.size(1) == static_cast<int>(model.size()));
      for (std::size_t i = 0; i < model.size(); ++i) {
        REQUIRE(bank.queue(1)[i].image_id == model[i]);
        REQUIRE(bank.queue(1)[i].patch.height == 16 + model[i]);
      }
    }
    ++sequences;
    if (static_cast<int>(seq.size()) == 2 * K) return;
    for (int kind = 0; kind < 3; ++kind) {
      seq.push_back(kind);
      run(seq);
      seq.pop_back();
    }
  };
  std::vector<int> seq;
  run(seq);
  CHECK(sequences == 1 + 3 + 9 + 27 + 81 + 243 + 729);
}

TEST_CASE("harvest purges classes that are no longer minority") {
  CropBank bank(2, 4);
  const Image img(32, 32, 0.5f);
  const Detections v{det(2, 2, 12, 12, 1)};
  CHECK(harvest_robust_minority_crops(img, v, v, with_diagonal({0.9, 0.5}), bank) == 1);
  CHECK(harvest_robust_minority_crops(img, v, v, ConfusionMatrix(2), bank) == 0);
  CHECK(bank.total() == 0);
}

TEST_CASE("crop sampling is class balanced") {
  Rng rng(1);
  CropBank bank(3, 8);
  CHECK(sample_crops_for_oversampling(bank, rng, 2).empty());
  for (int i = 0; i < 5; ++i) bank.push(CropEntry{Image(3, 3), 2, i, 0});
  auto one = sample_crops_for_oversampling(bank, rng, 2);
  REQUIRE(one.size() == 2);
  CHECK((one[0].class_id == 2 && one[1].class_id == 2));
  bank.push(CropEntry{Image(3, 3), 0, 9, 0});
  for (int t = 0; t < 20; ++t) {
    auto two = sample_crops_for_oversampling(bank, rng, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0].class_id != two[1].class_id);
  }
}
