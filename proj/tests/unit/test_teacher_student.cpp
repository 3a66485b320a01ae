#include <algorithm>
#include <cmath>
#include <sstream>

#include "aat/errors.hpp"
#include "aat/gradcheck.hpp"
#include "aat/metrics.hpp"
#include "aat/ops.hpp"
#include "aat/teacher_student.hpp"
#include "doctest.h"

using namespace aat;

namespace {

SceneSpec two_class_spec() {
  SceneSpec spec;
  spec.class_shapes = {ShapeKind::kCircle, ShapeKind::kSquare};
  spec.class_weights = {4, 1};
  return spec;
}

DetectorConfig tiny_model() {
  DetectorConfig c;
  c.num_classes = 2;
  c.channels = {4, 8, 8, 8};
  return c;
}

TrainConfig tiny_train(TrainMode mode) {
  TrainConfig t;
  t.mode = mode;
  t.batch_source = 2;
  t.batch_target = 2;
  t.learning_rate = 0.02;
  t.threshold = 0.3;  // low enough that a barely trained teacher emits labels
  return t;
}

struct Fixture {
  Split source = generate_split("source_train", 1, two_class_spec(), DomainConfig::source(), 16, {"a", "b"});
  Split target = generate_split("target_train", 1, two_class_spec(), DomainConfig::default_target(), 16, {"a", "b"});
  TrainData data() const { return TrainData{&source, &target, {1}}; }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

ParameterSet<double> constant_set(double v, std::size_t n = 3) {
  ParameterSet<double> p;
  p.add("w", Tensor<double>(Shape{n}, v));
  p.add("b", Tensor<double>(Shape{1, n}, v));
  return p;
}

bool same_params(const ParameterSet<float>& a, const ParameterSet<float>& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].value == b[i].value)) return false;
  return true;
}

}  // namespace

TEST_CASE("ema update examples") {
  auto t = constant_set(1.0);
  ema_update(t, constant_set(0.0), 0.9996);
  CHECK(t[0].value[0] == doctest::Approx(0.9996).epsilon(1e-15));
  auto fixed = constant_set(0.25);
  ema_update(fixed, constant_set(0.25), 0.9996);
  CHECK(fixed[1].value[2] == 0.25);
  ParameterSet<double> other;
  other.add("w", Tensor<double>(Shape{4}));
  CHECK_THROWS_AS(ema_update(t, other, 0.5), ShapeError);
}

TEST_CASE("ema matches its closed form after 100 steps") {
  const double alpha = 0.9996, t0 = 0.7, s = -1.3;
  auto teacher = constant_set(t0);
  const auto student = constant_set(s);
  for (int i = 0; i < 100; ++i) ema_update(teacher, student, alpha);
  const double an = std::pow(alpha, 100);
  for (const auto& p : teacher)
    for (double v : p.value.data()) CHECK(std::abs(v - (an * t0 + (1 - an) * s)) < 1e-10);
}

TEST_CASE("ema contracts towards the student") {
  Rng rng(3);
  ParameterSet<double> t, s;
  Tensor<double> a(Shape{50}), b(Shape{50});
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = rng.normal(0, 1);
    b[i] = rng.normal(0, 1);
  }
  t.add("x", a);
  s.add("x", b);
  ema_update(t, s, 0.9);
  for (std::size_t i = 0; i < 50; ++i) CHECK(std::abs(t[0].value[i] - b[i]) <= std::abs(a[i] - b[i]));
}

TEST_CASE("vanilla pseudo-labels") {
  GridDetector<float> model(tiny_model());
  const auto& img = fixture().target.items[0].image;
  auto params = model.init_parameters(2);
  CHECK(generate_vanilla_pseudo_labels(model, params, {&img}, 1.0, 0.5)[0].labels.empty());

  DetectorConfig zero = tiny_model();
  zero.zero_init_heads = true;
  GridDetector<float> uniform(zero);
  CHECK(generate_vanilla_pseudo_labels(uniform, uniform.init_parameters(1), {&img}, 0.8, 0.5)[0].labels.empty());

  // A biased head makes class 0 confident everywhere.
  params.at("cls.bias").value[0] = 6.0f;
  const auto a = generate_vanilla_pseudo_labels(model, params, {&img}, 0.5, 0.5);
  const auto b = generate_vanilla_pseudo_labels(model, params, {&img}, 0.5, 0.5);
  CHECK_FALSE(a[0].labels.empty());
  CHECK(a[0].labels == b[0].labels);
  CHECK(a[0].provenance == Provenance::kVanilla);
  for (const Detection& d : a[0].labels) CHECK(d.score >= 0.5);
  // Raising the threshold never adds a label.
  for (double thr : {0.6, 0.8, 0.95, 0.99}) {
    const auto higher = generate_vanilla_pseudo_labels(model, params, {&img}, thr, 0.5);
    for (const Detection& d : higher[0].labels)
      CHECK(std::find(a[0].labels.begin(), a[0].labels.end(), d) != a[0].labels.end());
  }
}

TEST_CASE("target loss is classification only") {
  GridDetector<double> model(tiny_model());
  const auto params = model.init_parameters(4);
  Tape<double> tape;
  const auto bound = params.bind(tape, true);
  const auto& img = fixture().target.items[1].image;
  const auto vars = model.forward(bound, tape.leaf(image_to_tensor<double>(img)));
  const DetectionLoss<double> empty = target_loss(vars, {Detections{}}, model.geometry(), 2);
  const DetectionLoss<double> pure_bg =
      detection_loss(vars, {assign_targets({}, model.geometry(), 2)}, false);
  CHECK(empty.terms.classification == pure_bg.terms.classification);
  const DetectionLoss<double> with =
      target_loss(vars, {Detections{Detection{Box{10, 10, 30, 30}, 1, 0.9}}}, model.geometry(), 2);
  CHECK(with.terms.regression == 0.0);
  tape.backward(with.total);
  const auto grads = ParameterSet<double>::gradients(tape, bound);
  // The box head never receives a gradient from the target loss.
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name.rfind("box.", 0) == 0) {
      for (double g : grads[i].data()) CHECK(g == 0.0);
    }
  }
}

TEST_CASE("discriminator loss") {
  Rng rng(5);
  Tensor<double> fs(Shape{2, 3, 2, 2}), ft(Shape{1, 3, 2, 2});
  for (double& v : fs.data()) v = rng.normal(0, 1);
  for (double& v : ft.data()) v = rng.normal(0, 1);
  auto disc = init_discriminator<double>(3, 4, 9);

  SUBCASE("a confused discriminator scores ln 2") {
    disc.at("dis1.weight").value.fill(0.0);
    Tape<double> tape;
    const auto d = disc.bind(tape, true);
    const auto loss = discriminator_loss(d, tape.leaf(fs), tape.leaf(ft), 0.1);
    CHECK(loss.value().item() == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("reversal scales the feature gradient by -lambda") {
    auto loss_of = [&](const Tensor<double>& x) {
      Tape<double> tape;
      const auto d = disc.bind(tape, false);
      return discriminator_loss(d, tape.leaf(x), tape.leaf(ft), 0.1).value().item();
    };
    const Tensor<double> numeric =
        finite_difference_gradient<double>(std::function<double(const Tensor<double>&)>(loss_of), fs, 1e-6);
    for (double lambda : {0.0, 0.1, 1.0}) {
      Tape<double> tape;
      const auto d = disc.bind(tape, true);
      Var<double> x = tape.leaf(fs, true);
      tape.backward(discriminator_loss(d, x, tape.leaf(ft), lambda));
      const Tensor<double>& g = tape.grad(x);
      for (std::size_t i = 0; i < g.numel(); ++i) CHECK(g[i] == doctest::Approx(-lambda * numeric[i]).epsilon(1e-5));
      // The discriminator itself always sees the plain gradient.
      CHECK(std::any_of(tape.grad(d[0]).data().begin(), tape.grad(d[0]).data().end(),
                        [](double v) { return v != 0.0; }));
    }
  }
}

TEST_CASE("burn-in") {
  const Fixture& f = fixture();
  Trainer trainer(tiny_model(), tiny_train(TrainMode::kMeanTeacher), 11);
  TrainState s = trainer.initial_state();
  const auto fresh = s.student;
  trainer.burn_in(s, f.source, 0);
  CHECK(same_params(s.teacher, fresh));
  CHECK(same_params(s.student, fresh));

  trainer.burn_in(s, f.source, 3);
  CHECK(s.burn_in_done == 3);
  CHECK(parameter_distance(s.teacher, s.student) == 0.0);
  CHECK(parameter_distance(s.student, fresh) > 0.0);
}

TEST_CASE("burn-in improves source mAP over the untrained model") {
  SceneSpec spec = two_class_spec();
  spec.class_weights = {1, 1};
  const Split train = generate_split("source_train", 2, spec, DomainConfig::source(), 200, {"a", "b"});
  const Split test = generate_split("source_test", 2, spec, DomainConfig::source(), 60, {"a", "b"});
  TrainConfig cfg = tiny_train(TrainMode::kSourceOnly);
  cfg.batch_source = 8;
  cfg.learning_rate = 0.03;
  cfg.augment_source = false;
  Trainer trainer(tiny_model(), cfg, 3);
  TrainState s = trainer.initial_state();
  std::vector<Detections> gt;
  for (const auto& item : test.items) gt.push_back(item.labels);
  const double before = evaluate(trainer.predict(s.student, test), gt, 2).map;
  trainer.burn_in(s, train, 250);
  const double after = evaluate(trainer.predict(s.student, test), gt, 2).map;
  MESSAGE("source mAP before " << before << " after " << after);
  CHECK(after > before);
}

TEST_CASE("train step modes") {
  const Fixture& f = fixture();
  SUBCASE("mean teacher reports no adversarial term and ema-updates the teacher") {
    Trainer t(tiny_model(), tiny_train(TrainMode::kMeanTeacher), 1);
    TrainState s = t.initial_state();
    t.burn_in(s, f.source, 2);
    for (int i = 0; i < 3; ++i) {
      const auto old_teacher = s.teacher;
      const LossReport r = t.train_step(s, f.data());
      CHECK(r.l_t_adv == 0.0);
      CHECK(r.adversarial_labels == 0);
      auto expected = old_teacher;
      ema_update(expected, s.student, t.config().ema_alpha);
      CHECK(same_params(expected, s.teacher));
    }
    CHECK(s.iteration == 3);
  }
  SUBCASE("source-only never touches pseudo-labels") {
    Trainer t(tiny_model(), tiny_train(TrainMode::kSourceOnly), 1);
    TrainState s = t.initial_state();
    const LossReport r = t.train_step(s, TrainData{&f.source, nullptr, {}});
    CHECK(r.pseudo_labels == 0);
    CHECK(r.l_t == 0.0);
    CHECK(r.l_dis == 0.0);
  }
  SUBCASE("zero target and domain weights give the pure source gradient") {
    TrainConfig mt = tiny_train(TrainMode::kMeanTeacher);
    mt.lambda_t = 0;
    mt.lambda_dis = 0;
    Trainer a(tiny_model(), mt, 4), b(tiny_model(), tiny_train(TrainMode::kSourceOnly), 4);
    TrainState sa = a.initial_state(), sb = b.initial_state();
    a.train_step(sa, f.data());
    b.train_step(sb, f.data());
    CHECK(same_params(sa.student, sb.student));
  }
  SUBCASE("aat without RMO keeps the crop bank empty") {
    TrainConfig c = tiny_train(TrainMode::kAat);
    c.rmo = false;
    Trainer t(tiny_model(), c, 2);
    TrainState s = t.initial_state();
    t.burn_in(s, f.source, 5);
    for (int i = 0; i < 4; ++i) CHECK(t.train_step(s, f.data()).bank_fill == 0);
  }
  SUBCASE("loss report recomposes the total") {
    for (TrainMode mode : {TrainMode::kSourceOnly, TrainMode::kMeanTeacher, TrainMode::kAat, TrainMode::kOracle}) {
      TrainConfig c = tiny_train(mode);
      c.lambda_t = 0.7;
      c.lambda_dis = 0.3;
      Trainer t(tiny_model(), c, 6);
      TrainState s = t.initial_state();
      t.burn_in(s, f.source, 5);
      for (int i = 0; i < 3; ++i) {
        const LossReport r = t.train_step(s, f.data());
        CHECK(r.total == doctest::Approx(r.recomposed(0.7, 0.3)).epsilon(1e-6));
      }
    }
  }
  SUBCASE("divergence names the loss term") {
    Trainer t(tiny_model(), tiny_train(TrainMode::kMeanTeacher), 1);
    TrainState s = t.initial_state();
    s.student.at("cls.weight").value.fill(3e37f);
    try {
      t.train_step(s, f.data());
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("L_s") != std::string::npos);
    }
  }
  SUBCASE("missing target split is a contract error") {
    Trainer t(tiny_model(), tiny_train(TrainMode::kAat), 1);
    TrainState s = t.initial_state();
    CHECK_THROWS_AS(t.train_step(s, TrainData{&f.source, nullptr, {}}), ContractError);
  }
}

TEST_CASE("training is deterministic and resumable from a checkpoint") {
  const Fixture& f = fixture();
  TrainConfig c = tiny_train(TrainMode::kAat);
  Trainer t(tiny_model(), c, 8);
  auto run = [&](int steps) {
    TrainState s = t.initial_state();
    t.burn_in(s, f.source, 4);
    for (int i = 0; i < steps; ++i) t.train_step(s, f.data());
    return s;
  };
  const TrainState a = run(4), b = run(4);
  CHECK(same_params(a.student, b.student));
  CHECK(same_params(a.teacher, b.teacher));
  CHECK(encode_checkpoint(to_checkpoint(a, "")) == encode_checkpoint(to_checkpoint(b, "")));

  TrainState half = run(2);
  const auto bytes = encode_checkpoint(to_checkpoint(half, R"({"experiment":"x"})"));
  TrainState resumed = t.initial_state();
  restore(resumed, decode_checkpoint(bytes));
  CHECK(resumed.iteration == 2);
  CHECK(resumed.bank.total() == half.bank.total());
  for (int i = 0; i < 2; ++i) t.train_step(resumed, f.data());
  CHECK(same_params(resumed.student, a.student));
  CHECK(same_params(resumed.teacher, a.teacher));
}

TEST_CASE("config validation and log format") {
  TrainConfig c;
  c.ema_alpha = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = TrainConfig{};
  c.threshold = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK(train_mode_from_string("mt-baseline") == TrainMode::kMeanTeacher);
  CHECK_FALSE(train_mode_from_string("bogus").has_value());

  std::ostringstream out;
  write_log_header(out, {{"experiment", "abc"}, {"mode", "aat"}});
  LossReport r;
  r.iteration = 3;
  r.l_s = 0.5;
  r.total = 0.5;
  write_log_row(out, r);
  const std::string text = out.str();
  CHECK(text.find("# experiment=abc\n") == 0);
  CHECK(text.find("iteration,L_s,L_t,L_t_adv,L_dis,total,pseudo_labels,minority_pseudo_labels") != std::string::npos);
  CHECK(text.find("\n3,0.5,0,0,0,0.5,0,0,0,0,0\n") != std::string::npos);
}
