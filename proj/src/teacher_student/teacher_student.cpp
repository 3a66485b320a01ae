#include "aat/teacher_student.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "aat/apr.hpp"
#include "aat/attack.hpp"
#include "aat/errors.hpp"
#include "aat/log.hpp"
#include "aat/ops.hpp"

namespace aat {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSourceOnly: return "source-only";
    case TrainMode::kMeanTeacher: return "mt-baseline";
    case TrainMode::kAat: return "aat";
    case TrainMode::kOracle: return "oracle";
  }
  return "unknown";
}

std::optional<TrainMode> train_mode_from_string(const std::string& name) {
  for (TrainMode m : {TrainMode::kSourceOnly, TrainMode::kMeanTeacher, TrainMode::kAat, TrainMode::kOracle}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void validate(const TrainConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  require(c.batch_source >= 1 && c.batch_target >= 1, "batch sizes must be >= 1");
  require(c.burn_in_steps >= 0 && c.adapt_steps >= 0, "step counts must be >= 0");
  require(c.learning_rate > 0, "learning rate must be > 0");
  require(c.momentum >= 0 && c.momentum < 1, "momentum must be in [0,1)");
  require(c.weight_decay >= 0, "weight decay must be >= 0");
  require(c.ema_alpha > 0 && c.ema_alpha < 1, "ema alpha must be in (0,1)");
  require(c.threshold > 0 && c.threshold <= 1, "threshold must be in (0,1]");
  require(c.nms_iou > 0 && c.nms_iou <= 1, "nms iou must be in (0,1]");
  require(c.lambda_t >= 0 && c.lambda_dis >= 0 && c.lambda_grl >= 0, "loss weights must be >= 0");
  require(c.discriminator_hidden >= 1, "discriminator width must be >= 1");
  require(c.beta >= 0 && c.beta <= 1, "beta must be in [0,1]");
  require(c.confusion_momentum >= 0 && c.confusion_momentum < 1, "confusion momentum must be in [0,1)");
  require(c.crop_capacity >= 1, "crop capacity must be >= 1");
  require(c.max_crops >= 0, "max crops must be >= 0");
}

template <typename T>
void ema_update(ParameterSet<T>& teacher, const ParameterSet<T>& student, double alpha) {
  if (!teacher.same_layout(student)) throw ShapeError("ema_update: teacher and student layouts differ");
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    auto t = teacher[i].value.data();
    const auto s = student[i].value.data();
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = static_cast<T>(alpha * static_cast<double>(t[k]) + (1 - alpha) * static_cast<double>(s[k]));
    }
  }
}

template <typename T>
std::vector<PseudoLabelSet> generate_vanilla_pseudo_labels(const GridDetector<T>& teacher,
                                                           const ParameterSet<T>& params,
                                                           const std::vector<const Image*>& images,
                                                           double threshold, double nms_iou) {
  std::vector<PseudoLabelSet> out(images.size());
  if (images.empty()) return out;
  const RawOutputs<T> raw = teacher.predict(params, images_to_tensor<T>(images));
  const GridGeometry geometry = teacher.geometry();
  for (std::size_t n = 0; n < images.size(); ++n) {
    out[n].labels = nms(decode(raw, n, threshold, geometry), nms_iou);
    out[n].image_id = static_cast<int>(n);
  }
  return out;
}

template <typename T>
DetectionLoss<T> target_loss(const DetectorVars<T>& student, const std::vector<Detections>& pseudo_labels,
                             const GridGeometry& geometry, int num_classes) {
  std::vector<GridAssignment> assignments;
  assignments.reserve(pseudo_labels.size());
  for (const Detections& labels : pseudo_labels) assignments.push_back(assign_targets(labels, geometry, num_classes));
  return detection_loss(student, assignments, false);
}

template <typename T>
ParameterSet<T> init_discriminator(int features, int hidden, std::uint64_t seed) {
  Rng rng(seed, "discriminator-init");
  ParameterSet<T> params;
  auto conv = [&](const std::string& name, int out, int in) {
    Tensor<T> w(Shape{static_cast<std::size_t>(out), static_cast<std::size_t>(in), 1, 1});
    const double stddev = std::sqrt(2.0 / in);
    for (T& v : w.data()) v = static_cast<T>(rng.normal(0.0, stddev));
    params.add(name + ".weight", std::move(w));
    params.add(name + ".bias", Tensor<T>(Shape{static_cast<std::size_t>(out)}));
  };
  conv("dis0", hidden, features);
  conv("dis1", 1, hidden);
  return params;
}

template <typename T>
Var<T> discriminator_loss(const std::vector<Var<T>>& d, Var<T> source_features, Var<T> target_features,
                          T lambda_grl) {
  if (d.size() != 4) throw ContractError("discriminator_loss: expected 4 discriminator tensors");
  Var<T> f = ops::gradient_reversal(ops::concat(std::vector<Var<T>>{source_features, target_features}), lambda_grl);
  Var<T> logits = ops::conv2d(ops::relu(ops::conv2d(f, d[0], d[1], 1, 0)), d[2], d[3], 1, 0);
  const std::size_t per_image = logits.value().numel() / logits.shape()[0];
  std::vector<T> targets(logits.value().numel(), T(0));
  std::fill(targets.begin(), targets.begin() + static_cast<long>(source_features.shape()[0] * per_image), T(1));
  return ops::binary_cross_entropy_with_logits(logits, targets);
}

namespace {

// Runs `fn`, renaming numeric failures after the loss term being computed.
template <typename Fn>
auto named_term(const char* term, long iteration, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(std::string(term) + " diverged at iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

void check_finite(const char* term, double v, long iteration) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(term) + " is not finite at iteration " + std::to_string(iteration));
  }
}

std::vector<const Image*> pointers(const std::vector<Image>& images) {
  std::vector<const Image*> out;
  for (const Image& img : images) out.push_back(&img);
  return out;
}

int count_classes(const Detections& labels, const std::vector<int>& classes) {
  return static_cast<int>(std::count_if(labels.begin(), labels.end(), [&](const Detection& d) {
    return std::find(classes.begin(), classes.end(), d.class_id) != classes.end();
  }));
}

}  // namespace

Trainer::Trainer(DetectorConfig model, TrainConfig config, std::uint64_t seed)
    : detector_(std::move(model)), config_(std::move(config)), seed_(seed) {
  validate(config_);
}

TrainState Trainer::initial_state() const {
  TrainState s;
  s.student = detector_.init_parameters(derive_seed(seed_, "student"));
  s.teacher = s.student;
  s.discriminator = init_discriminator<float>(detector_.config().channels.back(), config_.discriminator_hidden,
                                              derive_seed(seed_, "discriminator"));
  const SgdOptions opt{config_.learning_rate, config_.momentum, config_.weight_decay};
  s.student_opt = Sgd<float>(opt);
  s.discriminator_opt = Sgd<float>(opt);
  s.confusion = ConfusionMatrix(detector_.config().num_classes, config_.confusion_momentum);
  s.bank = CropBank(detector_.config().num_classes, config_.crop_capacity);
  return s;
}

std::vector<int> Trainer::draw_batch(const Split& split, int size, const char* purpose, long step) const {
  if (split.items.empty()) throw ContractError(std::string("training split '") + split.name + "' is empty");
  Rng rng(seed_, purpose, static_cast<std::uint64_t>(step));
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int& i : idx) i = rng.randint(0, static_cast<int>(split.items.size()) - 1);
  return idx;
}

void Trainer::burn_in(TrainState& state, const Split& source, int steps) const {
  const GridGeometry geometry = detector_.geometry();
  const int classes = detector_.config().num_classes;
  for (int step = 0; step < steps; ++step) {
    const long it = state.burn_in_done;
    std::vector<Image> images;
    std::vector<GridAssignment> assignments;
    int k = 0;
    for (int idx : draw_batch(source, config_.batch_source, "burn-in-batch", it)) {
      const LabeledImage& item = source.items[static_cast<std::size_t>(idx)];
      Rng rng(seed_, "burn-in-augment", static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(k++));
      Augmented view = weak_augment(item.image, item.labels, rng);
      if (config_.augment_source) view = strong_augment(view.image, view.labels, rng, config_.strong);
      assignments.push_back(assign_targets(view.labels, geometry, classes));
      images.push_back(std::move(view.image));
    }
    Tape<float> tape;
    const auto bound = state.student.bind(tape, true);
    const DetectorVars<float> vars =
        named_term("L_s", it, [&] { return detector_.forward(bound, tape.leaf(images_to_tensor<float>(pointers(images)))); });
    const DetectionLoss<float> loss = named_term("L_s", it, [&] { return detection_loss(vars, assignments, true); });
    check_finite("L_s", loss.terms.total(), it);
    tape.backward(loss.total);
    state.student_opt.step(state.student, ParameterSet<float>::gradients(tape, bound));
    ++state.burn_in_done;
  }
  state.teacher = state.student;
}

LossReport Trainer::train_step(TrainState& state, const TrainData& data) const {
  if (!data.source) throw ContractError("train_step: source split required");
  const TrainMode mode = config_.mode;
  const bool needs_target = mode != TrainMode::kSourceOnly;
  if (needs_target && !data.target) throw ContractError("train_step: target split required in mode " + to_string(mode));
  const long it = state.iteration;
  const GridGeometry geometry = detector_.geometry();
  const int classes = detector_.config().num_classes;
  LossReport report;
  report.iteration = it;

  // Source views.
  std::vector<Image> src_images;
  std::vector<GridAssignment> src_assign;
  {
    int k = 0;
    for (int idx : draw_batch(*data.source, config_.batch_source, "source-batch", it)) {
      const LabeledImage& item = data.source->items[static_cast<std::size_t>(idx)];
      Rng rng(seed_, "source-augment", static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(k++));
      Augmented view = weak_augment(item.image, item.labels, rng);
      if (config_.augment_source) view = strong_augment(view.image, view.labels, rng, config_.strong);
      src_assign.push_back(assign_targets(view.labels, geometry, classes));
      src_images.push_back(std::move(view.image));
    }
  }

  // Target views and their labels.
  std::vector<Image> tgt_images;
  std::vector<Detections> tgt_labels, tgt_adv_labels;
  if (needs_target) {
    const std::vector<int> idx = draw_batch(*data.target, config_.batch_target, "target-batch", it);
    std::vector<Augmented> weak;
    std::vector<Rng> rngs;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const LabeledImage& item = data.target->items[static_cast<std::size_t>(idx[k])];
      rngs.emplace_back(seed_, "target-augment", static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(k));
      // Target labels are only ever read by the oracle.
      weak.push_back(weak_augment(item.image, mode == TrainMode::kOracle ? item.labels : Detections{}, rngs.back()));
    }
    std::vector<Image> weak_images;
    for (const Augmented& w : weak) weak_images.push_back(w.image);
    const auto weak_ptrs = pointers(weak_images);

    std::vector<Detections> vanilla(idx.size()), adversarial(idx.size());
    if (mode == TrainMode::kOracle) {
      for (std::size_t k = 0; k < idx.size(); ++k) vanilla[k] = weak[k].labels;
    } else {
      const auto sets = generate_vanilla_pseudo_labels(detector_, state.teacher, weak_ptrs, config_.threshold,
                                                       config_.nms_iou);
      for (std::size_t k = 0; k < idx.size(); ++k) vanilla[k] = sets[k].labels;
    }
    if (config_.apr_enabled()) {
      const auto attacked = fgsm_attack(detector_, state.teacher, weak_ptrs, vanilla, config_.beta);
      std::vector<Image> adv_images;
      for (const AdversarialExample& a : attacked) adv_images.push_back(a.image);
      const auto pass = generate_vanilla_pseudo_labels(detector_, state.teacher, pointers(adv_images),
                                                       config_.threshold, config_.nms_iou);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        adversarial[k] = generate_adversarial_pseudo_labels(vanilla[k], pass[k].labels, state.confusion);
      }
    }
    if (config_.rmo_enabled()) {
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (config_.apr_enabled()) {
          harvest_robust_minority_crops(weak_images[k], vanilla[k], adversarial[k], state.confusion, state.bank,
                                        idx[k], it);
        } else {
          harvest_minority_crops(weak_images[k], vanilla[k], state.confusion, state.bank, idx[k], it);
        }
      }
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      report.pseudo_labels += static_cast<int>(vanilla[k].size());
      report.minority_pseudo_labels += count_classes(vanilla[k], data.minority_classes);
      Augmented strong = strong_augment(weak_images[k], vanilla[k], rngs[k], config_.strong);
      Detections adv = apply_cutout_label_rule(adversarial[k], strong.record, config_.strong.erase_threshold);
      if (config_.rmo_enabled()) {
        const auto crops = sample_crops_for_oversampling(state.bank, rngs[k], config_.max_crops);
        const std::size_t before = strong.labels.size();
        report.pasted += paste_crops(strong.image, strong.labels, crops, strong.record, rngs[k], config_.paste).pasted;
        if (config_.apr_enabled()) adv.insert(adv.end(), strong.labels.begin() + static_cast<long>(before), strong.labels.end());
      }
      report.adversarial_labels += static_cast<int>(adv.size());
      tgt_images.push_back(std::move(strong.image));
      tgt_labels.push_back(std::move(strong.labels));
      tgt_adv_labels.push_back(std::move(adv));
    }
  }

  // Student forward and losses.
  Tape<float> tape;
  const auto student = state.student.bind(tape, true);
  const auto disc = state.discriminator.bind(tape, true);
  const DetectorVars<float> src_vars = named_term(
      "L_s", it, [&] { return detector_.forward(student, tape.leaf(images_to_tensor<float>(pointers(src_images)))); });
  const DetectionLoss<float> l_s = named_term("L_s", it, [&] { return detection_loss(src_vars, src_assign, true); });
  check_finite("L_s", l_s.terms.total(), it);
  Var<float> total = l_s.total;
  report.l_s = l_s.terms.total();
  const float lambda_t = static_cast<float>(config_.lambda_t);

  if (needs_target) {
    const DetectorVars<float> tgt_vars = named_term(
        "L_t", it, [&] { return detector_.forward(student, tape.leaf(images_to_tensor<float>(pointers(tgt_images)))); });
    if (mode == TrainMode::kOracle) {
      std::vector<GridAssignment> assign;
      for (const Detections& l : tgt_labels) assign.push_back(assign_targets(l, geometry, classes));
      const DetectionLoss<float> l_t = named_term("L_t", it, [&] { return detection_loss(tgt_vars, assign, true); });
      check_finite("L_t", l_t.terms.total(), it);
      report.l_t = l_t.terms.total();
      total = ops::add(total, ops::scale(l_t.total, lambda_t));
    } else {
      const DetectionLoss<float> l_t =
          named_term("L_t", it, [&] { return target_loss(tgt_vars, tgt_labels, geometry, classes); });
      check_finite("L_t", l_t.terms.total(), it);
      report.l_t = l_t.terms.total();
      Var<float> target_terms = l_t.total;
      if (config_.apr_enabled()) {
        const DetectionLoss<float> l_adv =
            named_term("L_t_adv", it, [&] { return target_loss(tgt_vars, tgt_adv_labels, geometry, classes); });
        check_finite("L_t_adv", l_adv.terms.total(), it);
        report.l_t_adv = l_adv.terms.total();
        target_terms = ops::add(target_terms, l_adv.total);
      }
      total = ops::add(total, ops::scale(target_terms, lambda_t));
      const Var<float> l_dis = named_term("L_dis", it, [&] {
        return discriminator_loss(disc, src_vars.features, tgt_vars.features, static_cast<float>(config_.lambda_grl));
      });
      report.l_dis = static_cast<double>(l_dis.value().item());
      check_finite("L_dis", report.l_dis, it);
      total = ops::add(total, ops::scale(l_dis, static_cast<float>(config_.lambda_dis)));
    }
  }
  report.total = static_cast<double>(total.value().item());
  check_finite("total loss", report.total, it);

  if (config_.apr_enabled() || config_.rmo_enabled()) {
    RawOutputs<float> raw{src_vars.logits.value(), {}, {}};
    update_confusion_matrix(state.confusion, raw, src_assign);
  }

  tape.backward(total);
  state.student_opt.step(state.student, ParameterSet<float>::gradients(tape, student));
  if (needs_target && mode != TrainMode::kOracle) {
    state.discriminator_opt.step(state.discriminator, ParameterSet<float>::gradients(tape, disc));
  }
  ema_update(state.teacher, state.student, config_.ema_alpha);
  report.bank_fill = state.bank.total();
  ++state.iteration;
  return report;
}

void Trainer::adapt(TrainState& state, const TrainData& data, int steps, const StepCallback& on_step) const {
  for (int s = 0; s < steps; ++s) {
    const LossReport r = train_step(state, data);
    if (on_step) on_step(state, r);
  }
}

std::vector<Detections> Trainer::predict(const ParameterSet<float>& params, const Split& split,
                                         double score_threshold) const {
  std::vector<Detections> out;
  out.reserve(split.items.size());
  const GridGeometry geometry = detector_.geometry();
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < split.items.size(); start += kChunk) {
    std::vector<const Image*> chunk;
    for (std::size_t i = start; i < std::min(split.items.size(), start + kChunk); ++i) chunk.push_back(&split.items[i].image);
    const RawOutputs<float> raw = detector_.predict(params, images_to_tensor<float>(chunk));
    for (std::size_t n = 0; n < chunk.size(); ++n) {
      out.push_back(nms(decode(raw, n, score_threshold, geometry), config_.nms_iou));
    }
  }
  return out;
}

namespace {

void add_set(Checkpoint& ckpt, const std::string& prefix, const ParameterSet<float>& params) {
  for (const auto& p : params) ckpt.entries.emplace_back(prefix + p.name, p.value);
}

void add_velocity(Checkpoint& ckpt, const std::string& prefix, const ParameterSet<float>& params,
                  const Sgd<float>& opt) {
  const auto& v = opt.velocity();
  for (std::size_t i = 0; i < v.size(); ++i) ckpt.entries.emplace_back(prefix + params[i].name, v[i]);
}

void read_set(const Checkpoint& ckpt, const std::string& prefix, ParameterSet<float>& params) {
  for (auto& p : params) {
    const Tensor<float>& t = ckpt.at(prefix + p.name);
    if (t.shape() != p.value.shape()) {
      throw FormatError("checkpoint entry '" + prefix + p.name + "' has shape " + shape_to_string(t.shape()) +
                        ", expected " + shape_to_string(p.value.shape()));
    }
    p.value = t;
  }
}

void read_velocity(const Checkpoint& ckpt, const std::string& prefix, const ParameterSet<float>& params,
                   Sgd<float>& opt) {
  if (!ckpt.find(prefix + params[0].name)) return;
  std::vector<Tensor<float>> v;
  for (const auto& p : params) {
    const Tensor<float>& t = ckpt.at(prefix + p.name);
    if (t.shape() != p.value.shape()) throw FormatError("checkpoint entry '" + prefix + p.name + "' has the wrong shape");
    v.push_back(t);
  }
  opt.set_velocity(std::move(v));
}

}  // namespace

Checkpoint to_checkpoint(const TrainState& state, const std::string& metadata) {
  Checkpoint ckpt;
  nlohmann::json meta = nlohmann::json::object();
  if (!metadata.empty()) {
    try {
      meta = nlohmann::json::parse(metadata);
    } catch (const nlohmann::json::exception&) {
      meta = {{"note", metadata}};
    }
  }
  meta["iteration"] = state.iteration;
  meta["burn_in_done"] = state.burn_in_done;
  nlohmann::json bank = nlohmann::json::array();
  add_set(ckpt, "student/", state.student);
  add_set(ckpt, "teacher/", state.teacher);
  add_set(ckpt, "discriminator/", state.discriminator);
  add_velocity(ckpt, "momentum/student/", state.student, state.student_opt);
  add_velocity(ckpt, "momentum/discriminator/", state.discriminator, state.discriminator_opt);
  const int n = state.confusion.num_classes();
  Tensor<float> cm(Shape{static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cm[static_cast<std::size_t>(i * n + j)] = static_cast<float>(state.confusion.at(i, j));
  ckpt.entries.emplace_back("confusion", std::move(cm));
  for (int c = 0; c < state.bank.num_classes(); ++c) {
    int k = 0;
    for (const CropEntry& e : state.bank.queue(c)) {
      const std::string name = "cropbank/" + std::to_string(c) + "/" + std::to_string(k++);
      ckpt.entries.emplace_back(name, Tensor<float>(Shape{static_cast<std::size_t>(e.patch.height),
                                                          static_cast<std::size_t>(e.patch.width), 3},
                                                    e.patch.pixels));
      bank.push_back({{"entry", name}, {"class", c}, {"image_id", e.image_id}, {"iteration", e.iteration}});
    }
  }
  meta["crop_bank"] = bank;
  ckpt.metadata = meta.dump();
  return ckpt;
}

void restore(TrainState& state, const Checkpoint& ckpt) {
  read_set(ckpt, "student/", state.student);
  read_set(ckpt, "teacher/", state.teacher);
  read_set(ckpt, "discriminator/", state.discriminator);
  read_velocity(ckpt, "momentum/student/", state.student, state.student_opt);
  read_velocity(ckpt, "momentum/discriminator/", state.discriminator, state.discriminator_opt);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.metadata);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  state.iteration = meta.value("iteration", 0L);
  state.burn_in_done = meta.value("burn_in_done", 0L);
  if (const Tensor<float>* cm = ckpt.find("confusion")) {
    const int n = state.confusion.num_classes();
    if (cm->shape() != Shape{static_cast<std::size_t>(n), static_cast<std::size_t>(n)}) {
      throw FormatError("checkpoint entry 'confusion' has shape " + shape_to_string(cm->shape()));
    }
    ConfusionMatrix restored(n, state.confusion.momentum());
    for (int i = 0; i < n; ++i) {
      std::vector<double> row(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = (*cm)[static_cast<std::size_t>(i * n + j)];
      restored.set_row(i, row);
    }
    state.confusion = restored;
  }
  state.bank = CropBank(state.bank.num_classes(), state.bank.capacity());
  if (meta.contains("crop_bank")) {
    for (const auto& e : meta["crop_bank"]) {
      const Tensor<float>& t = ckpt.at(e.at("entry").get<std::string>());
      if (t.rank() != 3 || t.dim(2) != 3) throw FormatError("crop bank entry has a bad shape");
      Image patch(static_cast<int>(t.dim(0)), static_cast<int>(t.dim(1)));
      patch.pixels = t.to_vector();
      state.bank.push(CropEntry{std::move(patch), e.at("class").get<int>(), e.at("image_id").get<int>(),
                                e.at("iteration").get<long>()});
    }
  }
}

void write_log_header(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
  out << "iteration,L_s,L_t,L_t_adv,L_dis,total,pseudo_labels,minority_pseudo_labels,adversarial_labels,pasted,"
         "bank_fill\n";
}

void write_log_row(std::ostream& out, const LossReport& r, bool target_columns) {
  out << r.iteration << ',' << std::setprecision(9) << r.l_s << ',';
  if (target_columns) {
    out << r.l_t << ',' << r.l_t_adv << ',' << r.l_dis << ',' << r.total << ',' << r.pseudo_labels << ','
        << r.minority_pseudo_labels << ',' << r.adversarial_labels << ',' << r.pasted << ',' << r.bank_fill << '\n';
  } else {
    out << ",,," << r.total << ",,,,,\n";
  }
}

template void ema_update<float>(ParameterSet<float>&, const ParameterSet<float>&, double);
template void ema_update<double>(ParameterSet<double>&, const ParameterSet<double>&, double);
template std::vector<PseudoLabelSet> generate_vanilla_pseudo_labels<float>(const GridDetector<float>&,
                                                                           const ParameterSet<float>&,
                                                                           const std::vector<const Image*>&, double,
                                                                           double);
template std::vector<PseudoLabelSet> generate_vanilla_pseudo_labels<double>(const GridDetector<double>&,
                                                                            const ParameterSet<double>&,
                                                                            const std::vector<const Image*>&,
                                                                            double, double);
template DetectionLoss<float> target_loss<float>(const DetectorVars<float>&, const std::vector<Detections>&,
                                                 const GridGeometry&, int);
template DetectionLoss<double> target_loss<double>(const DetectorVars<double>&, const std::vector<Detections>&,
                                                   const GridGeometry&, int);
template ParameterSet<float> init_discriminator<float>(int, int, std::uint64_t);
template ParameterSet<double> init_discriminator<double>(int, int, std::uint64_t);
template Var<float> discriminator_loss<float>(const std::vector<Var<float>>&, Var<float>, Var<float>, float);
template Var<double> discriminator_loss<double>(const std::vector<Var<double>>&, Var<double>, Var<double>, double);

}  // namespace aat
