#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "aat/augment.hpp"
#include "aat/checkpoint.hpp"
#include "aat/confusion.hpp"
#include "aat/crop_bank.hpp"
#include "aat/dataset.hpp"
#include "aat/detector.hpp"
#include "aat/sgd.hpp"

namespace aat {

enum class TrainMode { kSourceOnly, kMeanTeacher, kAat, kOracle };

std::string to_string(TrainMode mode);
std::optional<TrainMode> train_mode_from_string(const std::string& name);

struct TrainConfig {
  TrainMode mode = TrainMode::kAat;
  bool apr = true;  // only read in aat mode
  bool rmo = true;

  int batch_source = 8;
  int batch_target = 8;
  int burn_in_steps = 2000;
  int adapt_steps = 8000;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  double ema_alpha = 0.9996;
  double threshold = 0.8;  // pseudo-label confidence threshold
  double nms_iou = 0.5;
  double lambda_t = 1.0;
  double lambda_dis = 0.1;
  double lambda_grl = 0.1;
  int discriminator_hidden = 16;

  double beta = 4.0 / 255;
  double confusion_momentum = 0.99;
  int crop_capacity = 32;
  int max_crops = 2;

  bool augment_source = true;  // strong photometric view for source images too
  StrongAugmentConfig strong;
  PasteConfig paste;

  bool apr_enabled() const { return mode == TrainMode::kAat && apr; }
  bool rmo_enabled() const { return mode == TrainMode::kAat && rmo; }
  bool uses_pseudo_labels() const { return mode == TrainMode::kMeanTeacher || mode == TrainMode::kAat; }
};

void validate(const TrainConfig& config);

enum class Provenance { kVanilla, kAdversarialPass, kAdversarialFinal };

struct PseudoLabelSet {
  Detections labels;
  Provenance provenance = Provenance::kVanilla;
  int image_id = -1;
};

// theta_t <- alpha theta_t + (1 - alpha) theta_s, in place, nothing recorded.
template <typename T>
void ema_update(ParameterSet<T>& teacher, const ParameterSet<T>& student, double alpha);

// Teacher prediction, decoding at `threshold`, then NMS.
template <typename T>
std::vector<PseudoLabelSet> generate_vanilla_pseudo_labels(const GridDetector<T>& teacher,
                                                           const ParameterSet<T>& params,
                                                           const std::vector<const Image*>& images,
                                                           double threshold, double nms_iou);

// Classification-only detection loss against pseudo-labels.
template <typename T>
DetectionLoss<T> target_loss(const DetectorVars<T>& student, const std::vector<Detections>& pseudo_labels,
                             const GridGeometry& geometry, int num_classes);

// Per-cell domain classifier: 1x1 conv F->H, relu, 1x1 conv H->1.
template <typename T>
ParameterSet<T> init_discriminator(int features, int hidden, std::uint64_t seed);

// Mean BCE of the discriminator on gradient-reversed features; source cells
// are labelled 1, target cells 0.
template <typename T>
Var<T> discriminator_loss(const std::vector<Var<T>>& discriminator, Var<T> source_features,
                          Var<T> target_features, T lambda_grl);

struct LossReport {
  long iteration = 0;
  double l_s = 0;
  double l_t = 0;
  double l_t_adv = 0;
  double l_dis = 0;
  double total = 0;
  int pseudo_labels = 0;
  int minority_pseudo_labels = 0;
  int adversarial_labels = 0;
  int pasted = 0;
  int bank_fill = 0;

  double recomposed(double lambda_t, double lambda_dis) const {
    return l_s + lambda_t * (l_t + l_t_adv) + lambda_dis * l_dis;
  }
};

struct TrainState {
  ParameterSet<float> student;
  ParameterSet<float> teacher;
  ParameterSet<float> discriminator;
  Sgd<float> student_opt{SgdOptions{}};
  Sgd<float> discriminator_opt{SgdOptions{}};
  long iteration = 0;  // completed adaptation steps
  long burn_in_done = 0;
  ConfusionMatrix confusion;
  CropBank bank;
};

struct TrainData {
  const Split* source = nullptr;        // labelled
  const Split* target = nullptr;        // unlabelled for training; labels read only in oracle mode
  std::vector<int> minority_classes;    // reporting only
};

// Owns the model definition and drives burn-in and adaptation. Every random
// draw comes from a stream keyed by (seed, purpose, step, image), so runs with
// different modes see the same batches and augmentations.
class Trainer {
 public:
  Trainer(DetectorConfig model, TrainConfig config, std::uint64_t seed);

  const GridDetector<float>& detector() const { return detector_; }
  const TrainConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  // Fresh student, teacher = copy of student, zeroed optimizers.
  TrainState initial_state() const;

  // Supervised source training of the student for `steps`; the teacher is a
  // copy of the student afterwards.
  void burn_in(TrainState& state, const Split& source, int steps) const;

  // One adaptation step in the configured mode.
  LossReport train_step(TrainState& state, const TrainData& data) const;

  using StepCallback = std::function<void(const TrainState&, const LossReport&)>;
  void adapt(TrainState& state, const TrainData& data, int steps, const StepCallback& on_step = {}) const;

  // Detections of a model on a split (no augmentation).
  std::vector<Detections> predict(const ParameterSet<float>& params, const Split& split,
                                  double score_threshold = 0.05) const;

 private:
  std::vector<int> draw_batch(const Split& split, int size, const char* purpose, long step) const;

  GridDetector<float> detector_;
  TrainConfig config_;
  std::uint64_t seed_;
};

Checkpoint to_checkpoint(const TrainState& state, const std::string& metadata);
// Restores into a state created by Trainer::initial_state (layouts must match).
void restore(TrainState& state, const Checkpoint& ckpt);

// CSV of LossReports; the header carries `# key=value` comment lines. Runs
// without target training leave the target columns empty.
void write_log_header(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& meta);
void write_log_row(std::ostream& out, const LossReport& report, bool target_columns = true);

}  // namespace aat
