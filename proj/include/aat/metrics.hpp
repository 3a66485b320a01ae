#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "aat/detection.hpp"

namespace aat {

struct MatchResult {
  std::vector<bool> true_positive;  // one flag per detection, input order
  std::vector<int> matched_gt;      // ground-truth index or -1
  int false_negatives = 0;
};

// Greedy one-to-one matching within each class. Detections are visited in the
// given order (callers sort by rank first); each takes the unmatched ground
// truth of its class with the highest IoU >= threshold, lowest index on ties.
MatchResult match_detections(const Detections& detections, const Detections& ground_truth,
                             double iou_threshold = 0.5);

struct ScoredFlag {
  double score = 0;
  bool true_positive = false;
};

// All-point interpolated AP. Flags are ranked by descending score; equal
// scores keep their input order. Returns nullopt when there is neither ground
// truth nor a detection, 0 when there are detections but no ground truth.
std::optional<double> average_precision(std::vector<ScoredFlag> flags, int num_ground_truth);

struct ClassEval {
  std::optional<double> ap;
  int num_gt = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct EvalReport {
  std::vector<ClassEval> classes;
  double map = 0;  // mean AP over classes with ground truth
  std::optional<double> minority_ap;
  std::vector<int> minority_classes;
};

// Pools detections of all images per class and ranks them by score, then by
// image index, then by position within the image.
EvalReport evaluate(const std::vector<Detections>& predictions, const std::vector<Detections>& ground_truth,
                    int num_classes, const std::vector<int>& minority_classes = {}, double iou_threshold = 0.5);

struct ClassQuality {
  std::optional<double> precision;  // undefined without pseudo-labels
  std::optional<double> recall;     // undefined without ground truth
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct PseudoLabelQuality {
  std::vector<ClassQuality> classes;
  ClassQuality overall;
};

PseudoLabelQuality pseudo_label_quality(const std::vector<Detections>& pseudo_labels,
                                        const std::vector<Detections>& ground_truth, int num_classes,
                                        double iou_threshold = 0.5);

nlohmann::json to_json(const EvalReport& report, const std::vector<std::string>& class_names = {});
nlohmann::json to_json(const PseudoLabelQuality& quality);
nlohmann::json to_json(const Detection& detection);
nlohmann::json to_json(const Detections& detections);
Detection detection_from_json(const nlohmann::json& j);

// Fixed-width per-class table for terminals.
std::string format_table(const EvalReport& report, const std::vector<std::string>& class_names = {});

}  // namespace aat
