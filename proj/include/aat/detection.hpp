#pragma once

#include <vector>

#include "aat/box.hpp"

namespace aat {

// A labelled box. Ground truth uses score 1.
struct Detection {
  Box box;
  int class_id = 0;
  double score = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using Detections = std::vector<Detection>;

// Score descending; ties by (class_id, x1, y1, x2, y2).
bool detection_rank_less(const Detection& a, const Detection& b);

void sort_by_rank(Detections& dets);

// Greedy per-class suppression: a detection is dropped when a higher-ranked
// survivor of its class overlaps it with IoU > iou_threshold. Output follows
// detection_rank_less order.
Detections nms(Detections dets, double iou_threshold);

}  // namespace aat
