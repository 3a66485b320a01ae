#include "aat/detection.hpp"

#include <algorithm>
#include <tuple>

namespace aat {

bool detection_rank_less(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.class_id, a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
         std::tie(b.class_id, b.box.x1, b.box.y1, b.box.x2, b.box.y2);
}

void sort_by_rank(Detections& dets) {
  std::stable_sort(dets.begin(), dets.end(), detection_rank_less);
}

Detections nms(Detections dets, double iou_threshold) {
  sort_by_rank(dets);
  Detections kept;
  kept.reserve(dets.size());
  for (const Detection& d : dets) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.class_id == d.class_id && iou(k.box, d.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

}  // namespace aat
