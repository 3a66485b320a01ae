#pragma once

#include <deque>
#include <vector>

#include "aat/augment.hpp"
#include "aat/confusion.hpp"
#include "aat/rng.hpp"

namespace aat {

struct CropEntry {
  Image patch;
  int class_id = 0;
  int image_id = -1;
  long iteration = 0;
};

// Per-class FIFO queues of robust minority crops.
class CropBank {
 public:
  explicit CropBank(int num_classes = 1, int capacity = 32);

  int num_classes() const { return static_cast<int>(queues_.size()); }
  int capacity() const { return capacity_; }
  const std::deque<CropEntry>& queue(int c) const { return queues_.at(static_cast<std::size_t>(c)); }
  int size(int c) const { return static_cast<int>(queue(c).size()); }
  int total() const;

  // Appends, evicting the oldest entry at capacity.
  void push(CropEntry entry);
  // Empties the queues of classes not in `minority`.
  void retain_only(const std::vector<int>& minority);

 private:
  int capacity_;
  std::vector<std::deque<CropEntry>> queues_;
};

// Pushes the patch of every vanilla label that also appears in the adversarial
// set with the same class and IoU > 0.5, when its class is a minority class.
// Queues of classes that stopped being minority are emptied first. Returns the
// number of crops pushed.
int harvest_robust_minority_crops(const Image& image, const Detections& vanilla, const Detections& adversarial,
                                  const ConfusionMatrix& m, CropBank& bank, int image_id = -1,
                                  long iteration = 0);

// Pushes every minority-class vanilla label without a robustness check (the
// RMO-without-APR ablation).
int harvest_minority_crops(const Image& image, const Detections& vanilla, const ConfusionMatrix& m, CropBank& bank,
                           int image_id = -1, long iteration = 0);

// Up to max_crops samples: round-robin over non-empty queues starting at a
// random class, uniform within each queue.
std::vector<CropSample> sample_crops_for_oversampling(const CropBank& bank, Rng& rng, int max_crops);

}  // namespace aat
