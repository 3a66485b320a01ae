#include "aat/crop_bank.hpp"

#include <algorithm>

#include "aat/apr.hpp"
#include "aat/errors.hpp"

namespace aat {

CropBank::CropBank(int num_classes, int capacity) : capacity_(capacity) {
  if (num_classes < 1) throw ContractError("CropBank: need at least one class");
  if (capacity < 1) throw ContractError("CropBank: capacity must be positive");
  queues_.resize(static_cast<std::size_t>(num_classes));
}

int CropBank::total() const {
  int n = 0;
  for (const auto& q : queues_) n += static_cast<int>(q.size());
  return n;
}

void CropBank::push(CropEntry entry) {
  if (entry.class_id < 0 || entry.class_id >= num_classes()) throw ContractError("CropBank::push: class out of range");
  if (entry.patch.empty()) throw ContractError("CropBank::push: empty patch");
  auto& q = queues_[static_cast<std::size_t>(entry.class_id)];
  if (static_cast<int>(q.size()) == capacity_) q.pop_front();
  q.push_back(std::move(entry));
}

void CropBank::retain_only(const std::vector<int>& minority) {
  for (int c = 0; c < num_classes(); ++c) {
    if (std::find(minority.begin(), minority.end(), c) == minority.end()) queues_[static_cast<std::size_t>(c)].clear();
  }
}

int harvest_robust_minority_crops(const Image& image, const Detections& vanilla, const Detections& adversarial,
                                  const ConfusionMatrix& m, CropBank& bank, int image_id, long iteration) {
  if (m.num_classes() != bank.num_classes()) throw ContractError("harvest: class count mismatch");
  const std::vector<int> minority = minority_classes(m);
  bank.retain_only(minority);
  int pushed = 0;
  for (const Detection& v : vanilla) {
    if (!is_minority(v.class_id, m)) continue;
    const bool robust = std::any_of(adversarial.begin(), adversarial.end(), [&](const Detection& a) {
      return a.class_id == v.class_id && iou(a.box, v.box) > kAdversarialMatchIou;
    });
    const Box clipped = clip_box(v.box, image.width, image.height);
    if (!robust || clipped.width() < 1 || clipped.height() < 1) continue;
    bank.push(CropEntry{crop_image(image, clipped), v.class_id, image_id, iteration});
    ++pushed;
  }
  return pushed;
}

int harvest_minority_crops(const Image& image, const Detections& vanilla, const ConfusionMatrix& m, CropBank& bank,
                           int image_id, long iteration) {
  return harvest_robust_minority_crops(image, vanilla, vanilla, m, bank, image_id, iteration);
}

std::vector<CropSample> sample_crops_for_oversampling(const CropBank& bank, Rng& rng, int max_crops) {
  std::vector<CropSample> out;
  std::vector<int> classes;
  for (int c = 0; c < bank.num_classes(); ++c)
    if (bank.size(c) > 0) classes.push_back(c);
  if (classes.empty() || max_crops <= 0) return out;
  std::size_t next = static_cast<std::size_t>(rng.randint(0, static_cast<int>(classes.size()) - 1));
  for (int k = 0; k < max_crops; ++k) {
    const auto& q = bank.queue(classes[next]);
    const CropEntry& e = q[static_cast<std::size_t>(rng.randint(0, static_cast<int>(q.size()) - 1))];
    out.push_back(CropSample{e.patch, e.class_id});
    next = (next + 1) % classes.size();
  }
  return out;
}

}  // namespace aat
