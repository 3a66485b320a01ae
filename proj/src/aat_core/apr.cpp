#include "aat/apr.hpp"

#include "aat/errors.hpp"

namespace aat {

std::string to_string(Disposition d) {
  switch (d) {
    case Disposition::kRetained: return "retained";
    case Disposition::kCorrected: return "corrected";
    case Disposition::kSuppressed: return "suppressed";
    case Disposition::kRecovered: return "recovered";
  }
  return "unknown";
}

int best_match(const Box& box, const Detections& vanilla) {
  int best = -1;
  double best_iou = 0;
  for (std::size_t j = 0; j < vanilla.size(); ++j) {
    const double o = iou(box, vanilla[j].box);
    bool better = best < 0 || o > best_iou;
    if (!better && o == best_iou) {
      const Detection& cur = vanilla[static_cast<std::size_t>(best)];
      better = vanilla[j].score > cur.score || (vanilla[j].score == cur.score && box_less(vanilla[j].box, cur.box));
    }
    if (better) {
      best = static_cast<int>(j);
      best_iou = o;
    }
  }
  return best;
}

namespace {

void check_classes(const Detections& labels, const ConfusionMatrix& m) {
  for (const Detection& d : labels) {
    if (d.class_id < 0 || d.class_id >= m.num_classes()) {
      throw ContractError("adversarial pseudo-labels: class " + std::to_string(d.class_id) + " out of range");
    }
  }
}

// Returns the matched vanilla index (or -1) and whether the label is kept.
std::pair<int, bool> judge(const Detection& adv, const Detections& vanilla, const ConfusionMatrix& m) {
  const int j = best_match(adv.box, vanilla);
  if (j >= 0 && iou(adv.box, vanilla[static_cast<std::size_t>(j)].box) > kAdversarialMatchIou) {
    return {j, less_dominant(adv.class_id, vanilla[static_cast<std::size_t>(j)].class_id, m)};
  }
  return {-1, is_minority(adv.class_id, m)};
}

}  // namespace

Detections generate_adversarial_pseudo_labels(const Detections& vanilla, const Detections& adversarial,
                                              const ConfusionMatrix& m) {
  check_classes(vanilla, m);
  check_classes(adversarial, m);
  Detections out;
  for (const Detection& adv : adversarial) {
    if (judge(adv, vanilla, m).second) out.push_back(adv);
  }
  return out;
}

std::vector<LabelDisposition> explain_adversarial_pseudo_labels(const Detections& vanilla,
                                                                const Detections& adversarial,
                                                                const ConfusionMatrix& m) {
  check_classes(vanilla, m);
  check_classes(adversarial, m);
  std::vector<LabelDisposition> out;
  std::vector<bool> survived(vanilla.size(), false);
  for (const Detection& adv : adversarial) {
    const auto [j, kept] = judge(adv, vanilla, m);
    if (!kept) continue;
    LabelDisposition d{adv, Disposition::kRecovered, j, false};
    if (j >= 0) {
      survived[static_cast<std::size_t>(j)] = true;
      d.disposition = adv.class_id == vanilla[static_cast<std::size_t>(j)].class_id ? Disposition::kRetained
                                                                                     : Disposition::kCorrected;
    }
    out.push_back(d);
  }
  for (std::size_t j = 0; j < vanilla.size(); ++j) {
    if (!survived[j]) out.push_back({vanilla[j], Disposition::kSuppressed, static_cast<int>(j), true});
  }
  return out;
}

}  // namespace aat
