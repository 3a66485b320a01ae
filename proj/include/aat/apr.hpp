#pragma once

#include <string>
#include <vector>

#include "aat/confusion.hpp"
#include "aat/detection.hpp"

namespace aat {

enum class Disposition { kRetained, kCorrected, kSuppressed, kRecovered };

std::string to_string(Disposition d);

// Index of the vanilla box with the highest IoU to `box`; ties go to the
// higher vanilla score, then the lexicographically smaller box. -1 if empty.
int best_match(const Box& box, const Detections& vanilla);

// Adversarial pseudo-labels from the vanilla set and the detections on the
// attacked image. An adversarial detection matched (IoU > 0.5) to a vanilla
// box is kept when its class is not more dominant than the vanilla class; an
// unmatched one is kept when its class is a minority class. Vanilla labels
// without a kept counterpart drop out.
Detections generate_adversarial_pseudo_labels(const Detections& vanilla, const Detections& adversarial,
                                              const ConfusionMatrix& m);

struct LabelDisposition {
  Detection label;
  Disposition disposition = Disposition::kRetained;
  int vanilla_index = -1;  // matched vanilla label, -1 for recovered or unmatched suppressed
  bool from_vanilla = false;
};

// Explains one generation label by label: kept adversarial labels are
// retained (same class as their match), corrected (different class) or
// recovered (no match); vanilla labels with no kept counterpart are suppressed.
std::vector<LabelDisposition> explain_adversarial_pseudo_labels(const Detections& vanilla,
                                                                const Detections& adversarial,
                                                                const ConfusionMatrix& m);

constexpr double kAdversarialMatchIou = 0.5;

}  // namespace aat
