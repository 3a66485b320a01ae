#pragma once

#include <cstdint>
#include <vector>

#include "aat/detector.hpp"

namespace aat {

struct AdversarialExample {
  Image image;                        // x_adv, clipped to [0,1]
  std::vector<float> step;            // beta * sgn(grad) before clipping, HWC like Image::pixels
  double beta = 0;
  std::vector<std::uint8_t> attacked_cells;  // grid cells whose loss was attacked
  bool skipped = false;               // non-finite gradient, image passed through

  // x_adv - x, HWC.
  std::vector<float> perturbation(const Image& original) const;
};

// Single-step FGSM on the classification branch: the loss is the summed
// cross-entropy of the cells assigned to the vanilla pseudo-labels, and the
// gradient is taken with respect to the input only. Images are attacked as one
// batch; since the loss is a sum over images, each image sees exactly its own
// gradient. Images without pseudo-labels come back unchanged.
template <typename T>
std::vector<AdversarialExample> fgsm_attack(const GridDetector<T>& teacher, const ParameterSet<T>& params,
                                            const std::vector<const Image*>& images,
                                            const std::vector<Detections>& vanilla, double beta);

template <typename T>
AdversarialExample fgsm_attack(const GridDetector<T>& teacher, const ParameterSet<T>& params, const Image& image,
                               const Detections& vanilla, double beta) {
  return fgsm_attack(teacher, params, {&image}, {vanilla}, beta).front();
}

// Summed cross-entropy of the attacked cells, the quantity FGSM ascends.
template <typename T>
double attack_loss(const GridDetector<T>& teacher, const ParameterSet<T>& params, const Image& image,
                   const Detections& vanilla);

// sgn with sgn(0) = 0.
inline double sign_of(double v) { return (v > 0) - (v < 0); }

}  // namespace aat
