#pragma once

#include <variant>
#include <vector>

#include "aat/detection.hpp"
#include "aat/image.hpp"
#include "aat/rng.hpp"

namespace aat {

struct HorizontalFlip {};
struct ColorJitter {
  double brightness = 1, contrast = 1, saturation = 1;
};
struct Grayscale {};
struct GaussianBlur {
  double sigma = 1;
};
// Integer-aligned rectangles filled with zeros.
struct Cutout {
  std::vector<Box> rects;
};
// A crop pasted at `placement` (integer-aligned); `patch` holds the final pixels.
struct Paste {
  Box placement;
  Image patch;
  int class_id = 0;
};

using Transform = std::variant<HorizontalFlip, ColorJitter, Grayscale, GaussianBlur, Cutout, Paste>;

// Ordered list of applied transforms. Replaying it reproduces the augmented
// image bit-exactly.
struct AugmentationRecord {
  std::vector<Transform> transforms;

  bool flipped() const;
  // Rectangles of every Cutout in the record.
  std::vector<Box> cutout_rects() const;
};

Image apply_transform(const Image& image, const Transform& t);
Image replay(const Image& image, const AugmentationRecord& record);

// Replays the geometric part of a record (flips) on label boxes.
Detections map_labels(const Detections& labels, const AugmentationRecord& record, int image_width);

Image hflip(const Image& image);
Box hflip(const Box& box, int image_width);

struct Augmented {
  Image image;
  Detections labels;
  AugmentationRecord record;
};

// Horizontal flip with probability `flip_probability`.
Augmented weak_augment(const Image& image, const Detections& labels, Rng& rng,
                       double flip_probability = 0.5);

struct StrongAugmentConfig {
  double jitter_probability = 0.8;
  double grayscale_probability = 0.2;
  double blur_probability = 0.5;
  double cutout_probability = 0.7;
  double brightness = 0.4;  // factors drawn from [1 - x, 1 + x]
  double contrast = 0.4;
  double saturation = 0.4;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 1.5;
  int cutout_min_rects = 1;
  int cutout_max_rects = 3;
  double cutout_min_area = 0.05;  // fraction of the image per rectangle
  double cutout_max_area = 0.20;
  double erase_threshold = 0.8;
};

// Color jitter, grayscale, blur and cutout, each with its own probability,
// then the cutout label rule.
Augmented strong_augment(const Image& image, const Detections& labels, Rng& rng,
                         const StrongAugmentConfig& config = {});

// Fraction of the box area covered by the union of the rectangles.
double covered_fraction(const Box& box, const std::vector<Box>& rects);

// Drops labels whose area is covered by cutout rectangles by a fraction >= threshold.
Detections apply_cutout_label_rule(const Detections& labels, const AugmentationRecord& record,
                                   double erased_fraction_threshold = 0.8);

// Pixels under `box` (rounded outwards to whole pixels, clipped to the image).
Image crop_image(const Image& image, const Box& box);

Image resize_bilinear(const Image& image, int height, int width);

struct CropSample {
  Image patch;
  int class_id = 0;
};

struct PasteConfig {
  double max_overlap_iou = 0.3;
  int max_attempts = 10;
  int min_side = 4;
  bool jitter_crops = true;  // color-jitter each crop before pasting
  StrongAugmentConfig jitter;
};

struct PasteStats {
  int pasted = 0;
  int skipped = 0;
};

// Scales each crop to fit inside a recorded cutout rectangle and pastes it
// there, appending a label. Placements overlapping an existing label with IoU
// above max_overlap_iou are retried and finally skipped. Paste transforms are
// appended to `record`.
PasteStats paste_crops(Image& image, Detections& labels, const std::vector<CropSample>& crops,
                       AugmentationRecord& record, Rng& rng, const PasteConfig& config = {});

}  // namespace aat
