#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aat/detection.hpp"
#include "aat/image.hpp"

namespace aat {

enum class ShapeKind { kCircle, kSquare, kTriangle, kCross, kRing, kStar, kDiamond };

std::string to_string(ShapeKind kind);
std::optional<ShapeKind> shape_from_string(const std::string& name);

struct SceneSpec {
  int image_size = 64;
  std::vector<ShapeKind> class_shapes{ShapeKind::kCircle, ShapeKind::kSquare, ShapeKind::kTriangle,
                                      ShapeKind::kCross};
  std::vector<double> class_weights{1, 1, 1, 1};
  int min_objects = 1;
  int max_objects = 4;
  double min_size = 10;
  double max_size = 24;
  // Amplitude of the low-frequency background gradient.
  double background_variation = 0.25;

  int num_classes() const { return static_cast<int>(class_shapes.size()); }
};

void validate(const SceneSpec& spec);

enum class Texture { kSmooth, kStripes, kChecker };

std::string to_string(Texture texture);
std::optional<Texture> texture_from_string(const std::string& name);

// Photometric domain shift applied after rendering. The default-constructed
// value is the identity (source domain).
struct DomainConfig {
  enum class Tag { kSource, kTarget };

  Tag tag = Tag::kSource;
  double haze = 0.0;        // blend weight towards haze_level
  double haze_level = 0.8;  // grey level of the haze
  double contrast = 1.0;    // multiplier around 0.5
  double hue_shift = 0.0;   // radians, rotation about the grey axis
  double noise = 0.0;       // stddev of additive Gaussian noise
  Texture texture = Texture::kSmooth;
  double texture_strength = 0.0;

  bool is_identity() const {
    return haze == 0.0 && contrast == 1.0 && hue_shift == 0.0 && noise == 0.0 &&
           (texture == Texture::kSmooth || texture_strength == 0.0);
  }

  static DomainConfig source() { return {}; }
  static DomainConfig default_target();
};

std::string to_string(DomainConfig::Tag tag);

struct Scene {
  Image image;
  Detections objects;  // ground truth, score 1
};

// Deterministic in (seed, spec, domain). Pixel values are multiples of 1/255
// so that a PNG round trip is lossless.
Scene generate_scene(std::uint64_t seed, const SceneSpec& spec, const DomainConfig& domain);

// Draws a class index according to spec.class_weights.
int sample_class(const SceneSpec& spec, double u);

// Applies the domain's photometric shift in place. `seed` drives noise and texture phase.
void apply_domain_shift(Image& image, const DomainConfig& domain, std::uint64_t seed);

// Mean of each channel over the image.
std::array<double, 3> channel_means(const Image& image);

}  // namespace aat
