#include "aat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aat/errors.hpp"
#include "aat/rng.hpp"

namespace aat {
namespace {

constexpr int kSupersample = 3;
constexpr int kPlacementAttempts = 30;

// Shape membership in box-normalised coordinates u, v in [-1, 1].
bool inside_shape(ShapeKind kind, double u, double v) {
  switch (kind) {
    case ShapeKind::kCircle:
      return u * u + v * v <= 1.0;
    case ShapeKind::kSquare:
      return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
    case ShapeKind::kTriangle:
      // apex at the top, base along the bottom edge
      return v <= 1.0 && std::abs(u) <= (v + 1.0) * 0.5;
    case ShapeKind::kCross:
      return std::abs(u) <= 0.34 || std::abs(v) <= 0.34;
    case ShapeKind::kRing: {
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.3;
    }
    case ShapeKind::kStar: {
      const double r = std::hypot(u, v);
      if (r > 1.0) return false;
      double theta = std::atan2(u, -v);  // 0 at the top point
      const double sector = 2.0 * std::numbers::pi / 5.0;
      theta = std::fmod(theta + 2.0 * std::numbers::pi, sector);
      const double t = std::abs(theta / sector - 0.5) * 2.0;  // 1 at a point, 0 between
      return r <= 0.42 + 0.58 * t;
    }
    case ShapeKind::kDiamond:
      return std::abs(u) + std::abs(v) <= 1.0;
  }
  return false;
}

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  Rgb out{0, 0, 0};
  if (hp < 1) out = {c, x, 0};
  else if (hp < 2) out = {x, c, 0};
  else if (hp < 3) out = {0, c, x};
  else if (hp < 4) out = {0, x, c};
  else if (hp < 5) out = {x, 0, c};
  else out = {c, 0, x};
  const double m = v - c;
  return {out.r + m, out.g + m, out.b + m};
}

float quantize(double v) {
  return static_cast<float>(std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0);
}

void render_background(Image& img, const SceneSpec& spec, Rng& rng) {
  const double base = rng.uniform(0.35, 0.65);
  const double hue = rng.uniform();
  const Rgb tint = hsv_to_rgb(hue, 0.25, 1.0);
  const double gx = rng.uniform(-1, 1) * spec.background_variation;
  const double gy = rng.uniform(-1, 1) * spec.background_variation;
  const double n = img.width;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double level = base + gx * (x / n - 0.5) + gy * (y / n - 0.5);
      img.at(y, x, 0) = static_cast<float>(level * tint.r);
      img.at(y, x, 1) = static_cast<float>(level * tint.g);
      img.at(y, x, 2) = static_cast<float>(level * tint.b);
    }
  }
}

void render_object(Image& img, ShapeKind kind, const Box& box, const Rgb& color) {
  const int x0 = static_cast<int>(std::floor(box.x1)), x1 = static_cast<int>(std::ceil(box.x2));
  const int y0 = static_cast<int>(std::floor(box.y1)), y1 = static_cast<int>(std::ceil(box.y2));
  const double hw = 0.5 * box.width(), hh = 0.5 * box.height();
  const double cx = box.center_x(), cy = box.center_y();
  for (int y = std::max(y0, 0); y < std::min(y1, img.height); ++y) {
    for (int x = std::max(x0, 0); x < std::min(x1, img.width); ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double px = x + (sx + 0.5) / kSupersample, py = y + (sy + 0.5) / kSupersample;
          hits += inside_shape(kind, (px - cx) / hw, (py - cy) / hh);
        }
      }
      if (hits == 0) continue;
      const float a = static_cast<float>(hits) / (kSupersample * kSupersample);
      img.at(y, x, 0) = (1 - a) * img.at(y, x, 0) + a * static_cast<float>(color.r);
      img.at(y, x, 1) = (1 - a) * img.at(y, x, 1) + a * static_cast<float>(color.g);
      img.at(y, x, 2) = (1 - a) * img.at(y, x, 2) + a * static_cast<float>(color.b);
    }
  }
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kTriangle: return "triangle";
    case ShapeKind::kCross: return "cross";
    case ShapeKind::kRing: return "ring";
    case ShapeKind::kStar: return "star";
    case ShapeKind::kDiamond: return "diamond";
  }
  return "?";
}

std::optional<ShapeKind> shape_from_string(const std::string& name) {
  for (ShapeKind k : {ShapeKind::kCircle, ShapeKind::kSquare, ShapeKind::kTriangle, ShapeKind::kCross,
                      ShapeKind::kRing, ShapeKind::kStar, ShapeKind::kDiamond}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string to_string(Texture texture) {
  switch (texture) {
    case Texture::kSmooth: return "smooth";
    case Texture::kStripes: return "stripes";
    case Texture::kChecker: return "checker";
  }
  return "?";
}

std::optional<Texture> texture_from_string(const std::string& name) {
  for (Texture t : {Texture::kSmooth, Texture::kStripes, Texture::kChecker}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::string to_string(DomainConfig::Tag tag) {
  return tag == DomainConfig::Tag::kSource ? "source" : "target";
}

DomainConfig DomainConfig::default_target() {
  DomainConfig d;
  d.tag = Tag::kTarget;
  d.haze = 0.45;
  d.contrast = 0.75;
  d.hue_shift = 1.2;
  d.noise = 0.05;
  d.texture = Texture::kStripes;
  d.texture_strength = 0.12;
  return d;
}

void validate(const SceneSpec& spec) {
  if (spec.image_size < 8) throw ConfigError("scene: image_size must be >= 8");
  if (spec.class_shapes.empty()) throw ConfigError("scene: at least one class is required");
  if (spec.class_weights.size() != spec.class_shapes.size()) {
    throw ConfigError("scene: class_weights must have one entry per class");
  }
  for (double w : spec.class_weights) {
    if (!(w > 0)) throw ConfigError("scene: class weights must be positive");
  }
  if (spec.min_objects < 0 || spec.max_objects < spec.min_objects) {
    throw ConfigError("scene: invalid object count range");
  }
  if (!(spec.min_size > 1) || spec.max_size < spec.min_size || spec.max_size > spec.image_size) {
    throw ConfigError("scene: invalid object size range");
  }
}

int sample_class(const SceneSpec& spec, double u) {
  double total = 0;
  for (double w : spec.class_weights) total += w;
  double acc = 0;
  for (std::size_t c = 0; c < spec.class_weights.size(); ++c) {
    acc += spec.class_weights[c] / total;
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(spec.class_weights.size()) - 1;
}

void apply_domain_shift(Image& img, const DomainConfig& d, std::uint64_t seed) {
  if (d.is_identity()) return;
  Rng rng(seed, "domain-shift");
  if (d.texture != Texture::kSmooth && d.texture_strength > 0) {
    const double angle = rng.uniform(0, std::numbers::pi);
    const double period = rng.uniform(5, 9);
    const double phase = rng.uniform(0, 2 * std::numbers::pi);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        double t;
        if (d.texture == Texture::kStripes) {
          t = std::sin(2 * std::numbers::pi * (ca * x + sa * y) / period + phase);
        } else {
          t = ((static_cast<int>(x / period) + static_cast<int>(y / period)) % 2) ? 1.0 : -1.0;
        }
        for (int c = 0; c < 3; ++c) img.at(y, x, c) += static_cast<float>(d.texture_strength * t);
      }
    }
  }
  // Rotation of RGB about the grey axis (1,1,1)/sqrt(3).
  const double cosh = std::cos(d.hue_shift), sinh = std::sin(d.hue_shift);
  const double k = (1 - cosh) / 3.0, s = sinh / std::sqrt(3.0);
  const double m[3][3] = {{cosh + k, k - s, k + s}, {k + s, cosh + k, k - s}, {k - s, k + s, cosh + k}};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double rgb[3] = {img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)};
      for (int c = 0; c < 3; ++c) {
        double v = m[c][0] * rgb[0] + m[c][1] * rgb[1] + m[c][2] * rgb[2];
        v = 0.5 + d.contrast * (v - 0.5);
        v = (1 - d.haze) * v + d.haze * d.haze_level;
        if (d.noise > 0) v += rng.normal(0.0, d.noise);
        img.at(y, x, c) = static_cast<float>(v);
      }
    }
  }
}

Scene generate_scene(std::uint64_t seed, const SceneSpec& spec, const DomainConfig& domain) {
  validate(spec);
  Rng rng(seed, "scene");
  Scene scene;
  scene.image = Image(spec.image_size, spec.image_size);
  render_background(scene.image, spec, rng);

  const int count = rng.randint(spec.min_objects, spec.max_objects);
  const double n = spec.image_size;
  for (int i = 0; i < count; ++i) {
    const int cls = sample_class(spec, rng.uniform());
    const double size = rng.uniform(spec.min_size, spec.max_size);
    const double aspect = rng.uniform(0.8, 1.25);
    const double w = std::min(size * std::sqrt(aspect), n), h = std::min(size / std::sqrt(aspect), n);
    const Rgb color = hsv_to_rgb(rng.uniform(), rng.uniform(0.6, 1.0),
                                 rng.bernoulli(0.5) ? rng.uniform(0.85, 1.0) : rng.uniform(0.05, 0.2));
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const double x1 = rng.uniform(0, n - w), y1 = rng.uniform(0, n - h);
      const Box box{x1, y1, x1 + w, y1 + h};
      const bool clash = std::any_of(scene.objects.begin(), scene.objects.end(), [&](const Detection& o) {
        return intersection_area(o.box, box) > 0.1 * std::min(o.box.area(), box.area());
      });
      if (clash) continue;
      render_object(scene.image, spec.class_shapes[cls], box, color);
      scene.objects.push_back(Detection{box, cls, 1.0});
      break;
    }
  }
  apply_domain_shift(scene.image, domain, derive_seed(seed, "shift"));
  for (float& v : scene.image.pixels) v = quantize(v);
  return scene;
}

std::array<double, 3> channel_means(const Image& image) {
  std::array<double, 3> sum{0, 0, 0};
  const std::size_t n = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) sum[c] += image.pixels[p * 3 + c];
  }
  for (double& v : sum) v /= static_cast<double>(n);
  return sum;
}

}  // namespace aat
