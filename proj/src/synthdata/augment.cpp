#include "aat/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "aat/errors.hpp"

namespace aat {
namespace {

constexpr double kCoverageTolerance = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

float luma(const Image& img, int y, int x) {
  return 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
}

Image jitter(const Image& in, const ColorJitter& j) {
  Image out = in;
  for (float& v : out.pixels) v = clamp01(v * j.brightness);
  double mean = 0;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) mean += luma(out, y, x);
  mean /= static_cast<double>(out.height) * out.width;
  for (float& v : out.pixels) v = clamp01((v - mean) * j.contrast + mean);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const float g = luma(out, y, x);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = clamp01((out.at(y, x, c) - g) * j.saturation + g);
    }
  }
  return out;
}

Image grayscale(const Image& in) {
  Image out = in;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const float g = clamp01(luma(in, y, x));
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = g;
    }
  }
  return out;
}

Image blur(const Image& in, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  Image tmp = in, out = in;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * in.at(y, std::clamp(x + i, 0, in.width - 1), c);
        }
        tmp.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp.at(std::clamp(y + i, 0, in.height - 1), x, c);
        }
        out.at(y, x, c) = clamp01(acc);
      }
    }
  }
  return out;
}

Image cutout(const Image& in, const Cutout& cut) {
  Image out = in;
  for (const Box& r : cut.rects) {
    for (int y = static_cast<int>(r.y1); y < static_cast<int>(r.y2); ++y) {
      for (int x = static_cast<int>(r.x1); x < static_cast<int>(r.x2); ++x) {
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0f;
      }
    }
  }
  return out;
}

Image paste(const Image& in, const Paste& p) {
  Image out = in;
  const int x0 = static_cast<int>(p.placement.x1), y0 = static_cast<int>(p.placement.y1);
  for (int y = 0; y < p.patch.height; ++y) {
    for (int x = 0; x < p.patch.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y0 + y, x0 + x, c) = p.patch.at(y, x, c);
    }
  }
  return out;
}

ColorJitter draw_jitter(Rng& rng, const StrongAugmentConfig& cfg) {
  ColorJitter j;
  j.brightness = rng.uniform(1 - cfg.brightness, 1 + cfg.brightness);
  j.contrast = rng.uniform(1 - cfg.contrast, 1 + cfg.contrast);
  j.saturation = rng.uniform(1 - cfg.saturation, 1 + cfg.saturation);
  return j;
}

}  // namespace

bool AugmentationRecord::flipped() const {
  bool f = false;
  for (const auto& t : transforms) f ^= std::holds_alternative<HorizontalFlip>(t);
  return f;
}

std::vector<Box> AugmentationRecord::cutout_rects() const {
  std::vector<Box> rects;
  for (const auto& t : transforms) {
    if (const auto* c = std::get_if<Cutout>(&t)) rects.insert(rects.end(), c->rects.begin(), c->rects.end());
  }
  return rects;
}

Image hflip(const Image& in) {
  Image out = in;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = in.at(y, in.width - 1 - x, c);
    }
  }
  return out;
}

Box hflip(const Box& b, int image_width) {
  return Box{image_width - b.x2, b.y1, image_width - b.x1, b.y2};
}

Image apply_transform(const Image& image, const Transform& t) {
  return std::visit(Overloaded{
                        [&](const HorizontalFlip&) { return hflip(image); },
                        [&](const ColorJitter& j) { return jitter(image, j); },
                        [&](const Grayscale&) { return grayscale(image); },
                        [&](const GaussianBlur& b) { return blur(image, b.sigma); },
                        [&](const Cutout& c) { return cutout(image, c); },
                        [&](const Paste& p) { return paste(image, p); },
                    },
                    t);
}

Image replay(const Image& image, const AugmentationRecord& record) {
  Image out = image;
  for (const auto& t : record.transforms) out = apply_transform(out, t);
  return out;
}

Detections map_labels(const Detections& labels, const AugmentationRecord& record, int image_width) {
  Detections out = labels;
  for (const auto& t : record.transforms) {
    if (std::holds_alternative<HorizontalFlip>(t)) {
      for (Detection& d : out) d.box = hflip(d.box, image_width);
    }
  }
  return out;
}

Augmented weak_augment(const Image& image, const Detections& labels, Rng& rng, double flip_probability) {
  Augmented out{image, labels, {}};
  if (rng.bernoulli(flip_probability)) {
    out.record.transforms.emplace_back(HorizontalFlip{});
    out.image = hflip(image);
    out.labels = map_labels(labels, out.record, image.width);
  }
  return out;
}

Augmented strong_augment(const Image& image, const Detections& labels, Rng& rng,
                         const StrongAugmentConfig& cfg) {
  Augmented out{image, labels, {}};
  auto apply = [&](Transform t) {
    out.image = apply_transform(out.image, t);
    out.record.transforms.push_back(std::move(t));
  };
  // Every draw happens regardless of the outcome so the rng stream position
  // does not depend on which transforms fired.
  const bool do_jitter = rng.bernoulli(cfg.jitter_probability);
  const ColorJitter j = draw_jitter(rng, cfg);
  const bool do_gray = rng.bernoulli(cfg.grayscale_probability);
  const bool do_blur = rng.bernoulli(cfg.blur_probability);
  const double sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
  const bool do_cutout = rng.bernoulli(cfg.cutout_probability);
  const int rects = rng.randint(cfg.cutout_min_rects, std::max(cfg.cutout_min_rects, cfg.cutout_max_rects));
  Cutout cut;
  const double area = static_cast<double>(image.width) * image.height;
  for (int i = 0; i < rects; ++i) {
    const double frac = rng.uniform(cfg.cutout_min_area, cfg.cutout_max_area);
    const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    const int w = std::clamp(static_cast<int>(std::round(std::sqrt(frac * area * aspect))), 1, image.width);
    const int h = std::clamp(static_cast<int>(std::round(std::sqrt(frac * area / aspect))), 1, image.height);
    const int x = rng.randint(0, image.width - w), y = rng.randint(0, image.height - h);
    cut.rects.push_back(Box{static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w),
                            static_cast<double>(y + h)});
  }
  if (do_jitter) apply(j);
  if (do_gray) apply(Grayscale{});
  if (do_blur) apply(GaussianBlur{sigma});
  if (do_cutout && !cut.rects.empty()) apply(std::move(cut));
  out.labels = apply_cutout_label_rule(out.labels, out.record, cfg.erase_threshold);
  return out;
}

double covered_fraction(const Box& box, const std::vector<Box>& rects) {
  if (box.area() <= 0) return 0.0;
  // Coordinate compression over the clipped rectangles.
  std::vector<Box> clipped;
  std::set<double> xs{box.x1, box.x2}, ys{box.y1, box.y2};
  for (const Box& r : rects) {
    const Box c{std::max(r.x1, box.x1), std::max(r.y1, box.y1), std::min(r.x2, box.x2), std::min(r.y2, box.y2)};
    if (!c.valid()) continue;
    clipped.push_back(c);
    xs.insert({c.x1, c.x2});
    ys.insert({c.y1, c.y2});
  }
  if (clipped.empty()) return 0.0;
  const std::vector<double> vx(xs.begin(), xs.end()), vy(ys.begin(), ys.end());
  double covered = 0;
  for (std::size_t i = 0; i + 1 < vx.size(); ++i) {
    for (std::size_t j = 0; j + 1 < vy.size(); ++j) {
      const double mx = 0.5 * (vx[i] + vx[i + 1]), my = 0.5 * (vy[j] + vy[j + 1]);
      const bool hit = std::any_of(clipped.begin(), clipped.end(), [&](const Box& c) {
        return mx > c.x1 && mx < c.x2 && my > c.y1 && my < c.y2;
      });
      if (hit) covered += (vx[i + 1] - vx[i]) * (vy[j + 1] - vy[j]);
    }
  }
  return covered / box.area();
}

Detections apply_cutout_label_rule(const Detections& labels, const AugmentationRecord& record,
                                   double threshold) {
  const std::vector<Box> rects = record.cutout_rects();
  if (rects.empty()) return labels;
  Detections kept;
  for (const Detection& d : labels) {
    if (covered_fraction(d.box, rects) < threshold - kCoverageTolerance) kept.push_back(d);
  }
  return kept;
}

Image crop_image(const Image& image, const Box& box) {
  const int x0 = std::clamp(static_cast<int>(std::floor(box.x1)), 0, image.width);
  const int y0 = std::clamp(static_cast<int>(std::floor(box.y1)), 0, image.height);
  const int x1 = std::clamp(static_cast<int>(std::ceil(box.x2)), 0, image.width);
  const int y1 = std::clamp(static_cast<int>(std::ceil(box.y2)), 0, image.height);
  if (x1 <= x0 || y1 <= y0) throw ContractError("crop_image: empty crop");
  Image out(y1 - y0, x1 - x0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y - y0, x - x0, c) = image.at(y, x, c);
    }
  }
  return out;
}

Image resize_bilinear(const Image& in, int height, int width) {
  if (height < 1 || width < 1) throw ContractError("resize_bilinear: empty target size");
  Image out(height, width);
  const double sy = static_cast<double>(in.height) / height, sx = static_cast<double>(in.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, in.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, in.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - wx) * in.at(y0, x0, c) + wx * in.at(y0, x1, c);
        const double bot = (1 - wx) * in.at(y1, x0, c) + wx * in.at(y1, x1, c);
        out.at(y, x, c) = clamp01((1 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

PasteStats paste_crops(Image& image, Detections& labels, const std::vector<CropSample>& crops,
                       AugmentationRecord& record, Rng& rng, const PasteConfig& cfg) {
  PasteStats stats;
  const std::vector<Box> rects = record.cutout_rects();
  if (crops.empty()) return stats;
  if (rects.empty()) {
    stats.skipped = static_cast<int>(crops.size());
    return stats;
  }
  for (const CropSample& crop : crops) {
    Image patch = crop.patch;
    if (cfg.jitter_crops) patch = jitter(patch, draw_jitter(rng, cfg.jitter));
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Box& r = rects[static_cast<std::size_t>(rng.randint(0, static_cast<int>(rects.size()) - 1))];
      const double s = std::min({1.0, r.width() / patch.width, r.height() / patch.height});
      const int w = std::max(1, static_cast<int>(std::floor(patch.width * s)));
      const int h = std::max(1, static_cast<int>(std::floor(patch.height * s)));
      if (w < cfg.min_side || h < cfg.min_side) continue;
      const int x = rng.randint(static_cast<int>(r.x1), static_cast<int>(r.x2) - w);
      const int y = rng.randint(static_cast<int>(r.y1), static_cast<int>(r.y2) - h);
      const Box placement{static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w),
                          static_cast<double>(y + h)};
      const bool overlaps = std::any_of(labels.begin(), labels.end(), [&](const Detection& d) {
        return iou(d.box, placement) > cfg.max_overlap_iou;
      });
      if (overlaps) continue;
      Paste p{placement, (w == patch.width && h == patch.height) ? patch : resize_bilinear(patch, h, w),
              crop.class_id};
      image = apply_transform(image, p);
      labels.push_back(Detection{placement, crop.class_id, 1.0});
      record.transforms.emplace_back(std::move(p));
      placed = true;
    }
    placed ? ++stats.pasted : ++stats.skipped;
  }
  return stats;
}

}  // namespace aat
