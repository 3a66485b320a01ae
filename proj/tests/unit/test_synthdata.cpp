#include <algorithm>
#include <cmath>
#include <filesystem>

#include "aat/augment.hpp"
#include "aat/dataset.hpp"
#include "aat/errors.hpp"
#include "aat/scene.hpp"
#include "doctest.h"

using namespace aat;

namespace {

Detection det(double x1, double y1, double x2, double y2, int cls = 0) {
  return Detection{Box{x1, y1, x2, y2}, cls, 1.0};
}

bool labels_valid(const Detections& labels, int size) {
  return std::all_of(labels.begin(), labels.end(), [&](const Detection& d) {
    return d.box.x1 < d.box.x2 && d.box.y1 < d.box.y2 && d.box.x1 >= 0 && d.box.y1 >= 0 && d.box.x2 <= size &&
           d.box.y2 <= size;
  });
}

StrongAugmentConfig no_strong() {
  StrongAugmentConfig c;
  c.jitter_probability = c.grayscale_probability = c.blur_probability = c.cutout_probability = 0;
  return c;
}

AugmentationRecord cutout_record(std::vector<Box> rects) {
  AugmentationRecord r;
  r.transforms.emplace_back(Cutout{std::move(rects)});
  return r;
}

Image gradient_image(int size = 64) {
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>((x + 2 * y + 40 * c) % 256) / 255.0f;
  return img;
}

}  // namespace

TEST_CASE("scene with no objects is pure background") {
  SceneSpec spec;
  spec.min_objects = spec.max_objects = 0;
  const Scene s = generate_scene(7, spec, DomainConfig::source());
  CHECK(s.objects.empty());
  CHECK(s.image.height == 64);
  CHECK(s.image.width == 64);
}

TEST_CASE("scene generation is deterministic in the seed") {
  const SceneSpec spec;
  const DomainConfig target = DomainConfig::default_target();
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const Scene a = generate_scene(seed, spec, target), b = generate_scene(seed, spec, target);
    CHECK(a.image == b.image);
    CHECK(a.objects == b.objects);
  }
  CHECK_FALSE(generate_scene(1, spec, target).image == generate_scene(2, spec, target).image);
}

TEST_CASE("scene labels are valid and pixels quantized") {
  SceneSpec spec;
  spec.class_shapes = {ShapeKind::kCircle, ShapeKind::kSquare, ShapeKind::kTriangle, ShapeKind::kCross,
                       ShapeKind::kRing, ShapeKind::kStar, ShapeKind::kDiamond};
  spec.class_weights.assign(7, 1.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(seed, spec, DomainConfig::default_target());
    CHECK(labels_valid(s.objects, 64));
    for (const Detection& d : s.objects) CHECK((d.class_id >= 0 && d.class_id < 7));
    for (float v : s.image.pixels) {
      REQUIRE(v >= 0.0f);
      REQUIRE(v <= 1.0f);
      REQUIRE(std::abs(v * 255.0f - std::round(v * 255.0f)) < 1e-3f);
    }
  }
}

TEST_CASE("class frequencies follow the weights") {
  SceneSpec spec;
  spec.class_shapes = {ShapeKind::kCircle, ShapeKind::kRing};
  spec.class_weights = {10, 1};
  int n = 0, zeros = 0;
  for (std::uint64_t seed = 0; n < 10000; ++seed) {
    for (const Detection& d : generate_scene(seed, spec, DomainConfig::source()).objects) {
      if (n == 10000) break;
      ++n;
      zeros += d.class_id == 0;
    }
  }
  const double p = 10.0 / 11.0;
  const double sigma = std::sqrt(n * p * (1 - p));
  CHECK(std::abs(zeros - n * p) <= 3 * sigma);
}

TEST_CASE("invalid scene spec is rejected") {
  SceneSpec spec;
  spec.class_weights = {1, 0, 1, 1};
  CHECK_THROWS_AS(validate(spec), ConfigError);
  spec.class_weights = {1, 1};
  CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("target domain shifts channel statistics") {
  const SceneSpec spec;
  double gap = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = channel_means(generate_scene(seed, spec, DomainConfig::source()).image);
    const auto t = channel_means(generate_scene(seed, spec, DomainConfig::default_target()).image);
    for (int c = 0; c < 3; ++c) gap += std::abs(s[c] - t[c]) / 3.0;
  }
  CHECK(gap / 40 > 0.05);
  CHECK(DomainConfig::source().is_identity());
  CHECK_FALSE(DomainConfig::default_target().is_identity());
}

TEST_CASE("horizontal flip") {
  CHECK(hflip(Box{10, 20, 30, 40}, 64) == Box{34, 20, 54, 40});
  const Image img = gradient_image();
  CHECK(hflip(hflip(img)) == img);
  const Detections labels{det(10, 20, 30, 40), det(0, 0, 64, 5, 1)};
  AugmentationRecord twice;
  twice.transforms = {HorizontalFlip{}, HorizontalFlip{}};
  CHECK(map_labels(labels, twice, 64) == labels);
  CHECK_FALSE(twice.flipped());

  Rng never(1), always(1);
  const Augmented same = weak_augment(img, labels, never, 0.0);
  CHECK(same.image == img);
  CHECK(same.labels == labels);
  CHECK(same.record.transforms.empty());
  const Augmented flipped = weak_augment(img, labels, always, 1.0);
  CHECK(flipped.record.flipped());
  CHECK(flipped.labels[0].box == Box{34, 20, 54, 40});
  CHECK(flipped.image.at(3, 0, 1) == img.at(3, 63, 1));
}

TEST_CASE("weak augment flips about half the time") {
  Rng rng(5);
  const Image img(4, 4);
  int flips = 0;
  for (int i = 0; i < 2000; ++i) flips += weak_augment(img, {}, rng).record.flipped();
  CHECK(std::abs(flips - 1000) < 3 * std::sqrt(500.0));
}

TEST_CASE("strong augment with zero probabilities is the identity") {
  Rng rng(3);
  const Image img = gradient_image();
  const Detections labels{det(1, 2, 20, 30)};
  const Augmented out = strong_augment(img, labels, rng, no_strong());
  CHECK(out.image == img);
  CHECK(out.labels == labels);
  CHECK(out.record.transforms.empty());
}

TEST_CASE("grayscale makes channels equal") {
  const Image g = apply_transform(gradient_image(), Grayscale{});
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      REQUIRE(g.at(y, x, 0) == g.at(y, x, 1));
      REQUIRE(g.at(y, x, 1) == g.at(y, x, 2));
    }
}

TEST_CASE("strong augment output is clipped and replayable") {
  Rng rng(11);
  const Image img = generate_scene(3, SceneSpec{}, DomainConfig::default_target()).image;
  StrongAugmentConfig cfg;
  cfg.jitter_probability = cfg.grayscale_probability = cfg.blur_probability = cfg.cutout_probability = 1.0;
  for (int i = 0; i < 20; ++i) {
    const Augmented out = strong_augment(img, {}, rng, cfg);
    CHECK(replay(img, out.record) == out.image);
    for (float v : out.image.pixels) REQUIRE((v >= 0.0f && v <= 1.0f));
  }
}

TEST_CASE("cutout rectangles match the zeroed region") {
  StrongAugmentConfig cfg = no_strong();
  cfg.cutout_probability = 1.0;
  Image img(64, 64, 0.5f);
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Augmented out = strong_augment(img, {}, rng, cfg);
    const auto rects = out.record.cutout_rects();
    REQUIRE_FALSE(rects.empty());
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        const bool inside = std::any_of(rects.begin(), rects.end(), [&](const Box& r) {
          return x >= r.x1 && x < r.x2 && y >= r.y1 && y < r.y2;
        });
        REQUIRE((out.image.at(y, x, 0) == 0.0f) == inside);
      }
    }
  }
}

TEST_CASE("cutout label rule is a step at 0.8 coverage") {
  const Detections labels{det(0, 0, 10, 10)};
  CHECK(apply_cutout_label_rule(labels, {}) == labels);
  CHECK(apply_cutout_label_rule(labels, cutout_record({Box{-5, -5, 20, 20}})).empty());
  CHECK(apply_cutout_label_rule(labels, cutout_record({Box{0, 0, 8, 10}})).empty());
  CHECK(apply_cutout_label_rule(labels, cutout_record({Box{0, 0, 7.9, 10}})).size() == 1);
  // Overlapping rectangles count once.
  CHECK(covered_fraction(Box{0, 0, 10, 10}, {Box{0, 0, 6, 10}, Box{2, 0, 7, 10}}) == doctest::Approx(0.7));
  CHECK(apply_cutout_label_rule(labels, cutout_record({Box{0, 0, 5, 10}, Box{0, 0, 10, 3}})).size() == 1);
  CHECK(apply_cutout_label_rule(labels, cutout_record({Box{0, 0, 6, 10}, Box{0, 0, 10, 5}})).empty());
}

TEST_CASE("covered fraction matches a pixel count") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int bx = rng.randint(0, 40), by = rng.randint(0, 40);
    const Box box{double(bx), double(by), double(bx + rng.randint(1, 24)), double(by + rng.randint(1, 24))};
    std::vector<Box> rects;
    for (int k = rng.randint(0, 4); k > 0; --k) {
      const int x = rng.randint(0, 56), y = rng.randint(0, 56);
      rects.push_back(Box{double(x), double(y), double(x + rng.randint(1, 20)), double(y + rng.randint(1, 20))});
    }
    int hit = 0;
    for (int y = by; y < box.y2; ++y)
      for (int x = bx; x < box.x2; ++x)
        hit += std::any_of(rects.begin(), rects.end(),
                           [&](const Box& r) { return x >= r.x1 && x < r.x2 && y >= r.y1 && y < r.y2; });
    REQUIRE(covered_fraction(box, rects) == doctest::Approx(hit / box.area()).epsilon(1e-12));
  }
}

TEST_CASE("paste crops") {
  PasteConfig cfg;
  cfg.jitter_crops = false;
  const Image base = gradient_image();
  const AugmentationRecord with_cut = cutout_record({Box{20, 20, 44, 44}});
  Rng rng(2);

  SUBCASE("empty crop list leaves everything unchanged") {
    Image img = base;
    Detections labels{det(0, 0, 10, 10)};
    AugmentationRecord rec = with_cut;
    const PasteStats stats = paste_crops(img, labels, {}, rec, rng, cfg);
    CHECK(img == base);
    CHECK(labels.size() == 1);
    CHECK(stats.pasted == 0);
  }
  SUBCASE("one crop adds one label of its class and changes exactly the pasted box") {
    const Image cut = replay(base, with_cut);
    Image img = cut;
    Detections labels{det(0, 0, 10, 10)};
    AugmentationRecord rec = with_cut;
    const CropSample crop{Image(12, 10, 1.0f), 3};
    const PasteStats stats = paste_crops(img, labels, {crop}, rec, rng, cfg);
    REQUIRE(stats.pasted == 1);
    REQUIRE(labels.size() == 2);
    const Box pasted = labels.back().box;
    CHECK(labels.back().class_id == 3);
    CHECK(pasted.width() == 10);
    CHECK(pasted.height() == 12);
    CHECK(pasted.inside(64, 64));
    CHECK((pasted.x1 >= 20 && pasted.x2 <= 44 && pasted.y1 >= 20 && pasted.y2 <= 44));
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const bool in = x >= pasted.x1 && x < pasted.x2 && y >= pasted.y1 && y < pasted.y2;
        bool differs = false;
        for (int c = 0; c < 3; ++c) differs |= img.at(y, x, c) != cut.at(y, x, c);
        REQUIRE(differs == in);
      }
    CHECK(replay(base, rec) == img);
  }
  SUBCASE("large crops are scaled down to fit") {
    Image img = base;
    Detections labels;
    AugmentationRecord rec = with_cut;
    paste_crops(img, labels, {CropSample{Image(48, 30, 1.0f), 1}}, rec, rng, cfg);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].box.height() <= 24);
    CHECK(labels[0].box.width() <= 24);
  }
  SUBCASE("placements overlapping existing labels are skipped") {
    Image img = base;
    Detections labels{det(20, 20, 44, 44)};
    AugmentationRecord rec = with_cut;
    const PasteStats stats = paste_crops(img, labels, {CropSample{Image(24, 24, 1.0f), 0}}, rec, rng, cfg);
    CHECK(stats.pasted == 0);
    CHECK(stats.skipped == 1);
    CHECK(labels.size() == 1);
    CHECK(img == base);
  }
  SUBCASE("no cutout rectangle means nothing is pasted") {
    Image img = base;
    Detections labels;
    AugmentationRecord rec;
    const PasteStats stats = paste_crops(img, labels, {CropSample{Image(8, 8, 1.0f), 0}}, rec, rng, cfg);
    CHECK(stats.skipped == 1);
    CHECK(labels.empty());
  }
}

TEST_CASE("pasted labels never overlap existing ones above the guard") {
  Rng rng(13);
  PasteConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = generate_scene(static_cast<std::uint64_t>(trial), SceneSpec{}, DomainConfig::default_target());
    StrongAugmentConfig sc;
    sc.cutout_probability = 1.0;
    Augmented a = strong_augment(s.image, s.objects, rng, sc);
    const Detections before = a.labels;
    std::vector<CropSample> crops{{Image(14, 14, 0.9f), 1}, {Image(9, 16, 0.2f), 2}};
    paste_crops(a.image, a.labels, crops, a.record, rng, cfg);
    CHECK(labels_valid(a.labels, 64));
    for (std::size_t i = before.size(); i < a.labels.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) REQUIRE(iou(a.labels[i].box, a.labels[j].box) <= 0.3);
    CHECK(replay(s.image, a.record) == a.image);
  }
}

TEST_CASE("crop and resize") {
  const Image img = gradient_image();
  const Image c = crop_image(img, Box{10.5, 4, 20, 9.2});
  CHECK(c.width == 10);
  CHECK(c.height == 6);
  CHECK(c.at(0, 0, 2) == img.at(4, 10, 2));
  CHECK(resize_bilinear(img, 64, 64) == img);
  const Image flat = resize_bilinear(Image(5, 7, 0.25f), 13, 3);
  CHECK(flat.height == 13);
  for (float v : flat.pixels) CHECK(v == doctest::Approx(0.25f));
  CHECK_THROWS_AS(crop_image(img, Box{70, 70, 80, 80}), ContractError);
}

TEST_CASE("split save and load round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "aat_test_split";
  std::filesystem::remove_all(dir);
  const SceneSpec spec;
  const Split split = generate_split("target_test", 4, spec, DomainConfig::default_target(), 6,
                                     {"circle", "square", "triangle", "cross"});
  const Split parallel = generate_split("target_test", 4, spec, DomainConfig::default_target(), 6,
                                        {"circle", "square", "triangle", "cross"}, 3);
  for (std::size_t i = 0; i < split.items.size(); ++i) CHECK(split.items[i].image == parallel.items[i].image);
  save_split(split, dir, "exp123");
  const Split back = load_split(dir, "target_test");
  REQUIRE(back.items.size() == split.items.size());
  CHECK(back.classes == split.classes);
  for (std::size_t i = 0; i < split.items.size(); ++i) {
    CHECK(back.items[i].image == split.items[i].image);
    CHECK(back.items[i].labels == split.items[i].labels);
  }
  const auto hist = class_histogram(split, 4);
  int total = 0;
  for (const auto& item : split.items) total += static_cast<int>(item.labels.size());
  CHECK(hist[0] + hist[1] + hist[2] + hist[3] == total);
  CHECK_THROWS_AS(load_split(dir, "missing"), IoError);
  std::filesystem::remove_all(dir);
}
