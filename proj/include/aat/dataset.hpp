#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aat/detection.hpp"
#include "aat/image.hpp"
#include "aat/scene.hpp"

namespace aat {

struct LabeledImage {
  int id = 0;
  Image image;
  Detections labels;
};

struct Split {
  std::string name;
  std::vector<std::string> classes;
  std::vector<LabeledImage> items;
};

// Image i uses seed derive_seed(seed, name, i), so images are independent of
// one another and of the worker count.
Split generate_split(const std::string& name, std::uint64_t seed, const SceneSpec& spec,
                     const DomainConfig& domain, int count, const std::vector<std::string>& classes,
                     int workers = 1);

// Writes <dir>/<name>/NNNNN.png and <dir>/<name>.json:
//   {"experiment": id, "split": name, "classes": [...],
//    "images": [{"id", "file", "width", "height"}],
//    "annotations": [{"image_id", "box": [x1,y1,x2,y2], "class"}]}
void save_split(const Split& split, const std::filesystem::path& dir, const std::string& experiment_id);

Split load_split(const std::filesystem::path& dir, const std::string& name);

// Per-class object counts.
std::vector<int> class_histogram(const Split& split, int num_classes);

void write_png(const Image& image, const std::filesystem::path& path, const std::string& experiment_id);
Image read_png(const std::filesystem::path& path);

}  // namespace aat
