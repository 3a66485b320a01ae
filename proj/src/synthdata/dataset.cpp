#include "aat/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "aat/errors.hpp"
#include "aat/rng.hpp"

namespace aat {
namespace {

using json = nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string image_file_name(int id) {
  std::ostringstream s;
  s << std::setw(5) << std::setfill('0') << id << ".png";
  return s.str();
}

}  // namespace

Split generate_split(const std::string& name, std::uint64_t seed, const SceneSpec& spec,
                     const DomainConfig& domain, int count, const std::vector<std::string>& classes,
                     int workers) {
  validate(spec);
  if (count < 0) throw ContractError("generate_split: negative image count");
  if (static_cast<int>(classes.size()) != spec.num_classes()) {
    throw ContractError("generate_split: class name count does not match the scene spec");
  }
  Split split{name, classes, std::vector<LabeledImage>(static_cast<std::size_t>(count))};
  auto work = [&](int begin, int step) {
    for (int i = begin; i < count; i += step) {
      Scene scene = generate_scene(derive_seed(seed, name, static_cast<std::uint64_t>(i)), spec, domain);
      split.items[static_cast<std::size_t>(i)] = LabeledImage{i, std::move(scene.image), std::move(scene.objects)};
    }
  };
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  return split;
}

void save_split(const Split& split, const std::filesystem::path& dir, const std::string& experiment_id) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / split.name, ec);
  if (ec) throw IoError("cannot create directory " + (dir / split.name).string() + ": " + ec.message());
  json images = json::array(), annotations = json::array();
  for (const LabeledImage& item : split.items) {
    const std::string file = split.name + "/" + image_file_name(item.id);
    write_png(item.image, dir / file, experiment_id);
    images.push_back({{"id", item.id}, {"file", file}, {"width", item.image.width}, {"height", item.image.height}});
    for (const Detection& d : item.labels) {
      annotations.push_back(
          {{"image_id", item.id}, {"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}}, {"class", d.class_id}});
    }
  }
  const json doc = {{"experiment", experiment_id}, {"split", split.name}, {"classes", split.classes},
                    {"images", images},           {"annotations", annotations}};
  const fs::path path = dir / (split.name + ".json");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Split load_split(const std::filesystem::path& dir, const std::string& name) {
  const std::filesystem::path path = dir / (name + ".json");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  Split split;
  try {
    split.name = doc.value("split", name);
    split.classes = doc.at("classes").get<std::vector<std::string>>();
    std::map<int, std::size_t> index;
    for (const json& img : doc.at("images")) {
      LabeledImage item;
      item.id = img.at("id").get<int>();
      item.image = read_png(dir / img.at("file").get<std::string>());
      if (item.image.width != img.at("width").get<int>() || item.image.height != img.at("height").get<int>()) {
        throw FormatError(path.string() + ": size mismatch for image " + std::to_string(item.id));
      }
      index[item.id] = split.items.size();
      split.items.push_back(std::move(item));
    }
    for (const json& a : doc.at("annotations")) {
      const int id = a.at("image_id").get<int>();
      const auto it = index.find(id);
      if (it == index.end()) throw FormatError(path.string() + ": annotation for unknown image " + std::to_string(id));
      const auto b = a.at("box").get<std::vector<double>>();
      if (b.size() != 4) throw FormatError(path.string() + ": box must have 4 coordinates");
      const int cls = a.at("class").get<int>();
      if (cls < 0 || cls >= static_cast<int>(split.classes.size())) {
        throw FormatError(path.string() + ": class " + std::to_string(cls) + " out of range");
      }
      split.items[it->second].labels.push_back(Detection{Box{b[0], b[1], b[2], b[3]}, cls, 1.0});
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return split;
}

std::vector<int> class_histogram(const Split& split, int num_classes) {
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (const LabeledImage& item : split.items) {
    for (const Detection& d : item.labels) {
      if (d.class_id >= 0 && d.class_id < num_classes) ++counts[static_cast<std::size_t>(d.class_id)];
    }
  }
  return counts;
}

void write_png(const Image& image, const std::filesystem::path& path, const std::string& experiment_id) {
  if (image.empty()) throw ContractError("write_png: empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_byte> rows(image.pixels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = static_cast<png_byte>(std::lround(std::clamp(image.pixels[i], 0.0f, 1.0f) * 255.0f));
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * image.width * 3;
  std::string key = "experiment", value = experiment_id;
  png_text text{};
  text.compression = PNG_TEXT_COMPRESSION_NONE;
  text.key = key.data();
  text.text = value.data();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!experiment_id.empty()) png_set_text(png, info, &text, 1);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  Image image;
  std::vector<png_byte> rows;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info), height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info), depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (depth < 8) png_set_packing(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": unsupported PNG layout");
  }
  rows.resize(static_cast<std::size_t>(width) * height * 3);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) row_ptrs[y] = rows.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  image = Image(static_cast<int>(height), static_cast<int>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) image.pixels[i] = rows[i] / 255.0f;
  return image;
}

}  // namespace aat
