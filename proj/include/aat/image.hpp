#pragma once

#include <cstddef>
#include <vector>

#include "aat/tensor.hpp"

namespace aat {

// Interleaved RGB image, H x W x 3, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}

  float& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const Image&, const Image&) = default;
};

// Stacks images into an NCHW tensor. All images must share one size.
template <typename T>
Tensor<T> images_to_tensor(const std::vector<const Image*>& images);

template <typename T>
Tensor<T> image_to_tensor(const Image& image) {
  return images_to_tensor<T>({&image});
}

// Image n of an NCHW tensor, values clamped to [0,1].
template <typename T>
Image tensor_to_image(const Tensor<T>& batch, std::size_t n);

}  // namespace aat
