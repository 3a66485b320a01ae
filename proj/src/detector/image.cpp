#include "aat/image.hpp"

#include <algorithm>

#include "aat/errors.hpp"

namespace aat {

template <typename T>
Tensor<T> images_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw ContractError("images_to_tensor: empty batch");
  const int h = images.front()->height, w = images.front()->width;
  Tensor<T> out(Shape{images.size(), 3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (img.height != h || img.width != w) {
      throw ShapeError("images_to_tensor: image " + std::to_string(n) + " is " +
                       std::to_string(img.height) + "x" + std::to_string(img.width) + ", expected " +
                       std::to_string(h) + "x" + std::to_string(w));
    }
    T* dst = out.data().data() + n * 3 * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < 3; ++c) dst[c * plane + p] = static_cast<T>(img.pixels[p * 3 + c]);
    }
  }
  return out;
}

template <typename T>
Image tensor_to_image(const Tensor<T>& batch, std::size_t n) {
  if (batch.rank() != 4 || batch.dim(1) != 3 || n >= batch.dim(0)) {
    throw ShapeError("tensor_to_image: bad batch " + shape_to_string(batch.shape()));
  }
  Image img(static_cast<int>(batch.dim(2)), static_cast<int>(batch.dim(3)));
  const std::size_t plane = batch.dim(2) * batch.dim(3);
  const T* src = batch.data().data() + n * 3 * plane;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) {
      img.pixels[p * 3 + c] = std::clamp(static_cast<float>(src[c * plane + p]), 0.0f, 1.0f);
    }
  }
  return img;
}

template Tensor<float> images_to_tensor<float>(const std::vector<const Image*>&);
template Tensor<double> images_to_tensor<double>(const std::vector<const Image*>&);
template Image tensor_to_image<float>(const Tensor<float>&, std::size_t);
template Image tensor_to_image<double>(const Tensor<double>&, std::size_t);

}  // namespace aat
