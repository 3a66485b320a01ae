#include "aat/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "aat/errors.hpp"
#include "aat/ops.hpp"
#include "aat/rng.hpp"

namespace aat {
namespace {

constexpr double kMaxLogDelta = 4.0;

int pooling_stages(const DetectorConfig& c) { return std::countr_zero(static_cast<unsigned>(c.stride)); }

}  // namespace

void validate(const DetectorConfig& c) {
  if (c.num_classes < 1) throw ConfigError("detector: num_classes must be >= 1");
  if (c.stride < 1 || !std::has_single_bit(static_cast<unsigned>(c.stride))) {
    throw ConfigError("detector: stride must be a power of two");
  }
  if (c.input_size < c.stride || c.input_size % c.stride != 0) {
    throw ConfigError("detector: input_size must be a multiple of stride");
  }
  if (c.channels.empty() || static_cast<int>(c.channels.size()) < pooling_stages(c)) {
    throw ConfigError("detector: need at least log2(stride) conv stages");
  }
  for (int ch : c.channels) {
    if (ch < 1) throw ConfigError("detector: channel counts must be positive");
  }
  if (!(c.box_reference > 0)) throw ConfigError("detector: box_reference must be > 0");
}

std::array<double, 4> GridGeometry::encode(const Box& box, int row, int col) const {
  return {(box.center_x() - cell_center(col)) / stride, (box.center_y() - cell_center(row)) / stride,
          std::log(box.width() / box_reference), std::log(box.height() / box_reference)};
}

Box GridGeometry::decode(const std::array<double, 4>& d, int row, int col) const {
  const double cx = cell_center(col) + d[0] * stride;
  const double cy = cell_center(row) + d[1] * stride;
  const double w = box_reference * std::exp(std::clamp(d[2], -kMaxLogDelta, kMaxLogDelta));
  const double h = box_reference * std::exp(std::clamp(d[3], -kMaxLogDelta, kMaxLogDelta));
  return clip_box(Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h}, image_size, image_size);
}

GridGeometry geometry_of(const DetectorConfig& config) {
  return GridGeometry{config.input_size, config.stride, config.box_reference};
}

template <typename T>
GridDetector<T>::GridDetector(DetectorConfig config) : config_(std::move(config)) {
  validate(config_);
}

template <typename T>
ParameterSet<T> GridDetector<T>::init_parameters(std::uint64_t seed) const {
  Rng rng(seed, "detector-init");
  ParameterSet<T> params;
  auto conv = [&](const std::string& name, int out, int in, int k, double stddev) {
    Tensor<T> w(Shape{static_cast<std::size_t>(out), static_cast<std::size_t>(in),
                      static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
    for (T& v : w.data()) v = static_cast<T>(stddev > 0 ? rng.normal(0.0, stddev) : 0.0);
    params.add(name + ".weight", std::move(w));
    params.add(name + ".bias", Tensor<T>(Shape{static_cast<std::size_t>(out)}));
  };
  int in = 3;
  for (std::size_t s = 0; s < config_.channels.size(); ++s) {
    const int out = config_.channels[s];
    conv("conv" + std::to_string(s), out, in, 3, std::sqrt(2.0 / (in * 9)));
    in = out;
  }
  const double head_std = config_.zero_init_heads ? 0.0 : 0.01;
  conv("cls", config_.logits_per_cell(), in, 3, head_std);
  conv("box", 4, in, 3, head_std);
  return params;
}

template <typename T>
void GridDetector<T>::check_input(const Shape& s) const {
  const auto size = static_cast<std::size_t>(config_.input_size);
  if (s.size() != 4 || s[1] != 3 || s[2] != size || s[3] != size) {
    throw ShapeError("detector input " + shape_to_string(s) + ", expected [N,3," +
                     std::to_string(size) + "," + std::to_string(size) + "]");
  }
}

template <typename T>
DetectorVars<T> GridDetector<T>::forward(const std::vector<Var<T>>& params, Var<T> images) const {
  check_input(images.shape());
  const std::size_t expected = 2 * (config_.channels.size() + 2);
  if (params.size() != expected) {
    throw ContractError("detector forward: expected " + std::to_string(expected) +
                        " parameter tensors, got " + std::to_string(params.size()));
  }
  const int pools = pooling_stages(config_);
  Var<T> x = images;
  std::size_t p = 0;
  for (std::size_t s = 0; s < config_.channels.size(); ++s, p += 2) {
    x = ops::relu(ops::conv2d(x, params[p], params[p + 1], 1, 1));
    if (static_cast<int>(s) < pools) x = ops::max_pool2d(x, 2);
  }
  DetectorVars<T> out;
  out.features = x;
  out.logits = ops::conv2d(x, params[p], params[p + 1], 1, 1);
  out.deltas = ops::conv2d(x, params[p + 2], params[p + 3], 1, 1);
  return out;
}

template <typename T>
RawOutputs<T> GridDetector<T>::predict(const ParameterSet<T>& params, const Tensor<T>& images) const {
  check_input(images.shape());
  Tape<T> tape;
  const auto bound = params.bind(tape, false);
  const DetectorVars<T> vars = forward(bound, tape.leaf(images, false, "images"));
  return RawOutputs<T>{vars.logits.value(), vars.deltas.value(), vars.features.value()};
}

template <typename T>
RawOutputs<T> GridDetector<T>::predict(const ParameterSet<T>& params, const Image& image) const {
  return predict(params, image_to_tensor<T>(image));
}

template <typename T>
std::vector<double> cell_probabilities(const Tensor<T>& logits, std::size_t n, int row, int col) {
  const std::size_t k = logits.dim(1), g = logits.dim(2);
  const std::size_t base = n * k * g * g + static_cast<std::size_t>(row) * g + col;
  std::vector<double> z(k);
  for (std::size_t j = 0; j < k; ++j) z[j] = static_cast<double>(logits[base + j * g * g]);
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    denom += v;
  }
  for (double& v : z) v /= denom;
  return z;
}

template <typename T>
Detections decode(const RawOutputs<T>& raw, std::size_t n, double score_threshold,
                  const GridGeometry& geometry) {
  const int g = static_cast<int>(raw.logits.dim(2));
  const int background = static_cast<int>(raw.logits.dim(1)) - 1;
  const std::size_t plane = static_cast<std::size_t>(g) * g;
  Detections dets;
  for (int row = 0; row < g; ++row) {
    for (int col = 0; col < g; ++col) {
      const auto probs = cell_probabilities(raw.logits, n, row, col);
      const int best = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
      if (best == background || probs[best] < score_threshold) continue;
      std::array<double, 4> d{};
      const std::size_t cell = static_cast<std::size_t>(row) * g + col;
      for (std::size_t j = 0; j < 4; ++j) d[j] = raw.deltas[(n * 4 + j) * plane + cell];
      const Box box = geometry.decode(d, row, col);
      if (!box.valid()) continue;
      dets.push_back(Detection{box, best, probs[best]});
    }
  }
  return dets;
}

int GridAssignment::foreground_cells() const {
  return static_cast<int>(std::count_if(target_class.begin(), target_class.end(),
                                        [this](int c) { return c != background; }));
}

GridAssignment assign_targets(const Detections& labels, const GridGeometry& geometry, int num_classes) {
  GridAssignment a;
  a.grid = geometry.grid();
  a.background = num_classes;
  const int cells = geometry.cells();
  a.target_class.assign(cells, num_classes);
  a.box_target.assign(cells, {0, 0, 0, 0});
  a.source.assign(cells, -1);
  std::vector<double> owner_area(cells, -1.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Detection& d = labels[i];
    if (d.class_id < 0 || d.class_id >= num_classes) {
      throw ContractError("assign_targets: class " + std::to_string(d.class_id) + " out of range");
    }
    if (!d.box.valid()) continue;
    const double cx = d.box.center_x(), cy = d.box.center_y();
    if (cx < 0 || cy < 0 || cx >= geometry.image_size || cy >= geometry.image_size) continue;
    const int col = static_cast<int>(cx / geometry.stride);
    const int row = static_cast<int>(cy / geometry.stride);
    const int cell = a.cell(row, col);
    if (d.box.area() <= owner_area[cell]) continue;  // earlier or larger object keeps the cell
    owner_area[cell] = d.box.area();
    a.target_class[cell] = d.class_id;
    a.box_target[cell] = geometry.encode(d.box, row, col);
    a.source[cell] = static_cast<int>(i);
  }
  return a;
}

template <typename T>
DetectionLoss<T> detection_loss(const DetectorVars<T>& outputs,
                                const std::vector<GridAssignment>& assignments,
                                bool include_regression) {
  const Shape& ls = outputs.logits.shape();
  const std::size_t n = ls[0], k = ls[1], g = ls[2];
  if (assignments.size() != n) {
    throw ShapeError("detection_loss: " + std::to_string(assignments.size()) +
                     " assignments for batch of " + std::to_string(n));
  }
  const std::size_t cells = g * g;
  std::vector<int> targets(n * cells);
  std::vector<std::uint8_t> fg(n * cells, 0);
  Tensor<T> box_targets(Shape{n * cells, 4});
  std::size_t fg_count = 0;
  for (std::size_t b = 0; b < n; ++b) {
    const GridAssignment& a = assignments[b];
    if (static_cast<std::size_t>(a.grid) != g || a.background != static_cast<int>(k) - 1) {
      throw ShapeError("detection_loss: assignment grid " + std::to_string(a.grid) +
                       " does not match logits " + shape_to_string(ls));
    }
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t r = b * cells + c;
      targets[r] = a.target_class[c];
      if (a.target_class[c] != a.background) {
        fg[r] = 1;
        ++fg_count;
        for (int j = 0; j < 4; ++j) box_targets[r * 4 + j] = static_cast<T>(a.box_target[c][j]);
      }
    }
  }
  const std::size_t bg_count = n * cells - fg_count;
  const double bg_weight =
      bg_count > 0 ? std::max(static_cast<double>(fg_count) / bg_count, kBackgroundWeightFloor) : 0.0;
  std::vector<T> weights(n * cells);
  double weight_sum = 0;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    weights[r] = static_cast<T>(fg[r] ? 1.0 : bg_weight);
    weight_sum += weights[r];
  }
  Var<T> rows = ops::to_rows(outputs.logits);
  Var<T> cls = ops::softmax_cross_entropy(rows, targets, weights, static_cast<T>(weight_sum));
  DetectionLoss<T> result;
  result.terms.classification = static_cast<double>(cls.value().item());
  result.total = cls;
  if (include_regression && fg_count > 0) {
    Var<T> reg = ops::smooth_l1(ops::to_rows(outputs.deltas), box_targets, fg,
                                static_cast<T>(fg_count));
    result.terms.regression = static_cast<double>(reg.value().item());
    result.total = ops::add(cls, reg);
  }
  return result;
}

template class GridDetector<float>;
template class GridDetector<double>;
template std::vector<double> cell_probabilities<float>(const Tensor<float>&, std::size_t, int, int);
template std::vector<double> cell_probabilities<double>(const Tensor<double>&, std::size_t, int, int);
template Detections decode<float>(const RawOutputs<float>&, std::size_t, double, const GridGeometry&);
template Detections decode<double>(const RawOutputs<double>&, std::size_t, double, const GridGeometry&);
template DetectionLoss<float> detection_loss<float>(const DetectorVars<float>&,
                                                    const std::vector<GridAssignment>&, bool);
template DetectionLoss<double> detection_loss<double>(const DetectorVars<double>&,
                                                      const std::vector<GridAssignment>&, bool);

}  // namespace aat
