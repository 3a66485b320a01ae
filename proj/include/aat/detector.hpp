#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aat/autograd.hpp"
#include "aat/detection.hpp"
#include "aat/image.hpp"
#include "aat/parameters.hpp"

namespace aat {

struct DetectorConfig {
  int input_size = 64;
  int num_classes = 4;  // foreground classes; background is logit index num_classes
  int stride = 8;       // 2^(pooling stages)
  std::vector<int> channels{8, 16, 32, 32};  // one entry per conv stage
  double box_reference = 16.0;  // box size that decodes from log-delta 0
  bool zero_init_heads = false;

  int grid() const { return input_size / stride; }
  int background() const { return num_classes; }
  int logits_per_cell() const { return num_classes + 1; }
};

void validate(const DetectorConfig& config);

// Maps between pixel boxes and per-cell deltas (dx, dy, log dw, log dh)
// measured from the cell center in units of the stride.
struct GridGeometry {
  int image_size = 64;
  int stride = 8;
  double box_reference = 16.0;

  int grid() const { return image_size / stride; }
  int cells() const { return grid() * grid(); }
  double cell_center(int index) const { return (index + 0.5) * stride; }

  std::array<double, 4> encode(const Box& box, int row, int col) const;
  Box decode(const std::array<double, 4>& deltas, int row, int col) const;
};

GridGeometry geometry_of(const DetectorConfig& config);

template <typename T>
struct DetectorVars {
  Var<T> logits;    // [N, C+1, G, G]
  Var<T> deltas;    // [N, 4, G, G]
  Var<T> features;  // [N, F, G, G] backbone output
};

template <typename T>
struct RawOutputs {
  Tensor<T> logits;
  Tensor<T> deltas;
  Tensor<T> features;

  std::size_t batch() const { return logits.dim(0); }
};

// Small single-stage grid detector: conv3x3+relu stages with 2x2 max pooling
// between them, followed by 3x3 classification and box heads on the final
// G x G grid. The class is stateless apart from its configuration; weights
// live in ParameterSets so teacher and student share one architecture.
template <typename T>
class GridDetector {
 public:
  explicit GridDetector(DetectorConfig config);

  const DetectorConfig& config() const { return config_; }
  GridGeometry geometry() const { return geometry_of(config_); }

  ParameterSet<T> init_parameters(std::uint64_t seed) const;

  // Recorded forward pass; `params` from ParameterSet::bind.
  DetectorVars<T> forward(const std::vector<Var<T>>& params, Var<T> images) const;

  // Unrecorded inference on an NCHW batch.
  RawOutputs<T> predict(const ParameterSet<T>& params, const Tensor<T>& images) const;
  RawOutputs<T> predict(const ParameterSet<T>& params, const Image& image) const;

 private:
  void check_input(const Shape& shape) const;

  DetectorConfig config_;
};

// Softmax class probabilities of cell (row, col) of image n: C+1 values.
template <typename T>
std::vector<double> cell_probabilities(const Tensor<T>& logits, std::size_t n, int row, int col);

// Per cell: if the argmax over all C+1 classes is a foreground class and its
// probability is >= threshold, emit a Detection with the decoded, clipped box.
template <typename T>
Detections decode(const RawOutputs<T>& raw, std::size_t n, double score_threshold,
                  const GridGeometry& geometry);

struct GridAssignment {
  int grid = 0;
  int background = 0;
  std::vector<int> target_class;                 // per cell, background when unassigned
  std::vector<std::array<double, 4>> box_target;  // per cell, zeros when unassigned
  std::vector<int> source;                       // index into the labels, -1 when unassigned

  int cell(int row, int col) const { return row * grid + col; }
  int foreground_cells() const;
};

// The cell containing each object's center gets that object; on collisions the
// larger box wins, then the lower label index. Centers outside the image are
// skipped.
GridAssignment assign_targets(const Detections& labels, const GridGeometry& geometry,
                              int num_classes);

struct LossTerms {
  double classification = 0;
  double regression = 0;
  double total() const { return classification + regression; }
};

template <typename T>
struct DetectionLoss {
  Var<T> total;
  LossTerms terms;
};

// Background cells are weighted by max(n_fg / n_bg, 0.05), foreground by 1;
// the classification term is the weighted mean cross-entropy over all cells
// of the batch. Regression (smooth-L1 on assigned cells) only when requested.
template <typename T>
DetectionLoss<T> detection_loss(const DetectorVars<T>& outputs,
                                const std::vector<GridAssignment>& assignments,
                                bool include_regression);

constexpr double kBackgroundWeightFloor = 0.05;

extern template class GridDetector<float>;
extern template class GridDetector<double>;

}  // namespace aat
