#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "aat/autograd.hpp"

// Differentiable primitives. Every function records one node on the tape of
// its first argument. Layout is NCHW for images and feature maps.
namespace aat::ops {

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, T factor);

template <typename T>
Var<T> relu(Var<T> x);

// x: [N,C,H,W], weight: [O,C,K,K], bias: [O] -> [N,O,Ho,Wo]
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, int stride, int padding);

// Non-overlapping max pooling with window = stride = `window`.
template <typename T>
Var<T> max_pool2d(Var<T> x, int window);

// x: [N,F], weight: [O,F], bias: [O] -> [N,O]
template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias);

// [N, ...] -> [N, prod(...)]
template <typename T>
Var<T> flatten(Var<T> x);

// Spatial flatten [N,C,H,W] -> [N*H*W, C]; row index is (n*H + h)*W + w.
template <typename T>
Var<T> to_rows(Var<T> x);

// Concatenation along axis 0.
template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts);

template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> mean(Var<T> x);

// Identity forward; the backward pass multiplies the incoming gradient by -lambda.
template <typename T>
Var<T> gradient_reversal(Var<T> x, T lambda);

// Weighted softmax cross-entropy over rows of logits [R,K]:
//   sum_r w_r * CE(logits_r, target_r) / normalizer
// Rows with weight 0 contribute nothing. normalizer must be > 0.
template <typename T>
Var<T> softmax_cross_entropy(Var<T> logits, const std::vector<int>& targets,
                             const std::vector<T>& weights, T normalizer);

// Mean binary cross-entropy on logits of any shape; targets in [0,1].
template <typename T>
Var<T> binary_cross_entropy_with_logits(Var<T> logits, const std::vector<T>& targets);

// Smooth-L1 (beta = 1) between pred [R,D] and target [R,D] over rows whose
// mask is set, summed over D and divided by normalizer.
template <typename T>
Var<T> smooth_l1(Var<T> pred, const Tensor<T>& target, const std::vector<std::uint8_t>& mask,
                 T normalizer);

// Row-wise softmax of a [R,K] tensor (not recorded).
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

}  // namespace aat::ops
