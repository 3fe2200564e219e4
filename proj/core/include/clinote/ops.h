/*
 * Copyright 2026 The clinote Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CLINOTE_OPS_H_
#define CLINOTE_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "clinote/rng.h"
#include "clinote/tensor.h"

namespace clinote {

// Additive pre-softmax value for masked key columns.
inline constexpr double kMaskSentinel = -1e9;

// Elementwise a + b. `b` may also be a rank-1 tensor matching the last extent
// of `a`, in which case it is broadcast over the leading axes (bias add).
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double factor);

// [m,k] x [k,n] -> [m,n].
Tensor MatMul(const Tensor& a, const Tensor& b);
// [m,k] x [n,k]^T -> [m,n], without materializing the transpose.
Tensor MatMulTransposed(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);
Tensor Reshape(const Tensor& a, Shape shape);

// Half-open row/column ranges of a rank-2 tensor.
Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor SliceCols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor ConcatRows(std::span<const Tensor> parts);
Tensor ConcatCols(std::span<const Tensor> parts);

// Row lookup: out[i] = table[ids[i]]. Backward scatter-adds into the table.
Tensor GatherRows(const Tensor& table, std::span<const std::size_t> ids);

// Row-wise softmax with max subtraction. A row whose entries all sit at or
// below half the mask sentinel is rejected: the caller must leave at least
// one position unmasked.
Tensor SoftmaxRows(const Tensor& x);

// Normalizes over the last axis then applies gain and bias, both [d].
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps);

// Exact (erf) GELU.
Tensor Gelu(const Tensor& x);
Tensor Relu(const Tensor& x);
Tensor Sigmoid(const Tensor& x);

// Inverted dropout: kept entries are scaled by 1/(1-rate). The mask is drawn
// from `stream`. rate == 0 returns `x` unchanged.
Tensor Dropout(const Tensor& x, double rate, Rng& stream);

Tensor Sum(const Tensor& x);
Tensor Mean(const Tensor& x);

// Mean over rows of -log softmax(logits[i])[targets[i]].
Tensor CrossEntropyRows(const Tensor& logits,
                        std::span<const std::size_t> targets);
// Mean binary cross-entropy of sigmoid(logits) against labels in [0,1].
Tensor BinaryCrossEntropyWithLogits(const Tensor& logits,
                                    std::span<const double> labels);

double SigmoidScalar(double x);

}  // namespace clinote

#endif  // CLINOTE_OPS_H_
