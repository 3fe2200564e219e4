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

#include "clinote/ops.h"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "clinote/error.h"

namespace clinote {
namespace {

using internal::Node;
using BackwardFn = std::function<void(Node&)>;

Tensor MakeResult(Shape shape, std::vector<double> values, const char* op,
                  std::initializer_list<const Tensor*> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = op;
  for (const Tensor* in : inputs) {
    if (in->requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Tensor* in : inputs) node->inputs.push_back(in->node());
    node->backward = std::move(backward);
  }
  return Tensor::FromNode(std::move(node));
}

Tensor MakeResultN(Shape shape, std::vector<double> values, const char* op,
                   std::span<const Tensor> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = op;
  for (const Tensor& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Tensor& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor::FromNode(std::move(node));
}

// Grad buffer of input i, or nullptr when that input needs no gradient.
std::vector<double>* InputGrad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? &in.EnsureGrad() : nullptr;
}

[[noreturn]] void ThrowShapes(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       ShapeToString(a.shape()) + " and " +
                       ShapeToString(b.shape()));
}

void RequireRank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " +
                         ShapeToString(a.shape()));
  }
}

template <typename Fwd, typename Deriv>
Tensor Unary(const Tensor& x, const char* op, Fwd fwd, Deriv deriv) {
  std::vector<double> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return MakeResult(x.shape(), std::move(out), op, {&x}, [deriv](Node& self) {
    auto* gx = InputGrad(self, 0);
    const auto& xin = self.inputs[0]->values;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      (*gx)[i] += self.grad[i] * deriv(xin[i], self.values[i]);
    }
  });
}

}  // namespace

double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor Add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.values().begin(), a.values().end());
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return MakeResult(a.shape(), std::move(out), "add", {&a, &b}, [](Node& self) {
      for (std::size_t k = 0; k < 2; ++k) {
        if (auto* g = InputGrad(self, k)) {
          for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
        }
      }
    });
  }
  if (b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0)) {
    const std::size_t width = b.dim(0);
    std::vector<double> out(a.values().begin(), a.values().end());
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % width];
    return MakeResult(a.shape(), std::move(out), "add_broadcast", {&a, &b},
                      [width](Node& self) {
                        if (auto* ga = InputGrad(self, 0)) {
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            (*ga)[i] += self.grad[i];
                        }
                        if (auto* gb = InputGrad(self, 1)) {
                          for (std::size_t i = 0; i < self.grad.size(); ++i)
                            (*gb)[i % width] += self.grad[i];
                        }
                      });
  }
  ThrowShapes("add", a, b);
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) ThrowShapes("sub", a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return MakeResult(a.shape(), std::move(out), "sub", {&a, &b}, [](Node& self) {
    if (auto* ga = InputGrad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
    }
    if (auto* gb = InputGrad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[i] -= self.grad[i];
    }
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) ThrowShapes("mul", a, b);
  std::vector<double> out(a.size());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return MakeResult(a.shape(), std::move(out), "mul", {&a, &b}, [](Node& self) {
    const auto& av = self.inputs[0]->values;
    const auto& bv = self.inputs[1]->values;
    if (auto* ga = InputGrad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] * bv[i];
    }
    if (auto* gb = InputGrad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[i] += self.grad[i] * av[i];
    }
  });
}

Tensor Scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= factor;
  return MakeResult(a.shape(), std::move(out), "scale", {&a}, [factor](Node& self) {
    auto* g = InputGrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i] * factor;
  });
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) ThrowShapes("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = &out[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return MakeResult({m, n}, std::move(out), "matmul", {&a, &b}, [m, k, n](Node& self) {
    const auto& av = self.inputs[0]->values;
    const auto& bv = self.inputs[1]->values;
    const auto& gc = self.grad;
    if (auto* ga = InputGrad(self, 0)) {
      // dA = dC . B^T
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &gc[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = &bv[p * n];
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          (*ga)[i * k + p] += acc;
        }
      }
    }
    if (auto* gb = InputGrad(self, 1)) {
      // dB = A^T . dC
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &gc[i * n];
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = &(*gb)[p * n];
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor MatMulTransposed(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    ThrowShapes("matmul_transposed", a, b);
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  std::vector<double> out(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = &av[i * k];
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = &bv[j * k];
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      out[i * n + j] = acc;
    }
  }
  return MakeResult({m, n}, std::move(out), "matmul_transposed", {&a, &b},
                    [m, k, n](Node& self) {
                      const auto& av = self.inputs[0]->values;
                      const auto& bv = self.inputs[1]->values;
                      const auto& gc = self.grad;
                      auto* ga = InputGrad(self, 0);
                      auto* gb = InputGrad(self, 1);
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t j = 0; j < n; ++j) {
                          const double g = gc[i * n + j];
                          if (g == 0.0) continue;
                          if (ga) {
                            double* garow = &(*ga)[i * k];
                            const double* brow = &bv[j * k];
                            for (std::size_t p = 0; p < k; ++p) garow[p] += g * brow[p];
                          }
                          if (gb) {
                            double* gbrow = &(*gb)[j * k];
                            const double* arow = &av[i * k];
                            for (std::size_t p = 0; p < k; ++p) gbrow[p] += g * arow[p];
                          }
                        }
                      }
                    });
}

Tensor Transpose(const Tensor& a) {
  RequireRank2("transpose", a);
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return MakeResult({n, m}, std::move(out), "transpose", {&a}, [m, n](Node& self) {
    auto* g = InputGrad(self, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) (*g)[i * n + j] += self.grad[j * m + i];
  });
}

Tensor Reshape(const Tensor& a, Shape shape) {
  if (ShapeSize(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + ShapeToString(a.shape()) +
                         " as " + ShapeToString(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return MakeResult(std::move(shape), std::move(out), "reshape", {&a}, [](Node& self) {
    auto* g = InputGrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) (*g)[i] += self.grad[i];
  });
}

Tensor SliceRows(const Tensor& a, std::size_t begin, std::size_t end) {
  RequireRank2("slice_rows", a);
  const std::size_t cols = a.dim(1);
  if (begin >= end || end > a.dim(0)) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " +
                         ShapeToString(a.shape()));
  }
  auto av = a.values();
  std::vector<double> out(av.begin() + begin * cols, av.begin() + end * cols);
  return MakeResult({end - begin, cols}, std::move(out), "slice_rows", {&a},
                    [begin, cols](Node& self) {
                      auto* g = InputGrad(self, 0);
                      for (std::size_t i = 0; i < self.grad.size(); ++i)
                        (*g)[begin * cols + i] += self.grad[i];
                    });
}

Tensor SliceCols(const Tensor& a, std::size_t begin, std::size_t end) {
  RequireRank2("slice_cols", a);
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (begin >= end || end > cols) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " +
                         ShapeToString(a.shape()));
  }
  const std::size_t width = end - begin;
  std::vector<double> out(rows * width);
  auto av = a.values();
  for (std::size_t i = 0; i < rows; ++i)
    std::copy_n(&av[i * cols + begin], width, &out[i * width]);
  return MakeResult({rows, width}, std::move(out), "slice_cols", {&a},
                    [rows, cols, begin, width](Node& self) {
                      auto* g = InputGrad(self, 0);
                      for (std::size_t i = 0; i < rows; ++i)
                        for (std::size_t j = 0; j < width; ++j)
                          (*g)[i * cols + begin + j] += self.grad[i * width + j];
                    });
}

Tensor ConcatRows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = parts[0].dim(1);
  std::size_t rows = 0;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    RequireRank2("concat_rows", p);
    if (p.dim(1) != cols) ThrowShapes("concat_rows", parts[0], p);
    offsets.push_back(rows * cols);
    rows += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return MakeResultN({rows, cols}, std::move(out), "concat_rows", parts,
                     [offsets](Node& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         if (auto* g = InputGrad(self, k)) {
                           for (std::size_t i = 0; i < g->size(); ++i)
                             (*g)[i] += self.grad[offsets[k] + i];
                         }
                       }
                     });
}

Tensor ConcatCols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts[0].dim(0);
  std::size_t cols = 0;
  std::vector<std::size_t> offsets, widths;
  for (const Tensor& p : parts) {
    RequireRank2("concat_cols", p);
    if (p.dim(0) != rows) ThrowShapes("concat_cols", parts[0], p);
    offsets.push_back(cols);
    widths.push_back(p.dim(1));
    cols += p.dim(1);
  }
  std::vector<double> out(rows * cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pv = parts[k].values();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy_n(&pv[i * widths[k]], widths[k], &out[i * cols + offsets[k]]);
  }
  return MakeResultN({rows, cols}, std::move(out), "concat_cols", parts,
                     [rows, cols, offsets, widths](Node& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         auto* g = InputGrad(self, k);
                         if (!g) continue;
                         for (std::size_t i = 0; i < rows; ++i)
                           for (std::size_t j = 0; j < widths[k]; ++j)
                             (*g)[i * widths[k] + j] += self.grad[i * cols + offsets[k] + j];
                       }
                     });
}

Tensor GatherRows(const Tensor& table, std::span<const std::size_t> ids) {
  RequireRank2("gather_rows", table);
  if (ids.empty()) throw DimensionError("gather_rows: empty index list");
  const std::size_t rows = table.dim(0), cols = table.dim(1);
  std::vector<double> out(ids.size() * cols);
  auto tv = table.values();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(ids[i]) +
                           " out of range for " + ShapeToString(table.shape()));
    }
    std::copy_n(&tv[ids[i] * cols], cols, &out[i * cols]);
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return MakeResult({ids.size(), cols}, std::move(out), "gather_rows", {&table},
                    [idx = std::move(idx), cols](Node& self) {
                      auto* g = InputGrad(self, 0);
                      for (std::size_t i = 0; i < idx.size(); ++i)
                        for (std::size_t j = 0; j < cols; ++j)
                          (*g)[idx[i] * cols + j] += self.grad[i * cols + j];
                    });
}

Tensor SoftmaxRows(const Tensor& x) {
  RequireRank2("softmax_rows", x);
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(rows * cols);
  auto xv = x.values();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = &xv[i * cols];
    const double mx = *std::max_element(row, row + cols);
    if (mx <= kMaskSentinel / 2) {
      throw ContractError("softmax_rows: row " + std::to_string(i) +
                          " has every position masked");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = std::exp(row[j] - mx);
      total += out[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] /= total;
  }
  return MakeResult({rows, cols}, std::move(out), "softmax_rows", {&x},
                    [rows, cols](Node& self) {
                      auto* g = InputGrad(self, 0);
                      for (std::size_t i = 0; i < rows; ++i) {
                        const double* y = &self.values[i * cols];
                        const double* gy = &self.grad[i * cols];
                        double dot = 0.0;
                        for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
                        for (std::size_t j = 0; j < cols; ++j)
                          (*g)[i * cols + j] += y[j] * (gy[j] - dot);
                      }
                    });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: rank-0 input");
  const std::size_t d = x.shape().back();
  if (d == 0) throw DimensionError("layer_norm: last extent is zero");
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/bias " + ShapeToString(gain.shape()) +
                         "/" + ShapeToString(bias.shape()) + " do not match input " +
                         ShapeToString(x.shape()));
  }
  const std::size_t rows = x.size() / d;
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  // xhat and 1/sigma per row are kept for the backward pass.
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = &xv[r * d];
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (row[j] - mean) * inv_std[r];
      out[r * d + j] = xhat[r * d + j] * gv[j] + bv[j];
    }
  }
  return MakeResult(
      x.shape(), std::move(out), "layer_norm", {&x, &gain, &bias},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), rows, d](Node& self) {
        const auto& gv = self.inputs[1]->values;
        auto* gx = InputGrad(self, 0);
        auto* gg = InputGrad(self, 1);
        auto* gb = InputGrad(self, 2);
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gy = &self.grad[r * d];
          const double* xh = &xhat[r * d];
          double sum_dxh = 0.0, sum_dxh_xh = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dxh = gy[j] * gv[j];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[j];
            if (gg) (*gg)[j] += gy[j] * xh[j];
            if (gb) (*gb)[j] += gy[j];
          }
          if (gx) {
            for (std::size_t j = 0; j < d; ++j) {
              const double dxh = gy[j] * gv[j];
              (*gx)[r * d + j] +=
                  inv_std[r] * (dxh - inv_d * sum_dxh - xh[j] * inv_d * sum_dxh_xh);
            }
          }
        }
      });
}

Tensor Gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return Unary(
      x, "gelu",
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [inv_sqrt_2pi](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        return cdf + v * pdf;
      });
}

Tensor Relu(const Tensor& x) {
  return Unary(
      x, "relu", [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(
      x, "sigmoid", [](double v) { return SigmoidScalar(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor Dropout(const Tensor& x, double rate, Rng& stream) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (double& m : mask) m = stream.Uniform() < rate ? 0.0 : keep_scale;
  std::vector<double> out(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
  return MakeResult(x.shape(), std::move(out), "dropout", {&x},
                    [mask = std::move(mask)](Node& self) {
                      auto* g = InputGrad(self, 0);
                      for (std::size_t i = 0; i < mask.size(); ++i)
                        (*g)[i] += self.grad[i] * mask[i];
                    });
}

Tensor Sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return MakeResult({1}, {total}, "sum", {&x}, [](Node& self) {
    auto* g = InputGrad(self, 0);
    for (double& v : *g) v += self.grad[0];
  });
}

Tensor Mean(const Tensor& x) {
  return Scale(Sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor CrossEntropyRows(const Tensor& logits, std::span<const std::size_t> targets) {
  RequireRank2("cross_entropy_rows", logits);
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) +
                         " targets for " + ShapeToString(logits.shape()));
  }
  auto lv = logits.values();
  std::vector<double> probs(rows * cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (targets[i] >= cols) {
      throw DimensionError("cross_entropy_rows: target " + std::to_string(targets[i]) +
                           " out of range for " + std::to_string(cols) + " classes");
    }
    const double* row = &lv[i * cols];
    const double mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      probs[i * cols + j] = std::exp(row[j] - mx);
      total += probs[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) probs[i * cols + j] /= total;
    loss += -(row[targets[i]] - mx - std::log(total));
  }
  loss /= static_cast<double>(rows);
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return MakeResult({1}, {loss}, "cross_entropy_rows", {&logits},
                    [probs = std::move(probs), tgt = std::move(tgt), rows, cols](Node& self) {
                      auto* g = InputGrad(self, 0);
                      const double scale = self.grad[0] / static_cast<double>(rows);
                      for (std::size_t i = 0; i < rows; ++i) {
                        for (std::size_t j = 0; j < cols; ++j) {
                          const double target = j == tgt[i] ? 1.0 : 0.0;
                          (*g)[i * cols + j] += scale * (probs[i * cols + j] - target);
                        }
                      }
                    });
}

Tensor BinaryCrossEntropyWithLogits(const Tensor& logits, std::span<const double> labels) {
  if (logits.size() != labels.size()) {
    throw DimensionError("binary_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + ShapeToString(logits.shape()));
  }
  auto zv = logits.values();
  double loss = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    // max(z,0) - z*y + log(1 + exp(-|z|))
    const double z = zv[i];
    loss += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  const std::size_t n = zv.size();
  loss /= static_cast<double>(n);
  std::vector<double> y(labels.begin(), labels.end());
  return MakeResult({1}, {loss}, "binary_cross_entropy", {&logits},
                    [y = std::move(y), n](Node& self) {
                      auto* g = InputGrad(self, 0);
                      const auto& z = self.inputs[0]->values;
                      const double scale = self.grad[0] / static_cast<double>(n);
                      for (std::size_t i = 0; i < n; ++i)
                        (*g)[i] += scale * (SigmoidScalar(z[i]) - y[i]);
                    });
}

}  // namespace clinote
