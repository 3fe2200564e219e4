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

#ifndef CLINOTE_TENSOR_H_
#define CLINOTE_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace clinote {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace internal {

// One vertex of the computation graph. Leaves have no inputs and no backward
// rule; interior nodes own a closure that reads `grad` and accumulates into
// the grads of `inputs`.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<double>& EnsureGrad();
};

}  // namespace internal

// Dense row-major tensor of doubles with an optional reverse-mode history.
//
// Copies are shallow: two Tensor handles may refer to the same storage.
// Parameters are leaves with requires_grad set; every op applied to them
// records an interior node so that `Backward` can reach them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Full(Shape shape, double value, bool requires_grad = false);
  static Tensor FromValues(Shape shape, std::vector<double> values,
                           bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const double> values() const;
  // Direct write access. Only meaningful for leaves (initialization, optimizer
  // updates); writing an interior node does not invalidate its consumers.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void ZeroGrad();

  // Leaf copy of the current values, detached from any history.
  Tensor Detach(bool requires_grad = false) const;

  // Internal construction for ops.
  static Tensor FromNode(std::shared_ptr<internal::Node> node);
  const std::shared_ptr<internal::Node>& node() const { return node_; }

 private:
  std::shared_ptr<internal::Node> node_;
};

// Ordered record of the interior operations a scalar depends on. Every node
// appears after all of its inputs.
class Tape {
 public:
  static Tape Record(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  std::span<const std::shared_ptr<internal::Node>> nodes() const { return nodes_; }
  bool Contains(const Tensor& t) const;

 private:
  std::vector<std::shared_ptr<internal::Node>> nodes_;
};

// Accumulates d(root)/d(leaf) into every requires_grad leaf reachable from
// `root`. Interior grads are reset on each call; leaf grads add up until
// `ZeroGrads` is called. Throws ContractError unless root is a scalar.
void Backward(const Tensor& root);
void Backward(const Tensor& root, const Tape& tape);

void ZeroGrads(std::span<Tensor> params);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace clinote

#endif  // CLINOTE_TENSOR_H_
