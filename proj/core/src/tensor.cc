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

#include "clinote/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "clinote/error.h"

namespace clinote {

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace internal {

std::vector<double>& Node::EnsureGrad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  return grad;
}

}  // namespace internal

namespace {

void CheckShape(const Shape& shape) {
  for (std::size_t extent : shape) {
    if (extent == 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           ShapeToString(shape));
    }
  }
}

const internal::Node& Deref(const std::shared_ptr<internal::Node>& node) {
  if (!node) throw ContractError("use of an undefined tensor");
  return *node;
}

}  // namespace

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Full(Shape shape, double value, bool requires_grad) {
  CheckShape(shape);
  auto node = std::make_shared<internal::Node>();
  node->values.assign(ShapeSize(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return FromNode(std::move(node));
}

Tensor Tensor::FromValues(Shape shape, std::vector<double> values,
                          bool requires_grad) {
  CheckShape(shape);
  if (ShapeSize(shape) != values.size()) {
    throw DimensionError("shape " + ShapeToString(shape) + " needs " +
                         std::to_string(ShapeSize(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<internal::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return FromNode(std::move(node));
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromValues({1}, {value}, requires_grad);
}

Tensor Tensor::FromNode(std::shared_ptr<internal::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const { return Deref(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         ShapeToString(s));
  }
  return s[axis];
}

std::size_t Tensor::size() const { return Deref(node_).values.size(); }

std::span<const double> Tensor::values() const { return Deref(node_).values; }

std::span<double> Tensor::mutable_values() {
  Deref(node_);
  return node_->values;
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + ShapeToString(shape()));
  }
  return node_->values[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const Shape& s = shape();
  if (s.size() != 2 || row >= s[0] || col >= s[1]) {
    throw DimensionError("at(" + std::to_string(row) + ", " +
                         std::to_string(col) + ") on " + ShapeToString(s));
  }
  return node_->values[row * s[1] + col];
}

bool Tensor::requires_grad() const { return Deref(node_).requires_grad; }

bool Tensor::has_grad() const {
  return Deref(node_).grad.size() == node_->values.size();
}

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  Deref(node_);
  return node_->EnsureGrad();
}

void Tensor::ZeroGrad() {
  Deref(node_);
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::Detach(bool requires_grad) const {
  const internal::Node& n = Deref(node_);
  return FromValues(n.shape, n.values, requires_grad);
}

Tape Tape::Record(const Tensor& root) {
  Tape tape;
  if (!root.defined()) throw ContractError("cannot record an undefined tensor");
  // Iterative post-order DFS; emits a node once all its inputs are emitted.
  std::unordered_set<const internal::Node*> visited;
  std::vector<std::pair<std::shared_ptr<internal::Node>, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next_input] = stack.back();
    if (next_input < node->inputs.size()) {
      std::shared_ptr<internal::Node> child = node->inputs[next_input++];
      if (child->requires_grad && visited.insert(child.get()).second) {
        stack.emplace_back(std::move(child), 0);
      }
      continue;
    }
    if (node->requires_grad) tape.nodes_.push_back(node);
    stack.pop_back();
  }
  return tape;
}

bool Tape::Contains(const Tensor& t) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const auto& n) { return n == t.node(); });
}

void Backward(const Tensor& root) { Backward(root, Tape::Record(root)); }

void Backward(const Tensor& root, const Tape& tape) {
  if (!root.defined() || root.size() != 1) {
    throw ContractError("backward requires a scalar root, got shape " +
                        (root.defined() ? ShapeToString(root.shape())
                                        : std::string("<undefined>")));
  }
  if (!root.requires_grad()) return;
  auto nodes = tape.nodes();
  if (nodes.empty() || nodes.back() != root.node()) {
    throw ContractError("tape does not end at the backward root");
  }
  for (const auto& node : nodes) {
    if (node->backward) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  root.node()->EnsureGrad()[0] += 1.0;
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    internal::Node& node = **it;
    if (node.backward && !node.grad.empty()) node.backward(node);
  }
}

void ZeroGrads(std::span<Tensor> params) {
  for (Tensor& p : params) p.ZeroGrad();
}

}  // namespace clinote
