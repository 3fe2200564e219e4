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

#include "clinote/baselines.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "clinote/error.h"
#include "clinote/ops.h"

namespace clinote {
namespace {

double LogisticLoss(double logit, int label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

// Largest eigenvalue of A^T A / m for A = [X, 1], by power iteration.
double GramSpectralNorm(const Tensor& x) {
  const std::size_t m = x.dim(0), n = x.dim(1);
  const auto a = x.values();
  std::vector<double> v(n + 1, 1.0 / std::sqrt(static_cast<double>(n + 1)));
  std::vector<double> av(m), next(n + 1);
  double lambda = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = v[n];
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * v[j];
      av[i] = s;
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) next[j] += a[i * n + j] * av[i];
      next[n] += av[i];
    }
    double norm = 0.0;
    for (double t : next) norm += t * t;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    const double estimate = norm / static_cast<double>(m);
    for (std::size_t j = 0; j <= n; ++j) v[j] = next[j] / norm;
    if (std::abs(estimate - lambda) <= 1e-9 * estimate) return estimate;
    lambda = estimate;
  }
  return lambda;
}

}  // namespace

std::vector<std::string> BowWords(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) && u < 0x80) {
      current += static_cast<char>(std::tolower(u));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

BowFeaturizer BowFeaturizer::Build(std::span<const std::string> training_texts,
                                   std::size_t max_words) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const std::string& text : training_texts) {
    for (std::string& w : BowWords(text)) ++counts[std::move(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_words) ranked.resize(max_words);
  BowFeaturizer f;
  for (auto& [word, count] : ranked) {
    f.index_.emplace(word, f.words_.size());
    f.words_.push_back(std::move(word));
  }
  return f;
}

std::optional<std::size_t> BowFeaturizer::Index(std::string_view word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseCounts BowFeaturizer::Featurize(std::string_view text) const {
  std::map<std::size_t, double> counts;
  for (const std::string& w : BowWords(text)) {
    if (auto col = Index(w)) counts[*col] += 1.0;
  }
  return SparseCounts(counts.begin(), counts.end());
}

Tensor DenseFeatures(std::span<const SparseCounts> rows, std::size_t cols) {
  std::vector<double> values(rows.size() * cols, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [col, count] : rows[r]) {
      if (col >= cols) throw DimensionError("feature column outside the matrix");
      values[r * cols + col] = count;
    }
  }
  return Tensor::FromValues({rows.size(), cols}, std::move(values));
}

double LogRegModel::Logit(const SparseCounts& x) const {
  double z = bias;
  for (const auto& [col, count] : x) z += weights.at(col) * count;
  return z;
}

double LogRegModel::Predict(const SparseCounts& x) const { return SigmoidScalar(Logit(x)); }

LogRegModel TrainLogReg(std::span<const SparseCounts> features, std::span<const int> labels,
                        std::size_t num_features, const LogRegOptions& options) {
  if (features.size() != labels.size()) throw ContractError("features and labels differ in count");
  std::size_t positives = 0;
  for (int y : labels) positives += y == 1 ? 1 : 0;
  if (positives == 0 || positives == labels.size()) {
    throw ContractError("logistic regression needs both classes");
  }
  if (options.l2 < 0.0) throw ContractError("l2 strength must be nonnegative");

  const Tensor x = DenseFeatures(features, num_features);
  const std::vector<double> y(labels.begin(), labels.end());
  // Proximal gradient: a gradient step on the cross-entropy, then the exact
  // proximal map of the penalty, so the step size does not shrink with l2.
  double step = options.step_size;
  if (step <= 0.0) step = 1.0 / (0.25 * GramSpectralNorm(x));
  const double shrink = 1.0 / (1.0 + 2.0 * options.l2 * step);

  std::vector<double> w0 = options.initial_weights;
  if (w0.empty()) w0.assign(num_features, 0.0);
  if (w0.size() != num_features) throw ContractError("initial weights have the wrong size");
  Tensor w = Tensor::FromValues({num_features, 1}, std::move(w0), true);
  Tensor b = Tensor::Zeros({1}, true);

  LogRegModel model;
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const Tensor data_loss = BinaryCrossEntropyWithLogits(Add(MatMul(x, w), b), y);
    Backward(data_loss);
    const auto wv = w.mutable_values();
    const auto wg = w.grad();
    double penalty = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < wv.size(); ++j) {
      penalty += wv[j] * wv[j];
      const double g = wg[j] + 2.0 * options.l2 * wv[j];
      norm += g * g;
    }
    norm += b.grad()[0] * b.grad()[0];
    model.objective.push_back(data_loss.item() + options.l2 * penalty);
    model.gradient_norm = std::sqrt(norm);
    model.iterations = iter;
    if (model.gradient_norm < options.tolerance) {
      model.converged = true;
      break;
    }
    for (std::size_t j = 0; j < wv.size(); ++j) wv[j] = (wv[j] - step * wg[j]) * shrink;
    b.mutable_values()[0] -= step * b.grad()[0];
    w.ZeroGrad();
    b.ZeroGrad();
    model.iterations = iter + 1;
  }
  if (!model.converged) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "logistic regression stopped after %zu iterations with gradient norm %.3g",
                  model.iterations, model.gradient_norm);
    model.warning = buf;
  }
  const auto wv = w.values();
  model.weights.assign(wv.begin(), wv.end());
  model.bias = b.item();
  return model;
}

double LogRegLoss(const LogRegModel& model, std::span<const SparseCounts> features,
                  std::span<const int> labels) {
  if (features.empty() || features.size() != labels.size()) {
    throw ContractError("loss needs matching, non-empty features and labels");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    loss += LogisticLoss(model.Logit(features[i]), labels[i]);
  }
  return loss / static_cast<double>(features.size());
}

std::vector<double> DefaultL2Grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1}; }

L2Selection SelectL2(std::span<const SparseCounts> train_x, std::span<const int> train_y,
                     std::span<const SparseCounts> val_x, std::span<const int> val_y,
                     std::size_t num_features, std::span<const double> grid,
                     LogRegOptions options) {
  if (grid.empty()) throw ContractError("l2 grid is empty");
  L2Selection best;
  double best_loss = INFINITY;
  for (double l2 : grid) {
    options.l2 = l2;
    LogRegModel model = TrainLogReg(train_x, train_y, num_features, options);
    const double loss = LogRegLoss(model, val_x, val_y);
    best.validation_loss.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best.l2 = l2;
      best.model = std::move(model);
    }
  }
  return best;
}

}  // namespace clinote
