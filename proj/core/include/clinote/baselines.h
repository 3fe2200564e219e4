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

#ifndef CLINOTE_BASELINES_H_
#define CLINOTE_BASELINES_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clinote/tensor.h"

namespace clinote {

// (column, count) pairs in increasing column order.
using SparseCounts = std::vector<std::pair<std::size_t, double>>;

// Words are maximal runs of ASCII letters and digits, lowercased.
std::vector<std::string> BowWords(std::string_view text);

class BowFeaturizer {
 public:
  static constexpr std::size_t kDefaultMaxWords = 5000;

  // Keeps the `max_words` most frequent words of the training texts; equal
  // counts are ordered lexicographically. Columns follow that ranking.
  static BowFeaturizer Build(std::span<const std::string> training_texts,
                             std::size_t max_words = kDefaultMaxWords);

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> Index(std::string_view word) const;

  // Raw counts of in-vocabulary words.
  SparseCounts Featurize(std::string_view text) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Dense [rows, cols] tensor built from sparse rows.
Tensor DenseFeatures(std::span<const SparseCounts> rows, std::size_t cols);

struct LogRegOptions {
  double l2 = 1e-2;
  // Zero selects 1/L from the cross-entropy's Lipschitz bound.
  double step_size = 0.0;
  std::size_t max_iterations = 5000;
  double tolerance = 1e-6;  // on the gradient norm
  // Starting weights; empty means zeros. The bias starts at 0.
  std::vector<double> initial_weights;
};

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::string warning;             // set when max_iterations was reached
  std::vector<double> objective;  // per iteration, before the update

  double Logit(const SparseCounts& x) const;
  double Predict(const SparseCounts& x) const;
};

// Minimizes mean binary cross-entropy + l2 * ||w||^2 (the bias is not
// penalized) by proximal gradient descent. Throws ContractError when a class
// is missing.
LogRegModel TrainLogReg(std::span<const SparseCounts> features, std::span<const int> labels,
                        std::size_t num_features, const LogRegOptions& options = {});

// Mean binary cross-entropy of a fitted model.
double LogRegLoss(const LogRegModel& model, std::span<const SparseCounts> features,
                  std::span<const int> labels);

// Log-spaced l2 grid 1e-4 .. 1e1, one value per decade.
std::vector<double> DefaultL2Grid();

struct L2Selection {
  double l2 = 0.0;
  LogRegModel model;
  std::vector<double> validation_loss;  // per grid value
};

// Fits every grid value on the training split and keeps the lowest
// validation loss; ties keep the earlier grid value.
L2Selection SelectL2(std::span<const SparseCounts> train_x, std::span<const int> train_y,
                     std::span<const SparseCounts> val_x, std::span<const int> val_y,
                     std::size_t num_features, std::span<const double> grid,
                     LogRegOptions options = {});

}  // namespace clinote

#endif  // CLINOTE_BASELINES_H_
