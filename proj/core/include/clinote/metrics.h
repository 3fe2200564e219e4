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

#ifndef CLINOTE_METRICS_H_
#define CLINOTE_METRICS_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clinote {

// Ranking metrics take parallel score and {0,1} label sequences of equal,
// nonzero length and throw ContractError otherwise.

// Probability that a random positive outscores a random negative, ties
// counted as one half. Requires both classes.
double Auroc(std::span<const double> scores, std::span<const int> labels);

// Average precision: sum over descending score groups of
// (recall gain) * (precision at the group). Tied scores form one group.
// Requires at least one positive.
double Auprc(std::span<const double> scores, std::span<const int> labels);

// Largest recall over score thresholds whose precision is at least
// `precision_floor`; 0 when no threshold qualifies. Requires a positive.
double RecallAtPrecision(std::span<const double> scores, std::span<const int> labels,
                         double precision_floor = 0.8);

inline double Rp80(std::span<const double> scores, std::span<const int> labels) {
  return RecallAtPrecision(scores, labels, 0.8);
}

// Throws ContractError for a zero vector or mismatched lengths.
double Cosine(std::span<const double> a, std::span<const double> b);

// Product-moment correlation. Requires at least two points and nonzero
// variance in both inputs.
double Pearson(std::span<const double> x, std::span<const double> y);

struct ConceptPair {
  std::string term_a;
  std::string term_b;
  double rating = 0.0;  // physician rating on the 1.0 to 4.0 scale
};

struct ConceptBenchmarkResult {
  double pearson = 0.0;
  std::size_t evaluated = 0;
  std::size_t dropped = 0;
  std::vector<double> similarities;  // cosine per evaluated pair, input order
};

// Returns std::nullopt for a term that cannot be embedded.
using TermEmbedder = std::function<std::optional<std::vector<double>>(std::string_view)>;

// Pearson correlation between ratings and embedding cosines. Pairs with an
// unembeddable term are dropped and counted. Throws ContractError when fewer
// than two pairs remain or a rating is outside [1, 4].
ConceptBenchmarkResult ConceptBenchmark(std::span<const ConceptPair> pairs,
                                        const TermEmbedder& embed);

}  // namespace clinote

#endif  // CLINOTE_METRICS_H_
