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

#include "clinote/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "clinote/error.h"

namespace clinote {
namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts CheckScored(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("scores and labels differ in length (" + std::to_string(scores.size()) +
                        " vs " + std::to_string(labels.size()) + ")");
  }
  if (scores.empty()) throw ContractError("metric needs at least one scored example");
  Counts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ContractError("labels must be 0 or 1");
    if (std::isnan(scores[i])) throw ContractError("score is NaN");
    (labels[i] == 1 ? c.positives : c.negatives)++;
  }
  return c;
}

// Indices ordered by descending score.
std::vector<std::size_t> DescendingOrder(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Calls visit(tp, fp) after each group of tied scores, in descending order.
template <typename Visit>
void ForEachThreshold(std::span<const double> scores, std::span<const int> labels,
                      Visit visit) {
  const std::vector<std::size_t> order = DescendingOrder(scores);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] == 1 ? tp : fp)++;
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) visit(tp, fp);
  }
}

}  // namespace

double Auroc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = CheckScored(scores, labels);
  if (c.positives == 0 || c.negatives == 0) {
    throw ContractError("AUROC needs both classes");
  }
  // Mann-Whitney with midranks; the doubled statistic stays integral.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j share the midrank (i+1+j)/2.
    const double twice_midrank = static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) twice_rank_sum += twice_midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(c.positives);
  const double twice_u = twice_rank_sum - p * (p + 1.0);
  return (twice_u / 2.0) / (p * static_cast<double>(c.negatives));
}

double Auprc(std::span<const double> scores, std::span<const int> labels) {
  const Counts c = CheckScored(scores, labels);
  if (c.positives == 0) throw ContractError("AUPRC needs at least one positive");
  const double total = static_cast<double>(c.positives);
  double ap = 0.0;
  std::size_t prev_tp = 0;
  ForEachThreshold(scores, labels, [&](std::size_t tp, std::size_t fp) {
    if (tp == prev_tp) return;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (static_cast<double>(tp - prev_tp) / total) * precision;
    prev_tp = tp;
  });
  return ap;
}

double RecallAtPrecision(std::span<const double> scores, std::span<const int> labels,
                         double precision_floor) {
  const Counts c = CheckScored(scores, labels);
  if (c.positives == 0) throw ContractError("recall at precision needs at least one positive");
  double best = 0.0;
  ForEachThreshold(scores, labels, [&](std::size_t tp, std::size_t fp) {
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (precision >= precision_floor) {
      best = std::max(best, static_cast<double>(tp) / static_cast<double>(c.positives));
    }
  });
  return best;
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ContractError("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("pearson inputs differ in length");
  if (x.size() < 2) throw ContractError("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ContractError("pearson input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ConceptBenchmarkResult ConceptBenchmark(std::span<const ConceptPair> pairs,
                                        const TermEmbedder& embed) {
  ConceptBenchmarkResult result;
  std::vector<double> ratings;
  for (const ConceptPair& pair : pairs) {
    if (!(pair.rating >= 1.0 && pair.rating <= 4.0)) {
      throw ContractError("rating for (" + pair.term_a + ", " + pair.term_b +
                          ") is outside [1, 4]");
    }
    const std::optional<std::vector<double>> a = embed(pair.term_a);
    const std::optional<std::vector<double>> b = embed(pair.term_b);
    if (!a || !b) {
      ++result.dropped;
      continue;
    }
    result.similarities.push_back(Cosine(*a, *b));
    ratings.push_back(pair.rating);
  }
  result.evaluated = ratings.size();
  if (result.evaluated < 2) {
    throw ContractError("concept benchmark has " + std::to_string(result.evaluated) +
                        " evaluable pairs, needs at least 2");
  }
  result.pearson = Pearson(ratings, result.similarities);
  return result;
}

}  // namespace clinote
