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

#ifndef CLINOTE_PRETRAIN_H_
#define CLINOTE_PRETRAIN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clinote/encoder.h"
#include "clinote/rng.h"
#include "clinote/tensor.h"
#include "clinote/tokenizer.h"

namespace clinote {

struct MaskingOptions {
  double select_rate = 0.15;
  // Of the selected positions: replaced by [MASK], by a random token, or
  // left unchanged with the remaining probability.
  double mask_fraction = 0.8;
  double random_fraction = 0.1;
};

struct PretrainExample {
  TokenSequence sequence;
  // Masked positions in increasing order and their original ids.
  std::vector<std::size_t> masked_positions;
  std::vector<TokenId> targets;
  int is_next = 0;
};

// Output-side parameters of the two pre-training tasks. The MLM decoder
// reuses the token embedding matrix and only adds a bias.
struct PretrainHeads {
  Tensor mlm_bias;     // [vocab_size]
  Tensor nsp_weight;   // [model_dim, 1]
  Tensor nsp_bias;     // [1]

  static PretrainHeads Initialize(const EncoderConfig& config, Rng& rng);
  static PretrainHeads FromNamed(const EncoderConfig& config,
                                 std::span<const NamedTensor> tensors);
  std::vector<NamedTensor> Named() const;
  std::vector<Tensor> Parameters() const;
  PretrainHeads Clone() const;
};

// Greedily packs whole sentences into segments of at most `max_len` tokens.
// A sentence longer than `max_len` is truncated and fills a segment alone.
std::vector<std::vector<TokenId>> PackSequences(
    std::span<const std::vector<TokenId>> sentences, std::size_t max_len);

struct NspPair {
  std::size_t first = 0;
  std::size_t second = 0;
  int is_next = 0;
};

// With probability 1/2 pairs `anchor` with its successor; otherwise with a
// uniformly drawn segment that is neither the successor nor the anchor
// itself (the anchor is allowed only when nothing else remains).
// Requires anchor + 1 < num_segments.
NspPair DrawNspPair(std::size_t anchor, std::size_t num_segments, Rng& rng);
// One pair per anchor 0..num_segments-2.
std::vector<NspPair> MakeNspPairs(std::size_t num_segments, Rng& rng);

// Selects each non-special position with probability select_rate, forcing at
// least one selection, and applies the 80/10/10 replacement rule.
PretrainExample MaskTokens(const TokenSequence& seq, std::size_t vocab_size, Rng& rng,
                           const MaskingOptions& options = {});

struct PretrainLoss {
  Tensor total;  // mlm + nsp
  Tensor mlm;    // mean cross-entropy over masked positions
  Tensor nsp;    // binary cross-entropy of the is_next logit
  std::size_t mlm_correct = 0;
  std::size_t mlm_count = 0;
  bool nsp_correct = false;
};

PretrainLoss ComputePretrainLoss(const PretrainExample& example, const EncoderOutput& output,
                                 const EncoderParams& params, const PretrainHeads& heads);

struct PretrainStage {
  std::size_t max_seq_len = 128;
  std::size_t num_steps = 1000;
  std::size_t batch_size = 16;
};

struct PretrainSchedule {
  std::vector<PretrainStage> stages;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t eval_interval = 100;
  std::size_t eval_examples = 256;
  // Tail fraction of packed segments held out for evaluation. Zero evaluates
  // on the training segments.
  double holdout_fraction = 0.1;
  double max_grad_norm = 1.0;
  MaskingOptions masking;

  // Stages must be non-empty with nondecreasing max_seq_len.
  void Validate() const;
};

struct PretrainMetrics {
  std::size_t step = 0;
  double mlm_accuracy = 0.0;
  double nsp_accuracy = 0.0;
  double loss = 0.0;  // mean training loss since the previous row
};

struct PretrainResult {
  EncoderParams params;
  PretrainHeads heads;
  std::vector<PretrainMetrics> log;
  std::vector<double> step_losses;
  bool diverged = false;
};

struct TaskAccuracy {
  double mlm_accuracy = 0.0;
  double nsp_accuracy = 0.0;
  double mean_loss = 0.0;
};

// Builds `count` masked NSP examples from consecutive-segment pairs.
std::vector<PretrainExample> MakePretrainExamples(
    std::span<const std::vector<TokenId>> segments, std::size_t count, std::size_t max_seq_len,
    std::size_t vocab_size, Rng& rng, const MaskingOptions& masking = {});

TaskAccuracy EvaluatePretraining(std::span<const PretrainExample> examples,
                                 const EncoderParams& params, const PretrainHeads& heads,
                                 const EncoderConfig& config);

// Staged MLM + NSP training with Adam. `sentences` are tokenized sentences in
// corpus order; each stage re-packs them for its sequence length. Starts from
// `init` / `init_heads` when given, else from a seeded random initialization.
// A non-finite loss stops training and restores the last evaluated weights.
PretrainResult RunPretraining(std::span<const std::vector<TokenId>> sentences,
                              const PretrainSchedule& schedule, const EncoderConfig& config,
                              const EncoderParams* init = nullptr,
                              const PretrainHeads* init_heads = nullptr);

// CSV with header step,mlm_accuracy,nsp_accuracy,loss.
std::string FormatMetricsCsv(std::span<const PretrainMetrics> log);

}  // namespace clinote

#endif  // CLINOTE_PRETRAIN_H_
