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

#ifndef CLINOTE_READMISSION_H_
#define CLINOTE_READMISSION_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/cohort.h"
#include "clinote/encoder.h"
#include "clinote/rng.h"
#include "clinote/tensor.h"
#include "clinote/text_preprocess.h"
#include "clinote/tokenizer.h"

namespace clinote {

enum class HeadMode { kLinear, kMlp };

std::string HeadModeName(HeadMode mode);
// Accepts "linear" or "mlp"; throws FormatError otherwise.
HeadMode ParseHeadMode(std::string_view name);

// Hidden width of the mlp head: round(8/3 * model_dim), the 2048:768 ratio.
std::size_t MlpHiddenWidth(std::size_t model_dim);

// Maps h_cls to a single logit. Linear: one affine layer d -> 1. Mlp: affine
// layers d -> w -> d -> 1 with the encoder activation between them.
struct ReadmissionHead {
  HeadMode mode = HeadMode::kMlp;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static ReadmissionHead Initialize(HeadMode mode, const EncoderConfig& config, Rng& rng);
  // Every layer weight set to zero, so the logit is 0 for any input.
  static ReadmissionHead Zeros(HeadMode mode, const EncoderConfig& config);
  static ReadmissionHead FromNamed(HeadMode mode, const EncoderConfig& config,
                                   std::span<const NamedTensor> tensors);
  std::vector<NamedTensor> Named() const;  // "head.{i}.weight", "head.{i}.bias"
  std::vector<Tensor> Parameters() const;
  ReadmissionHead Clone() const;

  // [1, 1] logit for a [1, d] h_cls.
  Tensor Logit(const Tensor& h_cls, const EncoderConfig& config) const;
};

// Consecutive chunks of at most max_len - 2 tokens, each wrapped as
// [CLS] chunk [SEP]. Throws ContractError for an empty stream or max_len < 3.
std::vector<TokenSequence> SplitSubsequences(std::span<const TokenId> tokens,
                                             std::size_t max_len);

// sigmoid(head(h_cls)) in eval mode.
double PredictSubsequence(const TokenSequence& seq, const EncoderParams& params,
                          const EncoderConfig& config, const ReadmissionHead& head);

// (P_max + P_mean * n/c) / (1 + n/c). Throws ContractError for an empty
// input, a probability outside [0, 1], or c <= 0.
double Aggregate(std::span<const double> probs, double c = 2.0);

struct PatientPrediction {
  std::string admission_id;
  bool scorable = true;
  std::string status = "ok";  // reason when not scorable
  std::vector<double> probabilities;
  double c = 2.0;
  double p_max = 0.0;
  double p_mean = 0.0;
  double risk = 0.0;
  std::size_t n() const { return probabilities.size(); }
};

PatientPrediction AggregatePrediction(std::string admission_id, std::vector<double> probs,
                                      double c = 2.0);
PatientPrediction NotScorable(std::string admission_id, std::string reason);

// Notes in charttime order (notes without one keep their position after the
// timed ones), preprocessed, tokenized and concatenated.
std::vector<TokenId> AdmissionTokens(std::span<const RawNote> notes, const Vocabulary& vocab,
                                     const PreprocessOptions& options = {});

struct NoteSelection {
  enum class Kind { kDischarge, kCutoff };
  Kind kind = Kind::kDischarge;
  int cutoff_hours = 48;

  std::string Name() const;  // "discharge", "cutoff-48h", ...
};

// Notes the model may read for this admission, or an explanation of why the
// admission is not scorable.
struct SelectedNotes {
  bool scorable = true;
  std::string status = "ok";
  std::vector<RawNote> notes;
};
SelectedNotes SelectNotes(const AdmissionRecord& admission, const NoteSelection& selection);

PatientPrediction PredictPatient(const AdmissionRecord& admission, const NoteSelection& selection,
                                 const Vocabulary& vocab, const EncoderParams& params,
                                 const EncoderConfig& config, const ReadmissionHead& head,
                                 double c = 2.0, const PreprocessOptions& options = {});

// One subsequence labeled with its admission's label.
struct LabeledSequence {
  std::string admission_id;
  TokenSequence sequence;
  int label = 0;
};

// Subsequences of every labeled, scorable admission. Admissions without a
// label entry are skipped.
std::vector<LabeledSequence> MakeLabeledSequences(std::span<const AdmissionRecord> admissions,
                                                  const std::map<std::string, int>& labels,
                                                  const NoteSelection& selection,
                                                  const Vocabulary& vocab, std::size_t max_len,
                                                  const PreprocessOptions& options = {});

struct FinetuneOptions {
  std::size_t epochs = 3;
  std::size_t batch_size = 8;
  double learning_rate = 2e-5;
  HeadMode head_mode = HeadMode::kMlp;
  std::uint64_t seed = 0;
  double max_grad_norm = 1.0;
  // Stop after this many epochs without a validation improvement; 0 runs
  // every epoch. The best epoch is returned either way.
  std::size_t patience = 0;
};

struct FinetuneResult {
  EncoderParams params;
  ReadmissionHead head;
  std::vector<double> train_loss;       // mean per epoch
  std::vector<double> validation_loss;  // at each epoch end
  std::size_t best_epoch = 0;           // 1-based
};

// Minimizes subsequence binary cross-entropy with Adam and returns the
// weights from the epoch end with the lowest validation loss. Throws
// ContractError when the training labels are single-class or validation is
// empty.
FinetuneResult Finetune(std::span<const LabeledSequence> train,
                        std::span<const LabeledSequence> validation,
                        const EncoderParams& pretrained, const EncoderConfig& config,
                        const FinetuneOptions& options);

struct SequenceEvaluation {
  std::vector<double> probabilities;
  double mean_loss = 0.0;
  double accuracy = 0.0;  // threshold 0.5
};
SequenceEvaluation EvaluateSequences(std::span<const LabeledSequence> sequences,
                                     const EncoderParams& params, const EncoderConfig& config,
                                     const ReadmissionHead& head);

// Picks c from `grid` by AUROC of the aggregated risks; ties keep the earlier
// grid value.
double SelectScalingConstant(std::span<const std::vector<double>> subsequence_probs,
                             std::span<const int> labels, std::span<const double> grid);

}  // namespace clinote

#endif  // CLINOTE_READMISSION_H_
