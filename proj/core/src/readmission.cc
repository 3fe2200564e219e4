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

#include "clinote/readmission.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "clinote/adam.h"
#include "clinote/error.h"
#include "clinote/metrics.h"
#include "clinote/ops.h"

namespace clinote {
namespace {

enum Stream : std::uint64_t {
  kHeadStream = 1,
  kShuffleStream = 2,
  kDropoutStream = 3,
};

std::vector<Shape> HeadShapes(HeadMode mode, std::size_t d) {
  if (mode == HeadMode::kLinear) return {{d, 1}};
  const std::size_t w = MlpHiddenWidth(d);
  return {{d, w}, {w, d}, {d, 1}};
}

// Numerically stable binary cross-entropy for one logit.
double LogisticLoss(double logit, int label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

std::string HeadModeName(HeadMode mode) {
  return mode == HeadMode::kLinear ? "linear" : "mlp";
}

HeadMode ParseHeadMode(std::string_view name) {
  if (name == "linear") return HeadMode::kLinear;
  if (name == "mlp") return HeadMode::kMlp;
  throw FormatError("unknown head mode '" + std::string(name) + "' (expected linear or mlp)");
}

std::size_t MlpHiddenWidth(std::size_t model_dim) {
  return static_cast<std::size_t>(std::llround(8.0 * static_cast<double>(model_dim) / 3.0));
}

ReadmissionHead ReadmissionHead::Initialize(HeadMode mode, const EncoderConfig& config,
                                            Rng& rng) {
  ReadmissionHead head;
  head.mode = mode;
  for (const Shape& shape : HeadShapes(mode, config.model_dim)) {
    std::vector<double> w(ShapeSize(shape));
    for (double& v : w) v = 0.02 * rng.Normal();
    head.weights.push_back(Tensor::FromValues(shape, std::move(w), true));
    head.biases.push_back(Tensor::Zeros({shape[1]}, true));
  }
  return head;
}

ReadmissionHead ReadmissionHead::Zeros(HeadMode mode, const EncoderConfig& config) {
  ReadmissionHead head;
  head.mode = mode;
  for (const Shape& shape : HeadShapes(mode, config.model_dim)) {
    head.weights.push_back(Tensor::Zeros(shape, true));
    head.biases.push_back(Tensor::Zeros({shape[1]}, true));
  }
  return head;
}

ReadmissionHead ReadmissionHead::FromNamed(HeadMode mode, const EncoderConfig& config,
                                           std::span<const NamedTensor> tensors) {
  ReadmissionHead head;
  head.mode = mode;
  const std::vector<Shape> shapes = HeadShapes(mode, config.model_dim);
  auto take = [&](const std::string& name, const Shape& shape) {
    for (const NamedTensor& nt : tensors) {
      if (nt.name != name) continue;
      if (nt.tensor.shape() != shape) {
        throw DimensionError("tensor '" + name + "' has shape " +
                             ShapeToString(nt.tensor.shape()) + ", expected " +
                             ShapeToString(shape));
      }
      return nt.tensor.Detach(true);
    }
    throw FormatError("missing head tensor '" + name + "'");
  };
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const std::string prefix = "head." + std::to_string(i);
    head.weights.push_back(take(prefix + ".weight", shapes[i]));
    head.biases.push_back(take(prefix + ".bias", {shapes[i][1]}));
  }
  return head;
}

std::vector<NamedTensor> ReadmissionHead::Named() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::string prefix = "head." + std::to_string(i);
    out.push_back({prefix + ".weight", weights[i]});
    out.push_back({prefix + ".bias", biases[i]});
  }
  return out;
}

std::vector<Tensor> ReadmissionHead::Parameters() const {
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(weights[i]);
    out.push_back(biases[i]);
  }
  return out;
}

ReadmissionHead ReadmissionHead::Clone() const {
  ReadmissionHead head;
  head.mode = mode;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    head.weights.push_back(weights[i].Detach(true));
    head.biases.push_back(biases[i].Detach(true));
  }
  return head;
}

Tensor ReadmissionHead::Logit(const Tensor& h_cls, const EncoderConfig& config) const {
  Tensor x = h_cls;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    x = Add(MatMul(x, weights[i]), biases[i]);
    if (i + 1 < weights.size()) x = Activate(x, config.activation);
  }
  return x;
}

std::vector<TokenSequence> SplitSubsequences(std::span<const TokenId> tokens,
                                             std::size_t max_len) {
  if (max_len < 3) throw ContractError("subsequence max_len must be at least 3");
  if (tokens.empty()) throw ContractError("admission has no note tokens to split");
  const std::size_t chunk = max_len - 2;
  std::vector<TokenSequence> out;
  for (std::size_t begin = 0; begin < tokens.size(); begin += chunk) {
    const std::size_t end = std::min(tokens.size(), begin + chunk);
    out.push_back(EncodeSingle(tokens.subspan(begin, end - begin), max_len));
  }
  return out;
}

double PredictSubsequence(const TokenSequence& seq, const EncoderParams& params,
                          const EncoderConfig& config, const ReadmissionHead& head) {
  const EncoderOutput out = Forward(seq, params, config);
  return SigmoidScalar(head.Logit(out.h_cls, config).item());
}

double Aggregate(std::span<const double> probs, double c) {
  if (probs.empty()) throw ContractError("aggregation needs at least one probability");
  if (!(c > 0.0)) throw ContractError("scaling constant c must be positive");
  double p_max = 0.0, sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("probability outside [0, 1]");
    p_max = std::max(p_max, p);
    sum += p;
  }
  const double n = static_cast<double>(probs.size());
  const double p_mean = sum / n;
  const double ratio = n / c;
  const double risk = (p_max + p_mean * ratio) / (1.0 + ratio);
  // Rounding can push the convex combination a hair outside its endpoints.
  return std::clamp(risk, std::min(p_mean, p_max), p_max);
}

PatientPrediction AggregatePrediction(std::string admission_id, std::vector<double> probs,
                                      double c) {
  PatientPrediction pred;
  pred.admission_id = std::move(admission_id);
  pred.risk = Aggregate(probs, c);
  pred.c = c;
  pred.p_max = *std::max_element(probs.begin(), probs.end());
  pred.p_mean =
      std::accumulate(probs.begin(), probs.end(), 0.0) / static_cast<double>(probs.size());
  pred.probabilities = std::move(probs);
  return pred;
}

PatientPrediction NotScorable(std::string admission_id, std::string reason) {
  PatientPrediction pred;
  pred.admission_id = std::move(admission_id);
  pred.scorable = false;
  pred.status = std::move(reason);
  return pred;
}

std::vector<TokenId> AdmissionTokens(std::span<const RawNote> notes, const Vocabulary& vocab,
                                     const PreprocessOptions& options) {
  std::vector<const RawNote*> ordered;
  for (const RawNote& note : notes) ordered.push_back(&note);
  std::stable_sort(ordered.begin(), ordered.end(), [](const RawNote* a, const RawNote* b) {
    if (a->charttime && b->charttime) return *a->charttime < *b->charttime;
    return a->charttime.has_value() && !b->charttime.has_value();
  });
  std::vector<TokenId> tokens;
  for (const RawNote* note : ordered) {
    for (const std::string& sentence : PreprocessText(note->text, options)) {
      const std::vector<TokenId> ids = EncodeIds(sentence, vocab);
      tokens.insert(tokens.end(), ids.begin(), ids.end());
    }
  }
  return tokens;
}

std::string NoteSelection::Name() const {
  if (kind == Kind::kDischarge) return "discharge";
  return "cutoff-" + std::to_string(cutoff_hours) + "h";
}

SelectedNotes SelectNotes(const AdmissionRecord& admission, const NoteSelection& selection) {
  SelectedNotes out;
  if (selection.kind == NoteSelection::Kind::kDischarge) {
    out.notes = admission.notes;
  } else {
    CutoffResult cut = CutoffFilter(admission, selection.cutoff_hours);
    if (!cut.scorable) {
      out.scorable = false;
      out.status = "discharged within " + std::to_string(selection.cutoff_hours) + "h";
      return out;
    }
    out.notes = std::move(cut.notes);
  }
  if (out.notes.empty()) {
    out.scorable = false;
    out.status = "no notes";
  }
  return out;
}

PatientPrediction PredictPatient(const AdmissionRecord& admission, const NoteSelection& selection,
                                 const Vocabulary& vocab, const EncoderParams& params,
                                 const EncoderConfig& config, const ReadmissionHead& head,
                                 double c, const PreprocessOptions& options) {
  SelectedNotes selected = SelectNotes(admission, selection);
  if (!selected.scorable) return NotScorable(admission.admission_id, selected.status);
  const std::vector<TokenId> tokens = AdmissionTokens(selected.notes, vocab, options);
  if (tokens.empty()) return NotScorable(admission.admission_id, "no tokens");
  std::vector<double> probs;
  for (const TokenSequence& seq : SplitSubsequences(tokens, config.max_seq_len)) {
    probs.push_back(PredictSubsequence(seq, params, config, head));
  }
  return AggregatePrediction(admission.admission_id, std::move(probs), c);
}

std::vector<LabeledSequence> MakeLabeledSequences(std::span<const AdmissionRecord> admissions,
                                                  const std::map<std::string, int>& labels,
                                                  const NoteSelection& selection,
                                                  const Vocabulary& vocab, std::size_t max_len,
                                                  const PreprocessOptions& options) {
  std::vector<LabeledSequence> out;
  for (const AdmissionRecord& admission : admissions) {
    auto it = labels.find(admission.admission_id);
    if (it == labels.end()) continue;
    const SelectedNotes selected = SelectNotes(admission, selection);
    if (!selected.scorable) continue;
    const std::vector<TokenId> tokens = AdmissionTokens(selected.notes, vocab, options);
    if (tokens.empty()) continue;
    for (TokenSequence& seq : SplitSubsequences(tokens, max_len)) {
      out.push_back({admission.admission_id, std::move(seq), it->second});
    }
  }
  return out;
}

SequenceEvaluation EvaluateSequences(std::span<const LabeledSequence> sequences,
                                     const EncoderParams& params, const EncoderConfig& config,
                                     const ReadmissionHead& head) {
  SequenceEvaluation eval;
  if (sequences.empty()) return eval;
  std::size_t correct = 0;
  double loss = 0.0;
  for (const LabeledSequence& ex : sequences) {
    const EncoderOutput out = Forward(ex.sequence, params, config);
    const double logit = head.Logit(out.h_cls, config).item();
    loss += LogisticLoss(logit, ex.label);
    const double p = SigmoidScalar(logit);
    eval.probabilities.push_back(p);
    if ((p >= 0.5) == (ex.label == 1)) ++correct;
  }
  const double n = static_cast<double>(sequences.size());
  eval.mean_loss = loss / n;
  eval.accuracy = static_cast<double>(correct) / n;
  return eval;
}

FinetuneResult Finetune(std::span<const LabeledSequence> train,
                        std::span<const LabeledSequence> validation,
                        const EncoderParams& pretrained, const EncoderConfig& config,
                        const FinetuneOptions& options) {
  config.Validate();
  if (options.batch_size == 0) throw ContractError("fine-tune batch size must be positive");
  if (options.epochs == 0) throw ContractError("fine-tuning needs at least one epoch");
  if (validation.empty()) throw ContractError("fine-tuning needs a validation set");
  std::size_t positives = 0;
  for (const LabeledSequence& ex : train) positives += ex.label == 1 ? 1 : 0;
  if (positives == 0 || positives == train.size()) {
    throw ContractError("training subsequences contain a single class");
  }

  const Rng root(options.seed);
  Rng head_rng = root.Split(kHeadStream);
  Rng shuffle_rng = root.Split(kShuffleStream);
  Rng dropout_rng = root.Split(kDropoutStream);

  FinetuneResult result;
  EncoderParams params = pretrained.Clone();
  ReadmissionHead head = ReadmissionHead::Initialize(options.head_mode, config, head_rng);
  std::vector<Tensor> trainable = params.Parameters();
  for (const Tensor& t : head.Parameters()) trainable.push_back(t);
  AdamOptions adam_options;
  adam_options.learning_rate = options.learning_rate;
  AdamState adam = MakeAdamState(trainable, adam_options);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  double best_loss = INFINITY;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle_rng.Shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const LabeledSequence& ex = train[order[i]];
        const ForwardOptions fwd{Mode::kTrain, &dropout_rng, false};
        const EncoderOutput out = Forward(ex.sequence, params, config, fwd);
        const double label = ex.label;
        const Tensor loss = BinaryCrossEntropyWithLogits(head.Logit(out.h_cls, config),
                                                         std::span<const double>(&label, 1));
        epoch_loss += loss.item();
        Backward(Scale(loss, scale));
      }
      ClipGradNorm(trainable, options.max_grad_norm);
      AdamStep(trainable, adam);
      ZeroGrads(trainable);
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    const double val_loss = EvaluateSequences(validation, params, config, head).mean_loss;
    result.validation_loss.push_back(val_loss);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      result.best_epoch = epoch;
      result.params = params.Clone();
      result.head = head.Clone();
      since_best = 0;
    } else if (options.patience > 0 && ++since_best >= options.patience) {
      break;
    }
  }
  if (result.best_epoch == 0) {
    throw ContractError("fine-tuning produced a non-finite validation loss");
  }
  return result;
}

double SelectScalingConstant(std::span<const std::vector<double>> subsequence_probs,
                             std::span<const int> labels, std::span<const double> grid) {
  if (grid.empty()) throw ContractError("scaling constant grid is empty");
  double best_c = grid[0];
  double best_auc = -1.0;
  std::vector<double> risks(subsequence_probs.size());
  for (double c : grid) {
    for (std::size_t i = 0; i < subsequence_probs.size(); ++i) {
      risks[i] = Aggregate(subsequence_probs[i], c);
    }
    const double auc = Auroc(risks, labels);
    if (auc > best_auc) {
      best_auc = auc;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace clinote
