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

#include "clinote/pretrain.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "clinote/adam.h"
#include "clinote/error.h"
#include "clinote/ops.h"

namespace clinote {
namespace {

// Stream ids used to derive independent generators from the schedule seed.
enum Stream : std::uint64_t {
  kInitStream = 1,
  kBatchStream = 2,
  kDropoutStream = 3,
  kEvalStream = 4,
};

std::size_t ArgMaxRow(std::span<const double> values, std::size_t row, std::size_t cols) {
  const double* begin = values.data() + row * cols;
  return static_cast<std::size_t>(std::max_element(begin, begin + cols) - begin);
}

// Segment budget per pair side so that [CLS] a [SEP] b [SEP] fits.
std::size_t SideBudget(std::size_t max_seq_len) {
  if (max_seq_len < 5) throw ContractError("pre-training max_seq_len must be at least 5");
  return (max_seq_len - 3) / 2;
}

}  // namespace

PretrainHeads PretrainHeads::Initialize(const EncoderConfig& config, Rng& rng) {
  PretrainHeads h;
  h.mlm_bias = Tensor::Zeros({config.vocab_size}, true);
  std::vector<double> w(config.model_dim);
  for (double& v : w) v = 0.02 * rng.Normal();
  h.nsp_weight = Tensor::FromValues({config.model_dim, 1}, std::move(w), true);
  h.nsp_bias = Tensor::Zeros({1}, true);
  return h;
}

PretrainHeads PretrainHeads::FromNamed(const EncoderConfig& config,
                                       std::span<const NamedTensor> tensors) {
  std::map<std::string, Tensor> by_name;
  for (const NamedTensor& nt : tensors) by_name[nt.name] = nt.tensor;
  auto take = [&](const std::string& name, const Shape& shape) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("missing pre-training tensor '" + name + "'");
    if (it->second.shape() != shape) {
      throw DimensionError("tensor '" + name + "' has shape " +
                           ShapeToString(it->second.shape()) + ", expected " +
                           ShapeToString(shape));
    }
    return it->second.Detach(true);
  };
  PretrainHeads h;
  h.mlm_bias = take("mlm.bias", {config.vocab_size});
  h.nsp_weight = take("nsp.weight", {config.model_dim, 1});
  h.nsp_bias = take("nsp.bias", {1});
  return h;
}

std::vector<NamedTensor> PretrainHeads::Named() const {
  return {{"mlm.bias", mlm_bias}, {"nsp.weight", nsp_weight}, {"nsp.bias", nsp_bias}};
}

std::vector<Tensor> PretrainHeads::Parameters() const {
  return {mlm_bias, nsp_weight, nsp_bias};
}

PretrainHeads PretrainHeads::Clone() const {
  return {mlm_bias.Detach(true), nsp_weight.Detach(true), nsp_bias.Detach(true)};
}

std::vector<std::vector<TokenId>> PackSequences(
    std::span<const std::vector<TokenId>> sentences, std::size_t max_len) {
  if (max_len == 0) throw ContractError("packing length must be positive");
  std::vector<std::vector<TokenId>> segments;
  std::vector<TokenId> current;
  for (const std::vector<TokenId>& sentence : sentences) {
    if (sentence.empty()) continue;
    if (!current.empty() && current.size() + sentence.size() > max_len) {
      segments.push_back(std::move(current));
      current.clear();
    }
    const std::size_t take = std::min(sentence.size(), max_len - current.size());
    current.insert(current.end(), sentence.begin(), sentence.begin() + take);
  }
  if (!current.empty()) segments.push_back(std::move(current));
  return segments;
}

NspPair DrawNspPair(std::size_t anchor, std::size_t num_segments, Rng& rng) {
  if (anchor + 1 >= num_segments) {
    throw ContractError("NSP anchor " + std::to_string(anchor) + " has no successor among " +
                        std::to_string(num_segments) + " segments");
  }
  if (rng.Bernoulli(0.5)) return {anchor, anchor + 1, 1};
  // Candidates exclude the successor and, when possible, the anchor.
  const std::size_t excluded = num_segments > 2 ? 2 : 1;
  std::size_t pick = rng.UniformIndex(num_segments - excluded);
  std::size_t low = excluded == 2 ? anchor : anchor + 1;
  if (pick >= low) pick += excluded;
  return {anchor, pick, 0};
}

std::vector<NspPair> MakeNspPairs(std::size_t num_segments, Rng& rng) {
  std::vector<NspPair> pairs;
  for (std::size_t anchor = 0; anchor + 1 < num_segments; ++anchor) {
    pairs.push_back(DrawNspPair(anchor, num_segments, rng));
  }
  return pairs;
}

PretrainExample MaskTokens(const TokenSequence& seq, std::size_t vocab_size, Rng& rng,
                           const MaskingOptions& options) {
  if (vocab_size <= kNumSpecialTokens) {
    throw ContractError("masking needs a vocabulary with non-special tokens");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!Vocabulary::IsSpecial(seq.ids[i])) candidates.push_back(i);
  }
  if (candidates.empty()) throw ContractError("sequence has no maskable tokens");

  PretrainExample ex;
  ex.sequence = seq;
  for (std::size_t pos : candidates) {
    if (rng.Bernoulli(options.select_rate)) ex.masked_positions.push_back(pos);
  }
  if (ex.masked_positions.empty()) {
    ex.masked_positions.push_back(candidates[rng.UniformIndex(candidates.size())]);
  }
  for (std::size_t pos : ex.masked_positions) {
    ex.targets.push_back(seq.ids[pos]);
    const double u = rng.Uniform();
    if (u < options.mask_fraction) {
      ex.sequence.ids[pos] = kMaskId;
    } else if (u < options.mask_fraction + options.random_fraction) {
      ex.sequence.ids[pos] = kNumSpecialTokens + rng.UniformIndex(vocab_size - kNumSpecialTokens);
    }
  }
  return ex;
}

PretrainLoss ComputePretrainLoss(const PretrainExample& example, const EncoderOutput& output,
                                 const EncoderParams& params, const PretrainHeads& heads) {
  if (example.masked_positions.empty()) throw ContractError("example has no MLM targets");
  PretrainLoss loss;
  const Tensor& final_state = output.hidden_states.back();
  const Tensor masked = GatherRows(final_state, example.masked_positions);
  const Tensor logits =
      Add(MatMulTransposed(masked, params.token_embedding), heads.mlm_bias);
  loss.mlm = CrossEntropyRows(logits, example.targets);
  const std::size_t vocab = logits.dim(1);
  for (std::size_t i = 0; i < example.targets.size(); ++i) {
    if (ArgMaxRow(logits.values(), i, vocab) == example.targets[i]) ++loss.mlm_correct;
  }
  loss.mlm_count = example.targets.size();

  const Tensor nsp_logit = Add(MatMul(output.h_cls, heads.nsp_weight), heads.nsp_bias);
  const double label = static_cast<double>(example.is_next);
  loss.nsp = BinaryCrossEntropyWithLogits(nsp_logit, std::span<const double>(&label, 1));
  loss.nsp_correct = (nsp_logit.item() > 0.0) == (example.is_next == 1);
  loss.total = Add(loss.mlm, loss.nsp);
  return loss;
}

void PretrainSchedule::Validate() const {
  if (stages.empty()) throw ContractError("pre-training schedule has no stages");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].batch_size == 0) throw ContractError("stage batch size must be positive");
    SideBudget(stages[i].max_seq_len);
    if (i > 0 && stages[i].max_seq_len < stages[i - 1].max_seq_len) {
      throw ContractError("stages must be ordered by nondecreasing max_seq_len");
    }
  }
  if (!(learning_rate > 0)) throw ContractError("learning rate must be positive");
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw ContractError("holdout_fraction must be in [0, 1)");
  }
}

std::vector<PretrainExample> MakePretrainExamples(
    std::span<const std::vector<TokenId>> segments, std::size_t count, std::size_t max_seq_len,
    std::size_t vocab_size, Rng& rng, const MaskingOptions& masking) {
  if (segments.size() < 2) throw ContractError("NSP examples need at least two segments");
  std::vector<PretrainExample> examples;
  examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const NspPair pair = DrawNspPair(rng.UniformIndex(segments.size() - 1), segments.size(), rng);
    const TokenSequence seq = EncodePair(segments[pair.first], segments[pair.second], max_seq_len);
    PretrainExample ex = MaskTokens(seq, vocab_size, rng, masking);
    ex.is_next = pair.is_next;
    examples.push_back(std::move(ex));
  }
  return examples;
}

TaskAccuracy EvaluatePretraining(std::span<const PretrainExample> examples,
                                 const EncoderParams& params, const PretrainHeads& heads,
                                 const EncoderConfig& config) {
  TaskAccuracy acc;
  if (examples.empty()) return acc;
  std::size_t mlm_correct = 0, mlm_total = 0, nsp_correct = 0;
  double loss_sum = 0.0;
  for (const PretrainExample& ex : examples) {
    const EncoderOutput out = Forward(ex.sequence, params, config);
    const PretrainLoss loss = ComputePretrainLoss(ex, out, params, heads);
    mlm_correct += loss.mlm_correct;
    mlm_total += loss.mlm_count;
    nsp_correct += loss.nsp_correct ? 1 : 0;
    loss_sum += loss.total.item();
  }
  acc.mlm_accuracy = static_cast<double>(mlm_correct) / static_cast<double>(mlm_total);
  acc.nsp_accuracy = static_cast<double>(nsp_correct) / static_cast<double>(examples.size());
  acc.mean_loss = loss_sum / static_cast<double>(examples.size());
  return acc;
}

PretrainResult RunPretraining(std::span<const std::vector<TokenId>> sentences,
                              const PretrainSchedule& schedule, const EncoderConfig& config,
                              const EncoderParams* init, const PretrainHeads* init_heads) {
  schedule.Validate();
  config.Validate();
  if (schedule.stages.back().max_seq_len > config.max_seq_len) {
    throw ContractError("stage max_seq_len exceeds the encoder's max_seq_len");
  }
  const Rng root(schedule.seed);
  Rng init_rng = root.Split(kInitStream);
  Rng batch_rng = root.Split(kBatchStream);
  Rng dropout_rng = root.Split(kDropoutStream);

  PretrainResult result;
  result.params = init ? init->Clone() : EncoderParams::Initialize(config, init_rng);
  result.heads = init_heads ? init_heads->Clone() : PretrainHeads::Initialize(config, init_rng);

  std::vector<Tensor> params = result.params.Parameters();
  for (const Tensor& t : result.heads.Parameters()) params.push_back(t);
  AdamOptions adam_options;
  adam_options.learning_rate = schedule.learning_rate;
  AdamState adam = MakeAdamState(params, adam_options);

  EncoderParams last_good = result.params.Clone();
  PretrainHeads last_good_heads = result.heads.Clone();

  std::size_t global_step = 0;
  for (std::size_t s = 0; s < schedule.stages.size(); ++s) {
    const PretrainStage& stage = schedule.stages[s];
    const std::vector<std::vector<TokenId>> segments =
        PackSequences(sentences, SideBudget(stage.max_seq_len));
    std::size_t holdout = static_cast<std::size_t>(
        std::ceil(schedule.holdout_fraction * static_cast<double>(segments.size())));
    if (schedule.holdout_fraction > 0.0) holdout = std::max<std::size_t>(holdout, 2);
    if (segments.size() < holdout + 2) {
      throw ContractError("corpus packs into " + std::to_string(segments.size()) +
                          " segments, too few for training and evaluation");
    }
    const std::span<const std::vector<TokenId>> all(segments);
    const auto train = all.first(segments.size() - holdout);
    const auto eval_segments = holdout > 0 ? all.last(holdout) : train;
    Rng eval_rng = root.Split(kEvalStream + 16 * (s + 1));
    const std::vector<PretrainExample> eval_set =
        MakePretrainExamples(eval_segments, schedule.eval_examples, stage.max_seq_len,
                             config.vocab_size, eval_rng, schedule.masking);

    double interval_loss = 0.0;
    std::size_t interval_steps = 0;
    const double batch_scale = 1.0 / static_cast<double>(stage.batch_size);
    for (std::size_t step = 0; step < stage.num_steps; ++step) {
      double batch_loss = 0.0;
      const std::vector<PretrainExample> batch =
          MakePretrainExamples(train, stage.batch_size, stage.max_seq_len, config.vocab_size,
                               batch_rng, schedule.masking);
      for (const PretrainExample& ex : batch) {
        ForwardOptions fwd{Mode::kTrain, &dropout_rng, false};
        const EncoderOutput out = Forward(ex.sequence, result.params, config, fwd);
        const PretrainLoss loss = ComputePretrainLoss(ex, out, result.params, result.heads);
        batch_loss += loss.total.item();
        Backward(Scale(loss.total, batch_scale));
      }
      batch_loss *= batch_scale;
      if (!std::isfinite(batch_loss)) {
        result.params = std::move(last_good);
        result.heads = std::move(last_good_heads);
        result.diverged = true;
        return result;
      }
      ClipGradNorm(params, schedule.max_grad_norm);
      AdamStep(params, adam);
      ZeroGrads(params);
      ++global_step;
      result.step_losses.push_back(batch_loss);
      interval_loss += batch_loss;
      ++interval_steps;

      const bool last_step = step + 1 == stage.num_steps;
      if ((schedule.eval_interval > 0 && global_step % schedule.eval_interval == 0) ||
          last_step) {
        const TaskAccuracy acc =
            EvaluatePretraining(eval_set, result.params, result.heads, config);
        result.log.push_back({global_step, acc.mlm_accuracy, acc.nsp_accuracy,
                              interval_loss / static_cast<double>(interval_steps)});
        interval_loss = 0.0;
        interval_steps = 0;
        last_good = result.params.Clone();
        last_good_heads = result.heads.Clone();
      }
    }
  }
  return result;
}

std::string FormatMetricsCsv(std::span<const PretrainMetrics> log) {
  std::string out = "step,mlm_accuracy,nsp_accuracy,loss\n";
  char buf[128];
  for (const PretrainMetrics& m : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.4f,%.4f,%.6f\n", m.step, m.mlm_accuracy,
                  m.nsp_accuracy, m.loss);
    out += buf;
  }
  return out;
}

}  // namespace clinote
