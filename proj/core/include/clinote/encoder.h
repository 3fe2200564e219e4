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

#ifndef CLINOTE_ENCODER_H_
#define CLINOTE_ENCODER_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/rng.h"
#include "clinote/tensor.h"
#include "clinote/tokenizer.h"

namespace clinote {

enum class Activation { kGelu, kRelu };

std::string ActivationName(Activation a);
Activation ParseActivation(std::string_view name);
Tensor Activate(const Tensor& x, Activation a);

struct EncoderConfig {
  std::size_t num_layers = 4;
  std::size_t num_heads = 4;
  std::size_t model_dim = 128;
  std::size_t ff_dim = 512;
  std::size_t max_seq_len = 128;
  std::size_t vocab_size = 0;
  double dropout_rate = 0.1;
  double layer_norm_eps = 1e-12;
  Activation activation = Activation::kGelu;
  // Residual placement: false puts layer norm after each residual add.
  bool pre_norm = false;

  // Throws ContractError when model_dim % num_heads != 0, max_seq_len < 2,
  // or any extent is zero.
  void Validate() const;
  std::size_t head_dim() const { return model_dim / num_heads; }
  // Number of distinct (layer, head) attention mechanisms.
  std::size_t num_attention_maps() const { return num_layers * num_heads; }
};

struct LayerParams {
  Tensor query_weight, query_bias;
  Tensor key_weight, key_bias;
  Tensor value_weight, value_bias;
  Tensor output_weight, output_bias;
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ff_in_weight, ff_in_bias;
  Tensor ff_out_weight, ff_out_bias;
  Tensor ff_norm_gain, ff_norm_bias;
};

struct EncoderParams {
  Tensor token_embedding;     // [vocab_size, model_dim]
  Tensor segment_embedding;   // [2, model_dim]
  Tensor position_embedding;  // [max_seq_len, model_dim]
  // Applied to the embedding sum (post-norm) or the last layer (pre-norm).
  Tensor embedding_norm_gain, embedding_norm_bias;
  std::vector<LayerParams> layers;

  // Weights ~ N(0, 0.02^2), biases 0, norm gains 1.
  static EncoderParams Initialize(const EncoderConfig& config, Rng& rng);
  // Rebuilds from named tensors, checking every shape against the config.
  static EncoderParams FromNamed(const EncoderConfig& config,
                                 std::span<const NamedTensor> tensors);
  std::vector<NamedTensor> Named() const;
  std::vector<Tensor> Parameters() const;
  // Deep copy with fresh leaves.
  EncoderParams Clone() const;
};

enum class Mode { kTrain, kEval };

struct ForwardOptions {
  Mode mode = Mode::kEval;
  // Required in train mode when dropout_rate > 0.
  Rng* dropout_stream = nullptr;
  bool capture_attention = false;
};

struct AttentionCapture {
  std::size_t layer = 0;
  std::size_t head = 0;
  Tensor queries;  // [n, head_dim]
  Tensor keys;     // [n, head_dim]
  Tensor weights;  // [n, n], row = query, column = key
};

struct EncoderOutput {
  std::vector<Tensor> hidden_states;  // one [n, model_dim] per layer
  Tensor h_cls;                       // [1, model_dim], final state at position 0
  std::vector<AttentionCapture> attention;
};

// tok[ids[i]] + seg[segment_ids[i]] + pos[i]; throws DimensionError for an
// out-of-range id or an overlong sequence.
Tensor Embed(const TokenSequence& seq, const EncoderParams& params);

struct AttentionResult {
  Tensor output;   // [n, d]
  Tensor weights;  // [n, n]
};

// softmax(q k^T / sqrt(d)) v. `key_mask`, when given, is a [n] additive mask
// (0 or kMaskSentinel) applied to every query row.
AttentionResult Attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          const Tensor* key_mask = nullptr);

// One transformer block: multi-head self-attention and the feed-forward
// sublayer, each with residual add and layer norm.
Tensor EncoderLayer(const Tensor& x, const LayerParams& layer, const EncoderConfig& config,
                    const Tensor* key_mask, const ForwardOptions& options,
                    std::size_t layer_index, std::vector<AttentionCapture>* capture);

// Padding positions ([PAD] ids) are masked as keys.
EncoderOutput Forward(const TokenSequence& seq, const EncoderParams& params,
                      const EncoderConfig& config, const ForwardOptions& options = {});

// Fixed-size term representation: the term is encoded as [CLS] pieces
// [SEP], the last four layer outputs are summed, and the sum is averaged over
// the subword positions. Requires num_layers >= 4.
std::vector<double> TermEmbedding(std::string_view term, const Vocabulary& vocab,
                                  const EncoderParams& params, const EncoderConfig& config);

}  // namespace clinote

#endif  // CLINOTE_ENCODER_H_
