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

#include "clinote/encoder.h"

#include <cmath>
#include <map>

#include "clinote/error.h"
#include "clinote/ops.h"
#include "clinote/text_preprocess.h"

namespace clinote {
namespace {

constexpr double kInitStd = 0.02;

Tensor RandomMatrix(Shape shape, Rng& rng) {
  std::vector<double> values(ShapeSize(shape));
  for (double& v : values) v = kInitStd * rng.Normal();
  return Tensor::FromValues(std::move(shape), std::move(values), true);
}

Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return Add(MatMul(x, w), b);
}

Tensor MaybeDropout(const Tensor& x, const EncoderConfig& config,
                    const ForwardOptions& options) {
  if (options.mode != Mode::kTrain || config.dropout_rate == 0.0) return x;
  if (options.dropout_stream == nullptr) {
    throw ContractError("train-mode forward with dropout needs a dropout stream");
  }
  return Dropout(x, config.dropout_rate, *options.dropout_stream);
}

// Visits every parameter tensor with its canonical name.
template <typename Params, typename Fn>
void VisitParams(Params& p, Fn&& fn) {
  fn("embeddings.token", p.token_embedding);
  fn("embeddings.segment", p.segment_embedding);
  fn("embeddings.position", p.position_embedding);
  fn("embeddings.norm.gain", p.embedding_norm_gain);
  fn("embeddings.norm.bias", p.embedding_norm_bias);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string prefix = "layer." + std::to_string(i) + ".";
    fn(prefix + "attention.query.weight", l.query_weight);
    fn(prefix + "attention.query.bias", l.query_bias);
    fn(prefix + "attention.key.weight", l.key_weight);
    fn(prefix + "attention.key.bias", l.key_bias);
    fn(prefix + "attention.value.weight", l.value_weight);
    fn(prefix + "attention.value.bias", l.value_bias);
    fn(prefix + "attention.output.weight", l.output_weight);
    fn(prefix + "attention.output.bias", l.output_bias);
    fn(prefix + "attention.norm.gain", l.attention_norm_gain);
    fn(prefix + "attention.norm.bias", l.attention_norm_bias);
    fn(prefix + "ff.in.weight", l.ff_in_weight);
    fn(prefix + "ff.in.bias", l.ff_in_bias);
    fn(prefix + "ff.out.weight", l.ff_out_weight);
    fn(prefix + "ff.out.bias", l.ff_out_bias);
    fn(prefix + "ff.norm.gain", l.ff_norm_gain);
    fn(prefix + "ff.norm.bias", l.ff_norm_bias);
  }
}

// Expected shape of every named parameter under a config.
std::map<std::string, Shape> ExpectedShapes(const EncoderConfig& c) {
  std::map<std::string, Shape> shapes;
  const std::size_t d = c.model_dim;
  shapes["embeddings.token"] = {c.vocab_size, d};
  shapes["embeddings.segment"] = {2, d};
  shapes["embeddings.position"] = {c.max_seq_len, d};
  shapes["embeddings.norm.gain"] = {d};
  shapes["embeddings.norm.bias"] = {d};
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    const std::string prefix = "layer." + std::to_string(i) + ".";
    for (const char* proj : {"query", "key", "value", "output"}) {
      shapes[prefix + "attention." + proj + ".weight"] = {d, d};
      shapes[prefix + "attention." + proj + ".bias"] = {d};
    }
    shapes[prefix + "attention.norm.gain"] = {d};
    shapes[prefix + "attention.norm.bias"] = {d};
    shapes[prefix + "ff.in.weight"] = {d, c.ff_dim};
    shapes[prefix + "ff.in.bias"] = {c.ff_dim};
    shapes[prefix + "ff.out.weight"] = {c.ff_dim, d};
    shapes[prefix + "ff.out.bias"] = {d};
    shapes[prefix + "ff.norm.gain"] = {d};
    shapes[prefix + "ff.norm.bias"] = {d};
  }
  return shapes;
}

}  // namespace

std::string ActivationName(Activation a) { return a == Activation::kGelu ? "gelu" : "relu"; }

Activation ParseActivation(std::string_view name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "relu") return Activation::kRelu;
  throw FormatError("unknown activation '" + std::string(name) + "'");
}

Tensor Activate(const Tensor& x, Activation a) {
  return a == Activation::kGelu ? Gelu(x) : Relu(x);
}

void EncoderConfig::Validate() const {
  if (num_layers == 0 || num_heads == 0 || model_dim == 0 || ff_dim == 0 || vocab_size == 0) {
    throw ContractError("encoder extents must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw ContractError("model_dim " + std::to_string(model_dim) +
                        " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (max_seq_len < 2) throw ContractError("max_seq_len must be at least 2");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ContractError("dropout_rate must be in [0, 1)");
  }
}

EncoderParams EncoderParams::Initialize(const EncoderConfig& c, Rng& rng) {
  c.Validate();
  const std::size_t d = c.model_dim;
  EncoderParams p;
  p.token_embedding = RandomMatrix({c.vocab_size, d}, rng);
  p.segment_embedding = RandomMatrix({2, d}, rng);
  p.position_embedding = RandomMatrix({c.max_seq_len, d}, rng);
  p.embedding_norm_gain = Tensor::Full({d}, 1.0, true);
  p.embedding_norm_bias = Tensor::Zeros({d}, true);
  for (std::size_t i = 0; i < c.num_layers; ++i) {
    LayerParams l;
    l.query_weight = RandomMatrix({d, d}, rng);
    l.query_bias = Tensor::Zeros({d}, true);
    l.key_weight = RandomMatrix({d, d}, rng);
    l.key_bias = Tensor::Zeros({d}, true);
    l.value_weight = RandomMatrix({d, d}, rng);
    l.value_bias = Tensor::Zeros({d}, true);
    l.output_weight = RandomMatrix({d, d}, rng);
    l.output_bias = Tensor::Zeros({d}, true);
    l.attention_norm_gain = Tensor::Full({d}, 1.0, true);
    l.attention_norm_bias = Tensor::Zeros({d}, true);
    l.ff_in_weight = RandomMatrix({d, c.ff_dim}, rng);
    l.ff_in_bias = Tensor::Zeros({c.ff_dim}, true);
    l.ff_out_weight = RandomMatrix({c.ff_dim, d}, rng);
    l.ff_out_bias = Tensor::Zeros({d}, true);
    l.ff_norm_gain = Tensor::Full({d}, 1.0, true);
    l.ff_norm_bias = Tensor::Zeros({d}, true);
    p.layers.push_back(std::move(l));
  }
  return p;
}

EncoderParams EncoderParams::FromNamed(const EncoderConfig& config,
                                       std::span<const NamedTensor> tensors) {
  config.Validate();
  const std::map<std::string, Shape> expected = ExpectedShapes(config);
  std::map<std::string, Tensor> by_name;
  for (const NamedTensor& nt : tensors) by_name[nt.name] = nt.tensor;
  EncoderParams p;
  p.layers.resize(config.num_layers);
  VisitParams(p, [&](const std::string& name, Tensor& slot) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("missing encoder tensor '" + name + "'");
    if (it->second.shape() != expected.at(name)) {
      throw DimensionError("encoder tensor '" + name + "' has shape " +
                           ShapeToString(it->second.shape()) + ", config expects " +
                           ShapeToString(expected.at(name)));
    }
    slot = it->second.Detach(true);
  });
  return p;
}

std::vector<NamedTensor> EncoderParams::Named() const {
  std::vector<NamedTensor> out;
  VisitParams(*this, [&](const std::string& name, const Tensor& t) {
    out.push_back({name, t});
  });
  return out;
}

std::vector<Tensor> EncoderParams::Parameters() const {
  std::vector<Tensor> out;
  VisitParams(*this, [&](const std::string&, const Tensor& t) { out.push_back(t); });
  return out;
}

EncoderParams EncoderParams::Clone() const {
  EncoderParams copy = *this;
  VisitParams(copy, [](const std::string&, Tensor& t) { t = t.Detach(true); });
  return copy;
}

Tensor Embed(const TokenSequence& seq, const EncoderParams& params) {
  const std::size_t n = seq.size();
  if (n == 0) throw DimensionError("cannot embed an empty sequence");
  if (n > params.position_embedding.dim(0)) {
    throw DimensionError("sequence length " + std::to_string(n) + " exceeds max_seq_len " +
                         std::to_string(params.position_embedding.dim(0)));
  }
  if (seq.segment_ids.size() != n) {
    throw DimensionError("segment ids do not match token ids");
  }
  std::vector<std::size_t> segments(seq.segment_ids.begin(), seq.segment_ids.end());
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  return Add(Add(GatherRows(params.token_embedding, seq.ids),
                 GatherRows(params.segment_embedding, segments)),
             GatherRows(params.position_embedding, positions));
}

AttentionResult Attention(const Tensor& q, const Tensor& k, const Tensor& v,
                          const Tensor* key_mask) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) ||
      k.dim(0) != v.dim(0)) {
    throw DimensionError("attention: incompatible q/k/v shapes " + ShapeToString(q.shape()) +
                         ", " + ShapeToString(k.shape()) + ", " + ShapeToString(v.shape()));
  }
  Tensor scores = Scale(MatMulTransposed(q, k), 1.0 / std::sqrt(static_cast<double>(q.dim(1))));
  if (key_mask != nullptr) scores = Add(scores, *key_mask);
  Tensor weights = SoftmaxRows(scores);
  return {MatMul(weights, v), weights};
}

Tensor EncoderLayer(const Tensor& x, const LayerParams& layer, const EncoderConfig& config,
                    const Tensor* key_mask, const ForwardOptions& options,
                    std::size_t layer_index, std::vector<AttentionCapture>* capture) {
  const double eps = config.layer_norm_eps;
  const Tensor attn_in =
      config.pre_norm ? LayerNorm(x, layer.attention_norm_gain, layer.attention_norm_bias, eps)
                      : x;
  const Tensor q = Linear(attn_in, layer.query_weight, layer.query_bias);
  const Tensor k = Linear(attn_in, layer.key_weight, layer.key_bias);
  const Tensor v = Linear(attn_in, layer.value_weight, layer.value_bias);
  const std::size_t dh = config.head_dim();
  std::vector<Tensor> heads;
  heads.reserve(config.num_heads);
  for (std::size_t h = 0; h < config.num_heads; ++h) {
    const Tensor qh = SliceCols(q, h * dh, (h + 1) * dh);
    const Tensor kh = SliceCols(k, h * dh, (h + 1) * dh);
    const Tensor vh = SliceCols(v, h * dh, (h + 1) * dh);
    AttentionResult r = Attention(qh, kh, vh, key_mask);
    if (capture != nullptr) capture->push_back({layer_index, h, qh, kh, r.weights});
    heads.push_back(std::move(r.output));
  }
  const Tensor merged = heads.size() == 1 ? heads[0] : ConcatCols(heads);
  const Tensor attn_out =
      MaybeDropout(Linear(merged, layer.output_weight, layer.output_bias), config, options);

  Tensor h1;
  if (config.pre_norm) {
    h1 = Add(x, attn_out);
  } else {
    h1 = LayerNorm(Add(x, attn_out), layer.attention_norm_gain, layer.attention_norm_bias, eps);
  }
  const Tensor ff_in =
      config.pre_norm ? LayerNorm(h1, layer.ff_norm_gain, layer.ff_norm_bias, eps) : h1;
  const Tensor ff = MaybeDropout(
      Linear(Activate(Linear(ff_in, layer.ff_in_weight, layer.ff_in_bias), config.activation),
             layer.ff_out_weight, layer.ff_out_bias),
      config, options);
  if (config.pre_norm) return Add(h1, ff);
  return LayerNorm(Add(h1, ff), layer.ff_norm_gain, layer.ff_norm_bias, eps);
}

EncoderOutput Forward(const TokenSequence& seq, const EncoderParams& params,
                      const EncoderConfig& config, const ForwardOptions& options) {
  if (params.layers.size() != config.num_layers) {
    throw ContractError("parameters have " + std::to_string(params.layers.size()) +
                        " layers, config expects " + std::to_string(config.num_layers));
  }
  seq.Validate(config.max_seq_len, /*require_cls=*/false);
  for (TokenId id : seq.ids) {
    if (id >= config.vocab_size) {
      throw DimensionError("token id " + std::to_string(id) + " outside vocabulary of " +
                           std::to_string(config.vocab_size));
    }
  }
  const std::size_t n = seq.size();
  Tensor mask;
  bool any_pad = false;
  std::vector<double> mask_values(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (seq.ids[i] == kPadId) {
      mask_values[i] = kMaskSentinel;
      any_pad = true;
    }
  }
  if (any_pad) mask = Tensor::FromValues({n}, std::move(mask_values));

  EncoderOutput out;
  Tensor h = Embed(seq, params);
  if (!config.pre_norm) {
    h = LayerNorm(h, params.embedding_norm_gain, params.embedding_norm_bias,
                  config.layer_norm_eps);
  }
  h = MaybeDropout(h, config, options);
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    h = EncoderLayer(h, params.layers[i], config, any_pad ? &mask : nullptr, options, i,
                     options.capture_attention ? &out.attention : nullptr);
    if (config.pre_norm && i + 1 == config.num_layers) {
      h = LayerNorm(h, params.embedding_norm_gain, params.embedding_norm_bias,
                    config.layer_norm_eps);
    }
    out.hidden_states.push_back(h);
  }
  out.h_cls = SliceRows(h, 0, 1);
  return out;
}

std::vector<double> TermEmbedding(std::string_view term, const Vocabulary& vocab,
                                  const EncoderParams& params, const EncoderConfig& config) {
  if (config.num_layers < 4) {
    throw ContractError("term embeddings sum the last four layers; encoder has " +
                        std::to_string(config.num_layers));
  }
  const std::vector<TokenId> pieces = EncodeIds(Normalize(term), vocab);
  if (pieces.empty()) throw ContractError("cannot embed an empty term");
  const TokenSequence seq = EncodeSingle(pieces, config.max_seq_len);
  const EncoderOutput out = Forward(seq, params, config);
  const std::size_t d = config.model_dim;
  const std::size_t first = 1, last = seq.size() - 1;  // skip [CLS] and [SEP]
  std::vector<double> embedding(d, 0.0);
  for (std::size_t layer = config.num_layers - 4; layer < config.num_layers; ++layer) {
    auto hv = out.hidden_states[layer].values();
    for (std::size_t pos = first; pos < last; ++pos)
      for (std::size_t j = 0; j < d; ++j) embedding[j] += hv[pos * d + j];
  }
  const double count = static_cast<double>(last - first);
  for (double& v : embedding) v /= count;
  return embedding;
}

}  // namespace clinote
