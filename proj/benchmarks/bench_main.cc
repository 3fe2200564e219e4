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

#include <string>
#include <vector>

#include "benchmark/benchmark.h"
#include "clinote/encoder.h"
#include "clinote/metrics.h"
#include "clinote/ops.h"
#include "clinote/rng.h"
#include "clinote/synthetic.h"
#include "clinote/tensor.h"
#include "clinote/text_preprocess.h"
#include "clinote/tokenizer.h"

namespace clinote {
namespace {

Tensor RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng, bool grad = false) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.Normal();
  return Tensor::FromValues({rows, cols}, std::move(v), grad);
}

void BM_MatMul(benchmark::State& state) {
  const std::size_t n = state.range(0);
  Rng rng(1);
  const Tensor a = RandomMatrix(n, n, rng), b = RandomMatrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(MatMul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_MatMul)->Arg(32)->Arg(64)->Arg(128);

EncoderConfig BenchConfig(std::size_t d) {
  EncoderConfig c;
  c.num_layers = 2;
  c.num_heads = 2;
  c.model_dim = d;
  c.ff_dim = 2 * d;
  c.max_seq_len = 64;
  c.vocab_size = 500;
  c.dropout_rate = 0.0;
  return c;
}

TokenSequence BenchSequence(std::size_t n, Rng& rng) {
  TokenSequence s;
  for (std::size_t i = 0; i < n; ++i) {
    s.ids.push_back(static_cast<TokenId>(kNumSpecialTokens + rng.UniformIndex(400)));
  }
  s.segment_ids.assign(n, 0);
  return s;
}

void BM_EncoderForward(benchmark::State& state) {
  const EncoderConfig c = BenchConfig(state.range(0));
  Rng rng(2);
  const EncoderParams p = EncoderParams::Initialize(c, rng);
  const TokenSequence s = BenchSequence(64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(Forward(s, p, c).h_cls);
}
BENCHMARK(BM_EncoderForward)->Arg(32)->Arg(64)->Arg(128);

void BM_EncoderForwardBackward(benchmark::State& state) {
  const EncoderConfig c = BenchConfig(state.range(0));
  Rng rng(3);
  const EncoderParams p = EncoderParams::Initialize(c, rng);
  const TokenSequence s = BenchSequence(64, rng);
  for (auto _ : state) {
    Backward(Sum(Forward(s, p, c).h_cls));
    for (Tensor t : p.Parameters()) t.ZeroGrad();
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_Tokenize(benchmark::State& state) {
  Rng rng(4);
  std::vector<std::string> corpus = SyntheticSentences(TextStyle::kClinical, 200, rng);
  for (std::string& s : corpus) s = Normalize(s);
  const Vocabulary vocab = BuildVocabulary(corpus, 500, 400);
  std::size_t bytes = 0;
  for (const std::string& s : corpus) bytes += s.size();
  for (auto _ : state) {
    for (const std::string& s : corpus) benchmark::DoNotOptimize(EncodeIds(s, vocab));
  }
  state.SetBytesProcessed(state.iterations() * bytes);
}
BENCHMARK(BM_Tokenize);

void BM_Auroc(benchmark::State& state) {
  const std::size_t n = state.range(0);
  Rng rng(5);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.Uniform();
    labels[i] = rng.Bernoulli(0.3) ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(Auroc(scores, labels));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

}  // namespace
}  // namespace clinote

BENCHMARK_MAIN();
