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
#include <map>
#include <string>
#include <vector>

#include "clinote/error.h"
#include "clinote/metrics.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace clinote {
namespace {

using ::clinote::testing::ToVector;

double EqThree(const std::vector<double>& p, double c) {
  double mx = 0, sum = 0;
  for (double v : p) {
    mx = std::max(mx, v);
    sum += v;
  }
  const double n = static_cast<double>(p.size());
  return (mx + sum / n * n / c) / (1.0 + n / c);
}

EncoderConfig SmallConfig() {
  EncoderConfig c;
  c.num_layers = 1;
  c.num_heads = 2;
  c.model_dim = 16;
  c.ff_dim = 32;
  c.max_seq_len = 12;
  c.vocab_size = 20;
  c.dropout_rate = 0.0;
  return c;
}

TEST(AggregateTest, WorkedExamples) {
  EXPECT_EQ(Aggregate(std::vector<double>{0.37}), 0.37);
  EXPECT_NEAR(Aggregate(std::vector<double>{0.8, 0.0}), 0.6, 1e-15);
  EXPECT_NEAR(Aggregate(std::vector<double>{0.9, 0.1, 0.1, 0.1}), 0.5, 1e-15);
}

TEST(AggregateTest, SingletonIsIdentityForAnyC) {
  Rng rng(61);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.Uniform();
    for (double c : {0.5, 1.0, 2.0, 4.0}) EXPECT_EQ(Aggregate(std::vector<double>{p}, c), p);
  }
}

TEST(AggregatePropertyTest, BoundedMonotoneAndMatchesFormula) {
  Rng rng(62);
  const double cs[] = {0.5, 1.0, 2.0, 4.0};
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.UniformIndex(50);
    const double c = cs[rng.UniformIndex(4)];
    std::vector<double> p(n);
    for (double& v : p) v = rng.Uniform();
    const double r = Aggregate(p, c);
    const double mx = *std::max_element(p.begin(), p.end());
    double mean = 0;
    for (double v : p) mean += v / static_cast<double>(n);
    EXPECT_GE(r, std::min(mean, mx) - 1e-12);
    EXPECT_LE(r, mx);
    EXPECT_NEAR(r, EqThree(p, c), 1e-12);
    std::vector<double> up = p;
    const std::size_t k = rng.UniformIndex(n);
    up[k] = up[k] + (1.0 - up[k]) * rng.Uniform();
    EXPECT_GE(Aggregate(up, c), r - 1e-12);
  }
}

TEST(AggregateTest, RejectsBadInputs) {
  EXPECT_THROW(Aggregate(std::vector<double>{}), ContractError);
  EXPECT_THROW(Aggregate(std::vector<double>{1.2}), ContractError);
  EXPECT_THROW(Aggregate(std::vector<double>{0.5}, 0.0), ContractError);
  EXPECT_THROW(Aggregate(std::vector<double>{std::nan("")}), ContractError);
}

TEST(AggregatePredictionTest, RecordsParts) {
  const PatientPrediction p = AggregatePrediction("a", {0.8, 0.0});
  EXPECT_TRUE(p.scorable);
  EXPECT_EQ(p.n(), 2u);
  EXPECT_EQ(p.p_max, 0.8);
  EXPECT_EQ(p.p_mean, 0.4);
  EXPECT_NEAR(p.risk, 0.6, 1e-15);
  const PatientPrediction q = NotScorable("b", "no notes");
  EXPECT_FALSE(q.scorable);
  EXPECT_EQ(q.status, "no notes");
}

TEST(SplitTest, ThreeHundredTokensGiveThreeChunks) {
  const std::vector<TokenId> tokens(300, 7);
  const std::vector<TokenSequence> parts = SplitSubsequences(tokens, 128);
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].size(), 128u);
  EXPECT_EQ(parts[1].size(), 128u);
  EXPECT_EQ(parts[2].size(), 300u - 2 * 126 + 2);
  for (const TokenSequence& s : parts) {
    EXPECT_EQ(s.ids.front(), kClsId);
    EXPECT_EQ(s.ids.back(), kSepId);
    EXPECT_NO_THROW(s.Validate(128));
  }
}

TEST(SplitTest, ConcatenationRestoresTokens) {
  std::vector<TokenId> tokens;
  for (TokenId i = 0; i < 57; ++i) tokens.push_back(5 + i % 11);
  std::vector<TokenId> back;
  for (const TokenSequence& s : SplitSubsequences(tokens, 10)) {
    back.insert(back.end(), s.ids.begin() + 1, s.ids.end() - 1);
  }
  EXPECT_EQ(back, tokens);
}

TEST(SplitTest, Errors) {
  EXPECT_THROW(SplitSubsequences(std::vector<TokenId>{}, 10), ContractError);
  EXPECT_THROW(SplitSubsequences(std::vector<TokenId>{5}, 2), ContractError);
}

TEST(HeadTest, ShapesFollowMode) {
  EXPECT_EQ(MlpHiddenWidth(768), 2048u);
  EXPECT_EQ(MlpHiddenWidth(128), 341u);
  const EncoderConfig c = SmallConfig();
  Rng rng(63);
  const ReadmissionHead mlp = ReadmissionHead::Initialize(HeadMode::kMlp, c, rng);
  ASSERT_EQ(mlp.weights.size(), 3u);
  EXPECT_EQ(mlp.weights[0].shape(), (Shape{16, 43}));
  EXPECT_EQ(mlp.weights[1].shape(), (Shape{43, 16}));
  EXPECT_EQ(mlp.weights[2].shape(), (Shape{16, 1}));
  const ReadmissionHead linear = ReadmissionHead::Initialize(HeadMode::kLinear, c, rng);
  ASSERT_EQ(linear.weights.size(), 1u);
  EXPECT_EQ(linear.weights[0].shape(), (Shape{16, 1}));
  EXPECT_EQ(ParseHeadMode("linear"), HeadMode::kLinear);
  EXPECT_EQ(HeadModeName(HeadMode::kMlp), "mlp");
  EXPECT_THROW(ParseHeadMode("deep"), FormatError);
}

TEST(HeadTest, NamedRoundTrip) {
  const EncoderConfig c = SmallConfig();
  Rng rng(64);
  const ReadmissionHead h = ReadmissionHead::Initialize(HeadMode::kMlp, c, rng);
  const ReadmissionHead g = ReadmissionHead::FromNamed(HeadMode::kMlp, c, h.Named());
  const Tensor x = Tensor::FromValues({1, 16}, std::vector<double>(16, 0.3));
  EXPECT_EQ(g.Logit(x, c).item(), h.Logit(x, c).item());
  EXPECT_THROW(ReadmissionHead::FromNamed(HeadMode::kLinear, c, h.Named()), DimensionError);
}

TEST(PredictTest, ZeroHeadGivesOneHalf) {
  const EncoderConfig c = SmallConfig();
  Rng rng(65);
  const EncoderParams params = EncoderParams::Initialize(c, rng);
  const std::vector<TokenId> tokens = {5, 6, 7, 8};
  for (HeadMode mode : {HeadMode::kLinear, HeadMode::kMlp}) {
    EXPECT_EQ(PredictSubsequence(SplitSubsequences(tokens, 12)[0], params, c,
                                 ReadmissionHead::Zeros(mode, c)),
              0.5);
  }
}

TEST(PredictTest, LinearHeadLogitOracle) {
  const EncoderConfig c = SmallConfig();
  Rng rng(66);
  const EncoderParams params = EncoderParams::Initialize(c, rng);
  ReadmissionHead head = ReadmissionHead::Zeros(HeadMode::kLinear, c);
  head.biases[0].mutable_values()[0] = 10.0;
  const double p = PredictSubsequence(SplitSubsequences(std::vector<TokenId>{5}, 12)[0], params,
                                      c, head);
  EXPECT_NEAR(p, 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
  EXPECT_NEAR(p, 0.9999546, 1e-7);
  // With weights, the logit is w . h_cls + b.
  Rng w(67);
  for (double& v : head.weights[0].mutable_values()) v = w.Normal();
  const TokenSequence seq = SplitSubsequences(std::vector<TokenId>{5, 9, 11}, 12)[0];
  const std::vector<double> h = ToVector(Forward(seq, params, c).h_cls.values());
  double logit = 10.0;
  for (std::size_t j = 0; j < h.size(); ++j) logit += h[j] * head.weights[0].values()[j];
  EXPECT_NEAR(PredictSubsequence(seq, params, c, head), 1.0 / (1.0 + std::exp(-logit)), 1e-14);
}

RawNote Note(const std::string& id, std::optional<double> t, const std::string& text) {
  return {id, "a", t, text};
}

TEST(AdmissionTokensTest, OrdersNotesByCharttime) {
  const Vocabulary v = Vocabulary::FromTokens(
      {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "first", "second", "third"});
  const std::vector<RawNote> notes = {Note("n1", std::nullopt, "Third"), Note("n2", 5.0, "second"),
                                      Note("n3", 1.0, "FIRST")};
  EXPECT_EQ(AdmissionTokens(notes, v), (std::vector<TokenId>{5, 6, 7}));
}

AdmissionRecord Admission(double hours, std::vector<RawNote> notes) {
  AdmissionRecord r;
  r.admission_id = "a";
  r.admit_time = ParseIsoTimestamp("2100-01-01T00:00:00");
  r.discharge_time = r.admit_time + std::chrono::seconds(static_cast<long>(hours * 3600));
  r.notes = std::move(notes);
  return r;
}

TEST(SelectNotesTest, DischargeAndCutoffModes) {
  const AdmissionRecord a =
      Admission(100, {Note("n1", 10.0, "x"), Note("n2", 40.0, "y"), Note("n3", 60.0, "z")});
  EXPECT_EQ(SelectNotes(a, {}).notes.size(), 3u);
  const SelectedNotes cut = SelectNotes(a, {NoteSelection::Kind::kCutoff, 48});
  ASSERT_TRUE(cut.scorable);
  EXPECT_EQ(cut.notes.size(), 2u);
  const SelectedNotes short_stay =
      SelectNotes(Admission(30, {Note("n1", 10.0, "x")}), {NoteSelection::Kind::kCutoff, 48});
  EXPECT_FALSE(short_stay.scorable);
  EXPECT_EQ(short_stay.status, "discharged within 48h");
  const SelectedNotes none = SelectNotes(Admission(100, {Note("n1", 60.0, "x")}),
                                         {NoteSelection::Kind::kCutoff, 48});
  EXPECT_FALSE(none.scorable);
  EXPECT_EQ(none.status, "no notes");
  EXPECT_EQ((NoteSelection{NoteSelection::Kind::kCutoff, 72}.Name()), "cutoff-72h");
}

// Sequences of ids 5..9 are positive, 10..14 negative; lengths vary.
std::vector<LabeledSequence> SeparableSet(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<TokenId> tokens(2 + rng.UniformIndex(6));
    for (TokenId& t : tokens) t = (label ? 5 : 10) + rng.UniformIndex(5);
    out.push_back({"adm" + std::to_string(i), SplitSubsequences(tokens, 12)[0], label});
  }
  return out;
}

FinetuneOptions FastOptions() {
  FinetuneOptions o;
  o.epochs = 3;
  o.batch_size = 4;
  o.learning_rate = 3e-3;
  o.seed = 68;
  return o;
}

TEST(FinetuneTest, SeparatesSeparableSequences) {
  const EncoderConfig c = SmallConfig();
  Rng rng(69);
  const EncoderParams pre = EncoderParams::Initialize(c, rng);
  const auto train = SeparableSet(40, 1), validation = SeparableSet(10, 2);
  const FinetuneResult r = Finetune(train, validation, pre, c, FastOptions());
  EXPECT_EQ(r.train_loss.size(), 3u);
  EXPECT_EQ(r.validation_loss.size(), 3u);
  EXPECT_GE(r.best_epoch, 1u);
  EXPECT_EQ(r.validation_loss[r.best_epoch - 1],
            *std::min_element(r.validation_loss.begin(), r.validation_loss.end()));
  const auto test = SeparableSet(20, 3);
  const SequenceEvaluation e = EvaluateSequences(test, r.params, c, r.head);
  std::vector<int> labels;
  for (const auto& s : test) labels.push_back(s.label);
  EXPECT_EQ(Auroc(e.probabilities, labels), 1.0);
  EXPECT_EQ(e.accuracy, 1.0);
  EXPECT_NEAR(e.mean_loss, r.validation_loss[r.best_epoch - 1], 0.2);
}

TEST(FinetuneTest, DeterministicForSeed) {
  const EncoderConfig c = SmallConfig();
  Rng rng(70);
  const EncoderParams pre = EncoderParams::Initialize(c, rng);
  const auto train = SeparableSet(16, 4), validation = SeparableSet(4, 5);
  FinetuneOptions o = FastOptions();
  o.epochs = 1;
  const FinetuneResult a = Finetune(train, validation, pre, c, o);
  const FinetuneResult b = Finetune(train, validation, pre, c, o);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(ToVector(a.params.token_embedding.values()),
            ToVector(b.params.token_embedding.values()));
  Rng again(70);
  EXPECT_EQ(ToVector(pre.token_embedding.values()),
            ToVector(EncoderParams::Initialize(c, again).token_embedding.values()));
}

TEST(FinetuneTest, Errors) {
  const EncoderConfig c = SmallConfig();
  Rng rng(71);
  const EncoderParams pre = EncoderParams::Initialize(c, rng);
  auto train = SeparableSet(8, 6);
  const auto validation = SeparableSet(4, 7);
  EXPECT_THROW(Finetune(train, {}, pre, c, FastOptions()), ContractError);
  for (auto& s : train) s.label = 1;
  EXPECT_THROW(Finetune(train, validation, pre, c, FastOptions()), ContractError);
}

TEST(ScalingConstantTest, PicksBestAurocAndKeepsEarlierOnTies) {
  // Patient 0 is positive with one confident chunk among weak ones. At
  // c = 0.5 the mean dominates and its risk 0.383 falls below patient 1's
  // 0.4; from c = 1 on it ranks first.
  const std::vector<std::vector<double>> probs = {{0.95, 0.1, 0.1, 0.1}, {0.4, 0.4, 0.4, 0.4}};
  const std::vector<int> labels = {1, 0};
  EXPECT_EQ(SelectScalingConstant(probs, labels, std::vector<double>{0.5, 1.0, 2.0, 1000.0}),
            1.0);
  EXPECT_EQ(SelectScalingConstant(probs, labels, std::vector<double>{1000.0, 2.0}), 1000.0);
}

}  // namespace
}  // namespace clinote
