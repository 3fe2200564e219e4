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

#include "clinote/interpret.h"

#include <cmath>
#include <string>
#include <vector>

#include "clinote/error.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace clinote {
namespace {

using ::clinote::testing::ToVector;

class InterpretTest : public ::testing::Test {
 protected:
  void SetUp() override {
    vocab_ = Vocabulary::FromTokens({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "chronic",
                                     "heart", "failure", "pain", "c", "##h", "##r"});
    config_.num_layers = 3;
    config_.num_heads = 2;
    config_.model_dim = 8;
    config_.ff_dim = 16;
    config_.max_seq_len = 6;
    config_.vocab_size = vocab_.size();
    config_.dropout_rate = 0.0;
    Rng rng(81);
    params_ = EncoderParams::Initialize(config_, rng);
    for (Tensor t : params_.Parameters())
      for (double& v : t.mutable_values()) v += 0.5 * rng.Normal();
  }
  Vocabulary vocab_;
  EncoderConfig config_;
  EncoderParams params_;
};

TEST_F(InterpretTest, OneRowStochasticMapPerLayerAndHead) {
  const auto maps = AttentionMaps("Chronic heart failure pain", vocab_, params_, config_);
  ASSERT_EQ(maps.size(), 6u);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    EXPECT_EQ(maps[i].layer, i / 2);
    EXPECT_EQ(maps[i].head, i % 2);
    EXPECT_EQ(maps[i].tokens, (std::vector<std::string>{"chronic", "heart", "failure", "pain"}));
    ASSERT_EQ(maps[i].weights.size(), 16u);
    for (std::size_t q = 0; q < 4; ++q) {
      double sum = 0;
      for (std::size_t k = 0; k < 4; ++k) sum += maps[i].at(q, k);
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
}

TEST_F(InterpretTest, SingleTokenGivesUnitMaps) {
  for (const AttentionMap& m : AttentionMaps("heart", vocab_, params_, config_)) {
    EXPECT_EQ(m.weights, std::vector<double>{1.0});
  }
}

TEST_F(InterpretTest, MatchesRecomputationFromCapturedQueriesAndKeys) {
  std::vector<AttentionCapture> captures;
  const auto maps = AttentionMaps("chronic heart pain", vocab_, params_, config_, &captures);
  ASSERT_EQ(captures.size(), maps.size());
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const Tensor& q = captures[m].queries;
    const Tensor& k = captures[m].keys;
    const std::size_t n = q.dim(0), dh = q.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(n);
      double z = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t t = 0; t < dh; ++t) s += q.at(i, t) * k.at(j, t);
        row[j] = std::exp(s / std::sqrt(static_cast<double>(dh)));
        z += row[j];
      }
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(maps[m].at(i, j), row[j] / z, 1e-9);
    }
  }
}

TEST_F(InterpretTest, CaptureDoesNotChangeClsState) {
  TokenSequence s;
  s.ids = {kClsId, 5, 6, 7, kSepId};
  s.segment_ids.assign(5, 0);
  ForwardOptions on;
  on.capture_attention = true;
  EXPECT_EQ(ToVector(Forward(s, params_, config_, on).h_cls.values()),
            ToVector(Forward(s, params_, config_).h_cls.values()));
}

TEST_F(InterpretTest, Errors) {
  EXPECT_THROW(AttentionMaps("  ", vocab_, params_, config_), ContractError);
  EXPECT_THROW(AttentionMaps("pain pain pain pain pain pain pain", vocab_, params_, config_),
               ContractError);
}

AttentionMap Uniform(std::size_t n) {
  AttentionMap m;
  for (std::size_t i = 0; i < n; ++i) m.tokens.push_back("t" + std::to_string(i));
  m.weights.assign(n * n, 1.0 / static_cast<double>(n));
  return m;
}

TEST(TopAttendedTest, UniformMapKeepsIndexOrder) {
  const auto top = TopAttended(Uniform(3), 4);
  ASSERT_EQ(top.size(), 4u);
  EXPECT_EQ(top[0].query, 0u);
  EXPECT_EQ(top[0].key, 0u);
  EXPECT_EQ(top[1].key, 1u);
  EXPECT_EQ(top[3].query, 1u);
  EXPECT_EQ(top[3].key, 0u);
}

TEST(TopAttendedTest, PlantedMaximumComesFirst) {
  AttentionMap m;
  m.tokens = {"chronic", "heart", "failure"};
  m.weights = {0.2, 0.7, 0.1, 0.3, 0.3, 0.4, 0.5, 0.25, 0.25};
  const auto top = TopAttended(m, 2);
  EXPECT_EQ(top[0].query_token, "chronic");
  EXPECT_EQ(top[0].key_token, "heart");
  EXPECT_EQ(top[0].weight, 0.7);
  EXPECT_EQ(top[1].weight, 0.5);
}

TEST(TopAttendedTest, LargeKReturnsAllSorted) {
  AttentionMap m;
  m.tokens = {"a", "b"};
  m.weights = {0.4, 0.6, 0.9, 0.1};
  const auto top = TopAttended(m, 10);
  ASSERT_EQ(top.size(), 4u);
  for (std::size_t i = 1; i < top.size(); ++i) EXPECT_GE(top[i - 1].weight, top[i].weight);
  EXPECT_THROW(TopAttended(m, 0), ContractError);
}

TEST(HeatmapTest, CsvLayoutAndExactRoundTrip) {
  AttentionMap m;
  m.tokens = {"heart", "fail,ure"};
  m.weights = {0.1, 0.9, 1.0 / 3.0, 2.0 / 3.0};
  const std::string csv = HeatmapCsv(m);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  EXPECT_EQ(lines, 3u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), ",heart,\"fail,ure\"");
  const AttentionMap back = ParseHeatmapCsv(csv);
  EXPECT_EQ(back.tokens, m.tokens);
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_THROW(ParseHeatmapCsv(",a\nb,0.5,0.5\n"), FormatError);
}

TEST(HeatmapTest, SvgHasOneCellPerWeight) {
  const std::string svg = HeatmapSvg(Uniform(3));
  std::size_t cells = 0;
  for (std::size_t pos = svg.find("class=\"cell\""); pos != std::string::npos;
       pos = svg.find("class=\"cell\"", pos + 1)) {
    ++cells;
  }
  EXPECT_EQ(cells, 9u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

}  // namespace
}  // namespace clinote
