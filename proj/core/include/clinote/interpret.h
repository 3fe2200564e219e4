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

#ifndef CLINOTE_INTERPRET_H_
#define CLINOTE_INTERPRET_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/encoder.h"
#include "clinote/tokenizer.h"

namespace clinote {

// Post-softmax attention of one head; row = query token, column = key token.
struct AttentionMap {
  std::size_t layer = 0;
  std::size_t head = 0;
  std::vector<std::string> tokens;
  std::vector<double> weights;  // row-major [n, n]

  std::size_t size() const { return tokens.size(); }
  double at(std::size_t query, std::size_t key) const {
    return weights[query * tokens.size() + key];
  }
};

// Normalizes and tokenizes `sentence`, runs it through the encoder without
// [CLS]/[SEP] and returns one map per (layer, head) in layer-major order.
// `captures`, when given, receives the raw per-head queries and keys.
// Throws ContractError for an empty sentence or one longer than max_seq_len.
std::vector<AttentionMap> AttentionMaps(std::string_view sentence, const Vocabulary& vocab,
                                        const EncoderParams& params,
                                        const EncoderConfig& config,
                                        std::vector<AttentionCapture>* captures = nullptr);

struct AttendedCell {
  std::size_t query = 0;
  std::size_t key = 0;
  std::string query_token;
  std::string key_token;
  double weight = 0.0;
};

// The k largest cells, ties broken by (query, key) index. Throws
// ContractError for k == 0.
std::vector<AttendedCell> TopAttended(const AttentionMap& map, std::size_t k);

// CSV: header row of key tokens, then one row per query token. Weights are
// written with 17 significant digits so parsing restores them exactly.
std::string HeatmapCsv(const AttentionMap& map);
// Inverse of HeatmapCsv (layer and head are left at 0). Throws FormatError.
AttentionMap ParseHeatmapCsv(std::string_view csv);

// Grayscale grid, one cell per weight, query tokens along x and key tokens
// along y. Darker means more attention.
std::string HeatmapSvg(const AttentionMap& map);

}  // namespace clinote

#endif  // CLINOTE_INTERPRET_H_
