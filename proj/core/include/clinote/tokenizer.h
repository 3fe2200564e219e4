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

#ifndef CLINOTE_TOKENIZER_H_
#define CLINOTE_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clinote {

using TokenId = std::size_t;

// Reserved ids; special tokens always occupy the first vocabulary lines.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr TokenId kMaskId = 4;
inline constexpr std::size_t kNumSpecialTokens = 5;
inline constexpr std::string_view kContinuationPrefix = "##";

std::span<const std::string_view> SpecialTokens();

// Bijective token <-> id map. Serialized as one token per line where the
// line number is the id.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Validates that the five specials come first, in reserved order, and that
  // no token repeats or contains whitespace.
  static Vocabulary FromTokens(std::vector<std::string> tokens);
  static Vocabulary Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
  std::string Serialize() const;

  std::optional<TokenId> Find(std::string_view token) const;
  bool Contains(std::string_view token) const { return Find(token).has_value(); }
  const std::string& Token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  static bool IsSpecial(TokenId id) { return id < kNumSpecialTokens; }

  // SHA-256 of the serialized form; stored in checkpoints.
  std::string Digest() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Learns a subword vocabulary by repeated merging of the most frequent
// adjacent symbol pair (ties go to the pair seen first in corpus order).
// Word-internal pieces carry the "##" prefix. Every character seen in the
// corpus is kept in both word-initial and continuation form. Stops after
// `num_merges` merges, at `target_size` entries, or when no pair remains.
//
// Throws ContractError on an empty corpus or when `target_size` cannot hold
// the specials plus the character inventory.
Vocabulary BuildVocabulary(std::span<const std::string> corpus, std::size_t target_size,
                           std::size_t num_merges);

// Splits UTF-8 text into code points (invalid bytes stand alone).
std::vector<std::string_view> SplitCodePoints(std::string_view text);

// Greedy longest-match segmentation of each whitespace-separated word.
// A character with no vocabulary piece becomes [UNK].
std::vector<std::string> Tokenize(std::string_view sentence, const Vocabulary& vocab);
std::vector<TokenId> EncodeIds(std::string_view sentence, const Vocabulary& vocab);
std::string Decode(std::span<const std::string> tokens);
std::string Decode(std::span<const TokenId> ids, const Vocabulary& vocab);

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> segment_ids;

  std::size_t size() const { return ids.size(); }
  // Checks length agreement, max length and nondecreasing 0/1 segments.
  // `require_cls` additionally checks that ids[0] is [CLS].
  void Validate(std::size_t max_len, bool require_cls = true) const;
};

// [CLS] a [SEP] b [SEP], segment 0 up to the first [SEP]. When too long, the
// currently longer side loses its last token until the layout fits.
// Throws ContractError if either side is empty or max_len < 5.
TokenSequence EncodePair(std::span<const TokenId> a, std::span<const TokenId> b,
                         std::size_t max_len);
TokenSequence EncodePair(std::string_view sentence_a, std::string_view sentence_b,
                         const Vocabulary& vocab, std::size_t max_len);
// [CLS] content [SEP], content truncated to fit.
TokenSequence EncodeSingle(std::span<const TokenId> content, std::size_t max_len);

}  // namespace clinote

#endif  // CLINOTE_TOKENIZER_H_
