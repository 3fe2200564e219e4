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

#include "clinote/tokenizer.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "clinote/digest.h"
#include "clinote/error.h"
#include "clinote/text_preprocess.h"

namespace clinote {
namespace {

constexpr std::array<std::string_view, kNumSpecialTokens> kSpecials = {
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

std::size_t CodePointLength(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::string Continuation(std::string_view piece) {
  return std::string(kContinuationPrefix) + std::string(piece);
}

std::string_view StripContinuation(std::string_view token) {
  if (token.starts_with(kContinuationPrefix)) token.remove_prefix(kContinuationPrefix.size());
  return token;
}

}  // namespace

std::span<const std::string_view> SpecialTokens() { return kSpecials; }

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecialTokens) {
    throw FormatError("vocabulary has " + std::to_string(tokens.size()) +
                      " entries, fewer than the special tokens");
  }
  for (std::size_t i = 0; i < kNumSpecialTokens; ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw FormatError("vocabulary line " + std::to_string(i + 1) + " must be " +
                        std::string(kSpecials[i]) + ", found '" + tokens[i] + "'");
    }
  }
  Vocabulary vocab;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t.empty() || std::any_of(t.begin(), t.end(), [](char c) {
          return std::isspace(static_cast<unsigned char>(c)) != 0;
        })) {
      throw FormatError("vocabulary line " + std::to_string(i + 1) +
                        " is empty or contains whitespace");
    }
    if (!vocab.index_.emplace(t, i).second) {
      throw FormatError("vocabulary token '" + t + "' repeats on line " +
                        std::to_string(i + 1));
    }
  }
  vocab.tokens_ = std::move(tokens);
  return vocab;
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return FromTokens(std::move(tokens));
}

std::string Vocabulary::Serialize() const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write vocabulary file " + path.string());
  out << Serialize();
  if (!out) throw FormatError("failed writing vocabulary file " + path.string());
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::Token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw FormatError("token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::string Vocabulary::Digest() const { return Sha256Hex(Serialize()); }

std::vector<std::string_view> SplitCodePoints(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = CodePointLength(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) len = 1;
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary BuildVocabulary(std::span<const std::string> corpus, std::size_t target_size,
                           std::size_t num_merges) {
  // Unique words in first-seen order with their frequencies.
  std::vector<std::vector<std::string>> words;
  std::vector<std::size_t> counts;
  std::map<std::string, std::size_t> word_index;
  for (const std::string& sentence : corpus) {
    for (const std::string& w : SplitWhitespace(sentence)) {
      auto [it, inserted] = word_index.emplace(w, words.size());
      if (inserted) {
        std::vector<std::string> symbols;
        for (std::string_view cp : SplitCodePoints(w)) {
          symbols.push_back(symbols.empty() ? std::string(cp) : Continuation(cp));
        }
        words.push_back(std::move(symbols));
        counts.push_back(0);
      }
      ++counts[it->second];
    }
  }
  if (words.empty()) throw ContractError("cannot build a vocabulary from an empty corpus");

  std::set<std::string> base;
  for (const auto& symbols : words) {
    for (const std::string& s : symbols) {
      const std::string_view bare = StripContinuation(s);
      base.emplace(bare);
      base.insert(Continuation(bare));
    }
  }
  const std::size_t base_size = kNumSpecialTokens + base.size();
  if (target_size < base_size) {
    throw ContractError("target vocabulary size " + std::to_string(target_size) +
                        " cannot hold the " + std::to_string(base_size) +
                        " special and single-character tokens");
  }

  std::vector<std::string> tokens(kSpecials.begin(), kSpecials.end());
  tokens.insert(tokens.end(), base.begin(), base.end());
  std::set<std::string> present(tokens.begin(), tokens.end());

  struct PairStat {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  for (std::size_t merge = 0; merge < num_merges && tokens.size() < target_size; ++merge) {
    std::map<std::pair<std::string, std::string>, PairStat> stats;
    std::size_t order = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& symbols = words[w];
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto [it, inserted] = stats.try_emplace({symbols[i], symbols[i + 1]});
        if (inserted) it->second.first_seen = order;
        it->second.count += counts[w];
        ++order;
      }
    }
    if (stats.empty()) break;
    auto best = stats.begin();
    for (auto it = stats.begin(); it != stats.end(); ++it) {
      if (it->second.count > best->second.count ||
          (it->second.count == best->second.count &&
           it->second.first_seen < best->second.first_seen)) {
        best = it;
      }
    }
    const auto [left, right] = best->first;
    const std::string merged = left + std::string(StripContinuation(right));
    for (auto& symbols : words) {
      std::vector<std::string> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(symbols[i]);
        }
      }
      symbols = std::move(next);
    }
    if (present.insert(merged).second) tokens.push_back(merged);
  }
  return Vocabulary::FromTokens(std::move(tokens));
}

std::vector<std::string> Tokenize(std::string_view sentence, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (const std::string& word : SplitWhitespace(sentence)) {
    const std::vector<std::string_view> cps = SplitCodePoints(word);
    // Byte offset of each code point boundary.
    std::vector<std::size_t> offsets{0};
    for (std::string_view cp : cps) offsets.push_back(offsets.back() + cp.size());
    std::size_t start = 0;
    while (start < cps.size()) {
      std::size_t end = cps.size();
      std::string piece;
      for (; end > start; --end) {
        std::string candidate = word.substr(offsets[start], offsets[end] - offsets[start]);
        if (start > 0) candidate = Continuation(candidate);
        const auto id = vocab.Find(candidate);
        if (id && !Vocabulary::IsSpecial(*id)) {
          piece = std::move(candidate);
          break;
        }
      }
      if (piece.empty()) {
        out.emplace_back(kSpecials[kUnkId]);
        ++start;
      } else {
        out.push_back(std::move(piece));
        start = end;
      }
    }
  }
  return out;
}

std::vector<TokenId> EncodeIds(std::string_view sentence, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const std::string& t : Tokenize(sentence, vocab)) ids.push_back(*vocab.Find(t));
  return ids;
}

std::string Decode(std::span<const std::string> tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    if (t.starts_with(kContinuationPrefix) && !out.empty()) {
      out += StripContinuation(t);
    } else {
      if (!out.empty()) out += ' ';
      out += t;
    }
  }
  return out;
}

std::string Decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) tokens.push_back(vocab.Token(id));
  return Decode(tokens);
}

void TokenSequence::Validate(std::size_t max_len, bool require_cls) const {
  if (ids.size() != segment_ids.size()) {
    throw ContractError("token sequence has " + std::to_string(ids.size()) + " ids but " +
                        std::to_string(segment_ids.size()) + " segment ids");
  }
  if (ids.empty()) throw ContractError("token sequence is empty");
  if (ids.size() > max_len) {
    throw ContractError("token sequence of length " + std::to_string(ids.size()) +
                        " exceeds maximum " + std::to_string(max_len));
  }
  if (require_cls && ids[0] != kClsId) {
    throw ContractError("token sequence does not start with [CLS]");
  }
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    if (segment_ids[i] > 1 || (i > 0 && segment_ids[i] < segment_ids[i - 1])) {
      throw ContractError("segment ids must be 0s followed by 1s");
    }
  }
}

TokenSequence EncodePair(std::span<const TokenId> a, std::span<const TokenId> b,
                         std::size_t max_len) {
  if (max_len < 5) {
    throw ContractError("pair encoding needs max_len >= 5, got " + std::to_string(max_len));
  }
  if (a.empty() || b.empty()) throw ContractError("pair encoding needs two non-empty sides");
  std::size_t len_a = a.size(), len_b = b.size();
  while (len_a + len_b + 3 > max_len) {
    if (len_a > len_b) {
      --len_a;
    } else {
      --len_b;
    }
  }
  TokenSequence seq;
  seq.ids.reserve(len_a + len_b + 3);
  seq.ids.push_back(kClsId);
  seq.ids.insert(seq.ids.end(), a.begin(), a.begin() + len_a);
  seq.ids.push_back(kSepId);
  seq.segment_ids.assign(seq.ids.size(), 0);
  seq.ids.insert(seq.ids.end(), b.begin(), b.begin() + len_b);
  seq.ids.push_back(kSepId);
  seq.segment_ids.resize(seq.ids.size(), 1);
  return seq;
}

TokenSequence EncodePair(std::string_view sentence_a, std::string_view sentence_b,
                         const Vocabulary& vocab, std::size_t max_len) {
  const std::vector<TokenId> a = EncodeIds(sentence_a, vocab);
  const std::vector<TokenId> b = EncodeIds(sentence_b, vocab);
  return EncodePair(a, b, max_len);
}

TokenSequence EncodeSingle(std::span<const TokenId> content, std::size_t max_len) {
  if (max_len < 3) throw ContractError("single encoding needs max_len >= 3");
  if (content.empty()) throw ContractError("single encoding needs content tokens");
  const std::size_t len = std::min(content.size(), max_len - 2);
  TokenSequence seq;
  seq.ids.push_back(kClsId);
  seq.ids.insert(seq.ids.end(), content.begin(), content.begin() + len);
  seq.ids.push_back(kSepId);
  seq.segment_ids.assign(seq.ids.size(), 0);
  return seq;
}

}  // namespace clinote
