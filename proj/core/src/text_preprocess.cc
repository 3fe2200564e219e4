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

#include "clinote/text_preprocess.h"

#include <algorithm>
#include <cctype>

namespace clinote {
namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
char Lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(),
                    [](char x, char y) { return Lower(x) == Lower(y); });
}

std::string RemoveDeidSpans(std::string_view text, const PreprocessOptions& o) {
  if (o.deid_open.empty() || o.deid_close.empty()) return std::string(text);
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find(o.deid_open, pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find(o.deid_close, open + o.deid_open.size());
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    out.push_back(' ');
    pos = close + o.deid_close.size();
  }
  out.append(text.substr(pos));
  return out;
}

std::string RewriteAbbreviations(std::string_view text, const PreprocessOptions& o) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool rewritten = false;
    if (i == 0 || !IsAlnum(text[i - 1])) {
      for (const auto& [pattern, replacement] : o.abbreviations) {
        if (pattern.empty() || !EqualsIgnoreCase(text.substr(i, pattern.size()), pattern)) {
          continue;
        }
        out.append(replacement);
        i += pattern.size();
        if (i < text.size() && IsAlnum(text[i])) out.push_back(' ');
        rewritten = true;
        break;
      }
    }
    if (!rewritten) out.push_back(text[i++]);
  }
  return out;
}

// "1.2." / "3.1.4." list markers: digits separated by periods, ending in one.
bool IsEnumerationToken(std::string_view token) {
  if (token.size() < 4 || token.back() != '.') return false;
  std::size_t groups = 0;
  std::size_t i = 0;
  while (i < token.size()) {
    const std::size_t start = i;
    while (i < token.size() && IsDigit(token[i])) ++i;
    if (i == start || i >= token.size() || token[i] != '.') return false;
    ++i;
    ++groups;
  }
  return groups >= 2;
}

std::string RemoveEnumerations(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (IsSpace(text[i])) {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t end = i;
    while (end < text.size() && !IsSpace(text[end])) ++end;
    const std::string_view token = text.substr(i, end - i);
    if (!IsEnumerationToken(token)) out.append(token);
    i = end;
  }
  return out;
}

std::string RemoveRuns(std::string text, const PreprocessOptions& o) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const std::string& run : o.removed_runs) {
      if (run.empty()) continue;
      std::size_t pos;
      while ((pos = text.find(run)) != std::string::npos) {
        text.replace(pos, run.size(), " ");
        changed = true;
      }
    }
  }
  return text;
}

std::string CollapseWhitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (IsSpace(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string NormalizeOnce(std::string_view input, const PreprocessOptions& o) {
  std::string text(input);
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '\r' || c == '\n'; }, ' ');
  text = RemoveDeidSpans(text, o);
  text = RewriteAbbreviations(text, o);
  text = RemoveEnumerations(text);
  text = RemoveRuns(std::move(text), o);
  std::transform(text.begin(), text.end(), text.begin(), Lower);
  return CollapseWhitespace(text);
}

bool IsNumberToken(std::string_view body) {
  // digits with at most one interior decimal point
  if (body.empty() || !IsDigit(body.front()) || !IsDigit(body.back())) return false;
  bool seen_point = false;
  for (char c : body) {
    if (c == '.') {
      if (seen_point) return false;
      seen_point = true;
    } else if (!IsDigit(c)) {
      return false;
    }
  }
  return true;
}

bool IsNonTerminal(std::string_view token, const PreprocessOptions& o) {
  for (const std::string& t : o.non_terminal_tokens) {
    if (token.size() >= t.size() && token.substr(token.size() - t.size()) == t &&
        (token.size() == t.size() || !IsAlnum(token[token.size() - t.size() - 1]))) {
      return true;
    }
  }
  // Strip the period and any leading bracket before looking for numbers.
  std::string_view body = token.substr(0, token.size() - 1);
  while (!body.empty() && !IsAlnum(body.front())) body.remove_prefix(1);
  if (IsNumberToken(body)) return true;
  for (const std::string& unit : o.dose_units) {
    if (body.size() > unit.size() && body.substr(body.size() - unit.size()) == unit &&
        IsNumberToken(body.substr(0, body.size() - unit.size()))) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string Normalize(std::string_view text, const PreprocessOptions& options) {
  std::string current = NormalizeOnce(text, options);
  // Each later pass can only shorten the string, so this terminates.
  while (true) {
    std::string next = NormalizeOnce(current, options);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::vector<std::string> Segment(std::string_view text, const PreprocessOptions& options) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  std::size_t token_start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (IsSpace(c)) {
      token_start = i + 1;
      continue;
    }
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 >= text.size() || !IsSpace(text[i + 1])) continue;
    if (c == '.' && IsNonTerminal(text.substr(token_start, i + 1 - token_start), options)) {
      continue;
    }
    std::string sentence = CollapseWhitespace(text.substr(start, i + 1 - start));
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
    start = i + 1;
  }
  std::string tail = CollapseWhitespace(text.substr(std::min(start, text.size())));
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

std::vector<std::string> FuseShortSegments(const std::vector<std::string>& sentences,
                                           std::size_t min_words) {
  std::vector<std::string> fused;
  std::string carry;
  for (const std::string& s : sentences) {
    if (s.empty()) continue;
    const bool is_short = CountWords(s) < min_words;
    if (is_short && !fused.empty()) {
      fused.back() += ' ';
      fused.back() += s;
      continue;
    }
    if (is_short) {
      carry = carry.empty() ? s : carry + ' ' + s;
      continue;
    }
    fused.push_back(carry.empty() ? s : carry + ' ' + s);
    carry.clear();
  }
  if (!carry.empty()) fused.push_back(std::move(carry));
  return fused;
}

std::vector<std::string> PreprocessText(std::string_view text,
                                        const PreprocessOptions& options) {
  return FuseShortSegments(Segment(Normalize(text, options), options),
                           options.min_sentence_words);
}

SegmentedNote PreprocessNote(const RawNote& note, const PreprocessOptions& options) {
  return SegmentedNote{note.note_id, note.admission_id, note.charttime,
                       PreprocessText(note.text, options)};
}

std::size_t CountWords(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (IsSpace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    std::size_t end = i;
    while (end < text.size() && !IsSpace(text[end])) ++end;
    if (end > i) words.emplace_back(text.substr(i, end - i));
    i = end;
  }
  return words;
}

}  // namespace clinote
