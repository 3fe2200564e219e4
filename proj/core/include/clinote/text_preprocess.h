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

#ifndef CLINOTE_TEXT_PREPROCESS_H_
#define CLINOTE_TEXT_PREPROCESS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clinote {

struct RawNote {
  std::string note_id;
  std::string admission_id;
  // Hours since admission; absent for corpora without note timestamps.
  std::optional<double> charttime;
  std::string text;
};

struct SegmentedNote {
  std::string note_id;
  std::string admission_id;
  std::optional<double> charttime;
  std::vector<std::string> sentences;
};

// Rule tables for cleaning and sentence splitting. The defaults cover the
// usual MIMIC-style artifacts; every list can be extended per corpus.
struct PreprocessOptions {
  // De-identification span markers; everything from open through close is
  // dropped.
  std::string deid_open = "[**";
  std::string deid_close = "**]";
  // Case-insensitive rewrites applied at a word start.
  std::vector<std::pair<std::string, std::string>> abbreviations = {
      {"m.d.", "MD"}, {"dr.", "Dr"}};
  // Character runs that are removed wherever they occur.
  std::vector<std::string> removed_runs = {"==", "--"};
  // Tokens whose final period never ends a sentence.
  std::vector<std::string> non_terminal_tokens = {
      "p.o.", "q.d.", "b.i.d.", "t.i.d.", "q.i.d.", "p.r.n.", "q.h.s.",
      "i.v.", "e.g.", "i.e.", "vs.",  "mr.",    "mrs.",   "ms.",  "approx."};
  // Units recognized in dose strings such as "20mg." or "0.5mcg.".
  std::vector<std::string> dose_units = {"mg", "mcg", "g",  "kg",    "ml",  "l",
                                         "meq", "iu", "unit", "units", "mmol"};
  std::size_t min_sentence_words = 20;
};

// Lowercases and cleans a note: line breaks become spaces, de-id spans,
// "1.2."-style enumeration tokens and runs such as "==" are removed,
// abbreviations are rewritten and whitespace is collapsed. Idempotent.
std::string Normalize(std::string_view text, const PreprocessOptions& options = {});

// Splits normalized text after '.', '!' or '?' followed by whitespace, unless
// the token ending there is a known non-terminal pattern (abbreviation,
// number, dose string). Joining the result with single spaces gives back the
// input.
std::vector<std::string> Segment(std::string_view normalized,
                                 const PreprocessOptions& options = {});

// Merges every segment shorter than `min_words` into its predecessor. Short
// segments before the first long one are carried forward into it.
std::vector<std::string> FuseShortSegments(const std::vector<std::string>& sentences,
                                           std::size_t min_words = 20);

// Normalize, Segment and FuseShortSegments in sequence.
std::vector<std::string> PreprocessText(std::string_view text,
                                        const PreprocessOptions& options = {});
SegmentedNote PreprocessNote(const RawNote& note, const PreprocessOptions& options = {});

std::size_t CountWords(std::string_view text);
std::vector<std::string> SplitWhitespace(std::string_view text);

}  // namespace clinote

#endif  // CLINOTE_TEXT_PREPROCESS_H_
