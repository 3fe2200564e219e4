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

#ifndef CLINOTE_SYNTHETIC_H_
#define CLINOTE_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "clinote/cohort.h"
#include "clinote/rng.h"
#include "clinote/text_preprocess.h"

namespace clinote {

enum class TextStyle {
  kClinical,   // terse ward notes with doses, abbreviations and de-id markers
  kNarrative,  // everyday prose with a vocabulary disjoint from kClinical
};

// One sentence in the requested style, drawn from a fixed template grammar.
std::string SyntheticSentence(TextStyle style, Rng& rng);
std::vector<std::string> SyntheticSentences(TextStyle style, std::size_t count, Rng& rng);

// Sentences carrying the readmission signal. Both contain the same words;
// only the pairing of "reports"/"denies" with the two findings differs, so
// word counts cannot tell them apart.
std::string PositivePairing();
std::string NegativePairing();

struct SyntheticOptions {
  std::uint64_t seed = 0;
  std::size_t num_patients = 500;
  // Per-note probability that a positive admission's note carries the
  // positive pairing.
  double signal_rate = 0.8;
  double positive_fraction = 0.4;
  std::size_t notes_per_admission = 3;
  std::size_t min_filler_sentences = 3;
  std::size_t max_filler_sentences = 5;
  // Positive admissions get the positive pairing in exactly one note; all
  // other notes carry the negative pairing. signal_rate is ignored.
  bool single_signal_note = false;
};

struct SyntheticCohort {
  std::vector<AdmissionRecord> admissions;  // notes attached
  // Label the generator intended for each admission id.
  std::vector<LabeledAdmission> intended;

  std::vector<RawNote> Notes() const;
};

// Patients get one or two admissions. A positive patient's first stay is
// followed by a readmission 1 to 29 days after discharge; a negative patient
// either has one stay or a second one more than 45 days later. Stays last
// 24 to 240 hours and notes are charted within the stay.
// Throws ContractError for fewer than two patients.
SyntheticCohort GenerateCohort(const SyntheticOptions& options);

}  // namespace clinote

#endif  // CLINOTE_SYNTHETIC_H_
