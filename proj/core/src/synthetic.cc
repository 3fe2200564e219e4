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

#include "clinote/synthetic.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <string_view>

#include "clinote/error.h"

namespace clinote {
namespace {

template <std::size_t N>
std::string_view Pick(const std::array<std::string_view, N>& items, Rng& rng) {
  return items[rng.UniformIndex(N)];
}

int RandomInt(Rng& rng, int low, int high) {
  return low + static_cast<int>(rng.UniformIndex(static_cast<std::size_t>(high - low + 1)));
}

constexpr std::array<std::string_view, 8> kConditions = {
    "chf", "copd", "diabetes", "hypertension", "afib", "ckd", "pneumonia", "cirrhosis"};
constexpr std::array<std::string_view, 6> kComplaints = {
    "weakness", "syncope", "cough", "abdominal discomfort", "confusion", "edema"};
constexpr std::array<std::string_view, 8> kDrugs = {
    "metoprolol", "lisinopril", "furosemide", "heparin",
    "insulin",    "warfarin",   "amlodipine", "vancomycin"};
constexpr std::array<std::string_view, 4> kUnits = {"mg", "mcg", "units", "meq"};
constexpr std::array<std::string_view, 5> kFrequencies = {"q.d.", "b.i.d.", "t.i.d.", "q.i.d.",
                                                          "p.r.n."};
constexpr std::array<std::string_view, 5> kLabs = {"creatinine", "potassium", "sodium",
                                                   "lactate", "troponin"};
constexpr std::array<std::string_view, 5> kFindings = {
    "lungs clear bilaterally", "mild bibasilar crackles", "no peripheral edema",
    "abdomen soft and nontender", "regular rate and rhythm"};

constexpr std::array<std::string_view, 6> kNames = {"anna", "marco", "lena", "tom", "ines",
                                                    "felix"};
constexpr std::array<std::string_view, 6> kPlaces = {"harbor", "market", "garden", "station",
                                                     "library", "bakery"};
constexpr std::array<std::string_view, 6> kObjects = {"kite", "bicycle", "umbrella", "lantern",
                                                      "guitar", "basket"};
constexpr std::array<std::string_view, 6> kAdjectives = {"bright", "quiet", "crowded", "windy",
                                                         "golden", "cozy"};
constexpr std::array<std::string_view, 6> kVerbs = {"painted", "carried", "borrowed", "repaired",
                                                    "admired", "sold"};
constexpr std::array<std::string_view, 4> kTimes = {"morning", "afternoon", "evening",
                                                    "weekend"};

std::string ClinicalSentence(Rng& rng) {
  char buf[256];
  switch (rng.UniformIndex(7)) {
    case 0:
      std::snprintf(buf, sizeof(buf), "Pt is a %d yo %s with h/o %s admitted for %s.",
                    RandomInt(rng, 40, 90), rng.Bernoulli(0.5) ? "man" : "woman",
                    Pick(kConditions, rng).data(), Pick(kComplaints, rng).data());
      break;
    case 1:
      std::snprintf(buf, sizeof(buf), "Started %s %d %s p.o. %s for %s.", Pick(kDrugs, rng).data(),
                    5 * RandomInt(rng, 1, 40), Pick(kUnits, rng).data(),
                    Pick(kFrequencies, rng).data(), Pick(kConditions, rng).data());
      break;
    case 2:
      std::snprintf(buf, sizeof(buf), "Exam: %s, %s.", Pick(kFindings, rng).data(),
                    Pick(kFindings, rng).data());
      break;
    case 3:
      std::snprintf(buf, sizeof(buf), "Seen by Dr. [**Name %d**] on [**2101-%02d-%02d**].",
                    RandomInt(rng, 1, 99), RandomInt(rng, 1, 12), RandomInt(rng, 1, 28));
      break;
    case 4:
      std::snprintf(buf, sizeof(buf), "Labs notable for %s of %d.%d, trending %s.",
                    Pick(kLabs, rng).data(), RandomInt(rng, 1, 9), RandomInt(rng, 0, 9),
                    rng.Bernoulli(0.5) ? "up" : "down");
      break;
    case 5:
      std::snprintf(buf, sizeof(buf), "Plan -- continue %s %d mg i.v. %s and recheck %s.",
                    Pick(kDrugs, rng).data(), 10 * RandomInt(rng, 1, 20),
                    Pick(kFrequencies, rng).data(), Pick(kLabs, rng).data());
      break;
    default:
      std::snprintf(buf, sizeof(buf), "Discussed with M.D. team, %s remains stable.",
                    Pick(kConditions, rng).data());
      break;
  }
  return buf;
}

std::string NarrativeSentence(Rng& rng) {
  char buf[256];
  switch (rng.UniformIndex(4)) {
    case 0:
      std::snprintf(buf, sizeof(buf), "On a %s %s, %s %s a %s near the %s.",
                    Pick(kAdjectives, rng).data(), Pick(kTimes, rng).data(),
                    Pick(kNames, rng).data(), Pick(kVerbs, rng).data(),
                    Pick(kObjects, rng).data(), Pick(kPlaces, rng).data());
      break;
    case 1:
      std::snprintf(buf, sizeof(buf), "The %s %s was full of people looking for a %s.",
                    Pick(kAdjectives, rng).data(), Pick(kPlaces, rng).data(),
                    Pick(kObjects, rng).data());
      break;
    case 2:
      std::snprintf(buf, sizeof(buf), "%s and %s walked to the %s every %s.",
                    Pick(kNames, rng).data(), Pick(kNames, rng).data(),
                    Pick(kPlaces, rng).data(), Pick(kTimes, rng).data());
      break;
    default:
      std::snprintf(buf, sizeof(buf), "Everyone agreed the %s %s looked %s today.",
                    Pick(kNames, rng).data(), Pick(kObjects, rng).data(),
                    Pick(kAdjectives, rng).data());
      break;
  }
  std::string s = buf;
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string MakeNote(const SyntheticOptions& options, bool signal, Rng& rng) {
  const std::size_t filler = options.min_filler_sentences +
                             rng.UniformIndex(options.max_filler_sentences -
                                              options.min_filler_sentences + 1);
  const std::size_t signal_at = rng.UniformIndex(filler + 1);
  std::string text;
  for (std::size_t i = 0; i <= filler; ++i) {
    if (!text.empty()) text += rng.Bernoulli(0.2) ? "\n" : " ";
    text += i == signal_at ? (signal ? PositivePairing() : NegativePairing())
                           : ClinicalSentence(rng);
  }
  return text;
}

}  // namespace

std::string SyntheticSentence(TextStyle style, Rng& rng) {
  return style == TextStyle::kClinical ? ClinicalSentence(rng) : NarrativeSentence(rng);
}

std::vector<std::string> SyntheticSentences(TextStyle style, std::size_t count, Rng& rng) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(SyntheticSentence(style, rng));
  return out;
}

std::string PositivePairing() { return "Pt reports chest pain and denies dyspnea."; }
std::string NegativePairing() { return "Pt denies chest pain and reports dyspnea."; }

std::vector<RawNote> SyntheticCohort::Notes() const {
  std::vector<RawNote> out;
  for (const AdmissionRecord& a : admissions) out.insert(out.end(), a.notes.begin(), a.notes.end());
  return out;
}

SyntheticCohort GenerateCohort(const SyntheticOptions& options) {
  if (options.num_patients < 2) throw ContractError("synthetic cohort needs at least 2 patients");
  if (options.notes_per_admission == 0) throw ContractError("admissions need at least one note");
  if (options.max_filler_sentences < options.min_filler_sentences) {
    throw ContractError("max_filler_sentences is below min_filler_sentences");
  }
  using std::chrono::hours;
  const Rng root(options.seed);
  SyntheticCohort cohort;
  const TimePoint epoch = ParseIsoTimestamp("2100-01-01T00:00:00Z");
  std::size_t note_counter = 0;

  auto add_admission = [&](Rng& rng, const std::string& patient, std::size_t index,
                           TimePoint admit, int label) {
    AdmissionRecord a;
    a.patient_id = patient;
    char id[64];
    std::snprintf(id, sizeof(id), "%s-a%zu", patient.c_str(), index);
    a.admission_id = id;
    a.admit_time = admit;
    const int duration = RandomInt(rng, 24, 240);
    a.discharge_time = admit + hours(duration);
    const std::size_t notes = options.notes_per_admission;
    const std::size_t signal_note = rng.UniformIndex(notes);
    std::vector<double> times;
    for (std::size_t i = 0; i < notes; ++i) times.push_back(rng.Uniform() * duration);
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i < notes; ++i) {
      bool signal = false;
      if (label == 1) {
        signal = options.single_signal_note ? i == signal_note : rng.Bernoulli(options.signal_rate);
      }
      char note_id[32];
      std::snprintf(note_id, sizeof(note_id), "n%06zu", ++note_counter);
      // Whole minutes keep the JSON text short and exact.
      const double charttime = static_cast<double>(static_cast<int>(times[i] * 60.0)) / 60.0;
      a.notes.push_back({note_id, a.admission_id, charttime, MakeNote(options, signal, rng)});
    }
    cohort.intended.push_back({patient, a.admission_id, label});
    cohort.admissions.push_back(std::move(a));
    return cohort.admissions.back().discharge_time;
  };

  for (std::size_t p = 0; p < options.num_patients; ++p) {
    Rng rng = root.Split(p + 1);
    char patient[32];
    std::snprintf(patient, sizeof(patient), "p%05zu", p);
    const bool positive = rng.Bernoulli(options.positive_fraction);
    const TimePoint admit = epoch + hours(RandomInt(rng, 0, 2 * 365 * 24));
    const TimePoint discharged = add_admission(rng, patient, 1, admit, positive ? 1 : 0);
    if (positive) {
      const TimePoint next = discharged + hours(24 * RandomInt(rng, 1, 28) + RandomInt(rng, 0, 23));
      add_admission(rng, patient, 2, next, 0);
    } else if (rng.Bernoulli(0.3)) {
      const TimePoint next = discharged + hours(24 * RandomInt(rng, 46, 365));
      add_admission(rng, patient, 2, next, 0);
    }
  }
  return cohort;
}

}  // namespace clinote
