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

#ifndef CLINOTE_COHORT_H_
#define CLINOTE_COHORT_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/text_preprocess.h"

namespace clinote {

using TimePoint = std::chrono::sys_seconds;

// Accepts "YYYY-MM-DDTHH:MM:SS" with an optional trailing 'Z' (a space may
// replace the 'T'). Throws FormatError otherwise.
TimePoint ParseIsoTimestamp(std::string_view text);
std::string FormatIsoTimestamp(TimePoint t);

struct AdmissionRecord {
  std::string patient_id;
  std::string admission_id;
  TimePoint admit_time{};
  TimePoint discharge_time{};
  bool died_in_hospital = false;
  bool is_newborn = false;
  std::vector<RawNote> notes;

  double DurationHours() const;
};

struct LabeledAdmission {
  std::string patient_id;
  std::string admission_id;
  int readmit = 0;
};

struct LabelingResult {
  std::vector<LabeledAdmission> labeled;  // ordered by (patient, admit time)
  std::vector<std::string> warnings;
  std::size_t excluded_deaths = 0;
  std::size_t excluded_newborns = 0;
};

// An admission is positive when the same patient is admitted again no more
// than `window_days` after its discharge (the bound is inclusive). Admissions
// ending in death and newborn admissions are dropped from the output but
// still count as readmission events for earlier stays. Input order does not
// matter. Overlapping stays of one patient produce a warning.
LabelingResult LabelReadmissions(std::span<const AdmissionRecord> admissions,
                                 int window_days = 30);

// admission_id -> fold in [0, k). Folds differ in size by at most one and the
// assignment depends only on the set of ids and the seed.
using FoldAssignment = std::map<std::string, int>;
FoldAssignment SplitFolds(std::span<const LabeledAdmission> labeled, int k,
                          std::uint64_t seed);

// One independent run: the test fold is halved into validation and test,
// the remaining folds form the training portion (also the only text allowed
// into pre-training for this run).
struct RunSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};
RunSplit MakeRunSplit(const FoldAssignment& folds, int test_fold, std::uint64_t seed);

struct CutoffResult {
  bool scorable = false;
  std::string bucket;  // "24-48h" or "48-72h"
  std::vector<RawNote> notes;
};

// Early-notes mode. Supported cutoffs are 48 and 72 hours. Admissions lasting
// no longer than the cutoff are not scorable; otherwise only notes charted at
// or before the cutoff are kept. Throws FormatError naming the note when a
// note has no charttime.
CutoffResult CutoffFilter(const AdmissionRecord& admission, int cutoff_hours);
std::string CutoffBucket(int cutoff_hours);

}  // namespace clinote

#endif  // CLINOTE_COHORT_H_
