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

#ifndef CLINOTE_IO_H_
#define CLINOTE_IO_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/cohort.h"
#include "clinote/metrics.h"
#include "clinote/readmission.h"
#include "clinote/text_preprocess.h"

namespace clinote {

// Whole-file helpers; both throw FormatError on I/O failure.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view contents);

// Notes: one JSON object per line with note_id, admission_id, text and an
// optional charttime (hours since admission, number or null). Blank lines
// are skipped. Errors name the 1-based line.
std::vector<RawNote> ParseNotesJsonl(std::string_view text);
std::string FormatNotesJsonl(std::span<const RawNote> notes);

// Admissions: one JSON object per line with patient_id, admission_id,
// admit_time, discharge_time (ISO-8601) and optional died_in_hospital and
// is_newborn flags.
std::vector<AdmissionRecord> ParseAdmissionsJsonl(std::string_view text);
std::string FormatAdmissionsJsonl(std::span<const AdmissionRecord> admissions);

// Attaches notes to their admissions in file order. Throws FormatError for a
// note whose admission is unknown.
void AttachNotes(std::span<AdmissionRecord> admissions, std::span<const RawNote> notes);

// Segmented notes: note_id, admission_id, charttime, sentences[].
std::string FormatSegmentedJsonl(std::span<const SegmentedNote> notes);
std::vector<SegmentedNote> ParseSegmentedJsonl(std::string_view text);

// Header admission_id,n,p_max,p_mean,risk,status. Not-scorable rows leave the
// numeric cells empty and carry the reason in status.
std::string FormatPredictionsCsv(std::span<const PatientPrediction> predictions);
std::vector<PatientPrediction> ParsePredictionsCsv(std::string_view text);

// Header admission_id,readmit.
std::string FormatLabelsCsv(std::span<const LabeledAdmission> labels);
std::map<std::string, int> ParseLabelsCsv(std::string_view text);

// One pair per line: term_a, term_b, rating separated by a tab, comma or
// pipe. Blank lines and lines starting with '#' are skipped.
std::vector<ConceptPair> ParseConceptPairs(std::string_view text);

}  // namespace clinote

#endif  // CLINOTE_IO_H_
