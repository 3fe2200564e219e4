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

#include "clinote/cohort.h"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "clinote/error.h"
#include "clinote/rng.h"

namespace clinote {
namespace {

int ParseField(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const char* begin = text.data() + pos;
  const char* end = begin + len;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("bad timestamp '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t IdHash(std::uint64_t seed, const std::string& id) {
  return HashString(seed, id.data(), id.size());
}

std::vector<std::string> OrderByHash(std::vector<std::string> ids, std::uint64_t seed) {
  std::sort(ids.begin(), ids.end(), [seed](const std::string& a, const std::string& b) {
    const std::uint64_t ha = IdHash(seed, a), hb = IdHash(seed, b);
    return ha != hb ? ha < hb : a < b;
  });
  return ids;
}

}  // namespace

TimePoint ParseIsoTimestamp(std::string_view text) {
  std::string_view t = text;
  if (!t.empty() && (t.back() == 'Z' || t.back() == 'z')) t.remove_suffix(1);
  if (t.size() != 19 || t[4] != '-' || t[7] != '-' || (t[10] != 'T' && t[10] != ' ') ||
      t[13] != ':' || t[16] != ':') {
    throw FormatError("bad timestamp '" + std::string(text) +
                      "', expected YYYY-MM-DDTHH:MM:SSZ");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{ParseField(t, 0, 4)},
                           month{static_cast<unsigned>(ParseField(t, 5, 2))},
                           day{static_cast<unsigned>(ParseField(t, 8, 2))}};
  const int hh = ParseField(t, 11, 2), mm = ParseField(t, 14, 2), ss = ParseField(t, 17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    throw FormatError("timestamp out of range '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string FormatIsoTimestamp(TimePoint t) {
  using namespace std::chrono;
  const sys_days day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(tod.hours().count()),
                int(tod.minutes().count()), int(tod.seconds().count()));
  return buf;
}

double AdmissionRecord::DurationHours() const {
  return std::chrono::duration<double, std::ratio<3600>>(discharge_time - admit_time).count();
}

LabelingResult LabelReadmissions(std::span<const AdmissionRecord> admissions,
                                 int window_days) {
  LabelingResult result;
  std::map<std::string, std::vector<const AdmissionRecord*>> by_patient;
  for (const AdmissionRecord& a : admissions) {
    if (a.discharge_time < a.admit_time) {
      throw FormatError("admission " + a.admission_id + " is discharged before admission");
    }
    by_patient[a.patient_id].push_back(&a);
  }
  const auto window = std::chrono::days{window_days};
  for (auto& [patient, stays] : by_patient) {
    std::sort(stays.begin(), stays.end(), [](const auto* x, const auto* y) {
      if (x->admit_time != y->admit_time) return x->admit_time < y->admit_time;
      return x->admission_id < y->admission_id;
    });
    for (std::size_t i = 0; i < stays.size(); ++i) {
      const AdmissionRecord& stay = *stays[i];
      if (i + 1 < stays.size() && stays[i + 1]->admit_time < stay.discharge_time) {
        result.warnings.push_back("patient " + patient + ": admission " +
                                  stays[i + 1]->admission_id + " overlaps " +
                                  stay.admission_id);
      }
      if (stay.died_in_hospital) {
        ++result.excluded_deaths;
        continue;
      }
      if (stay.is_newborn) {
        ++result.excluded_newborns;
        continue;
      }
      // The next stay in admit order is the earliest possible readmission.
      int readmit = 0;
      if (i + 1 < stays.size() &&
          stays[i + 1]->admit_time - stay.discharge_time <= window) {
        readmit = 1;
      }
      result.labeled.push_back({patient, stay.admission_id, readmit});
    }
  }
  return result;
}

FoldAssignment SplitFolds(std::span<const LabeledAdmission> labeled, int k,
                          std::uint64_t seed) {
  if (k < 2) throw ContractError("fold count must be at least 2");
  if (labeled.size() < static_cast<std::size_t>(k)) {
    throw ContractError("cannot split " + std::to_string(labeled.size()) +
                        " admissions into " + std::to_string(k) + " folds");
  }
  std::vector<std::string> ids;
  for (const LabeledAdmission& a : labeled) ids.push_back(a.admission_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw FormatError("duplicate admission ids in cohort");
  }
  ids = OrderByHash(std::move(ids), seed);
  FoldAssignment folds;
  for (std::size_t i = 0; i < ids.size(); ++i) folds[ids[i]] = static_cast<int>(i % k);
  return folds;
}

RunSplit MakeRunSplit(const FoldAssignment& folds, int test_fold, std::uint64_t seed) {
  RunSplit split;
  std::vector<std::string> held_out;
  bool found = false;
  for (const auto& [id, fold] : folds) {
    if (fold == test_fold) {
      held_out.push_back(id);
      found = true;
    } else {
      split.train.push_back(id);
    }
  }
  if (!found) throw ContractError("test fold " + std::to_string(test_fold) + " is empty");
  held_out = OrderByHash(std::move(held_out), seed ^ 0x5EEDULL);
  const std::size_t half = held_out.size() / 2;
  split.validation.assign(held_out.begin(), held_out.begin() + half);
  split.test.assign(held_out.begin() + half, held_out.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::string CutoffBucket(int cutoff_hours) {
  switch (cutoff_hours) {
    case 48:
      return "24-48h";
    case 72:
      return "48-72h";
    default:
      throw ContractError("unsupported cutoff " + std::to_string(cutoff_hours) +
                          "h; use 48 or 72");
  }
}

CutoffResult CutoffFilter(const AdmissionRecord& admission, int cutoff_hours) {
  CutoffResult result;
  result.bucket = CutoffBucket(cutoff_hours);
  for (const RawNote& note : admission.notes) {
    if (!note.charttime) {
      throw FormatError("note " + note.note_id + " of admission " + admission.admission_id +
                        " has no charttime, required in cutoff mode");
    }
  }
  if (admission.DurationHours() <= cutoff_hours) return result;
  result.scorable = true;
  for (const RawNote& note : admission.notes) {
    if (*note.charttime <= cutoff_hours) result.notes.push_back(note);
  }
  return result;
}

}  // namespace clinote
