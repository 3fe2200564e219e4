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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "clinote/error.h"
#include "clinote/rng.h"
#include "gtest/gtest.h"

namespace clinote {
namespace {

AdmissionRecord Stay(const std::string& patient, const std::string& id, const std::string& admit,
                     const std::string& discharge, bool died = false, bool newborn = false) {
  AdmissionRecord r;
  r.patient_id = patient;
  r.admission_id = id;
  r.admit_time = ParseIsoTimestamp(admit);
  r.discharge_time = ParseIsoTimestamp(discharge);
  r.died_in_hospital = died;
  r.is_newborn = newborn;
  return r;
}

std::map<std::string, int> Labels(const LabelingResult& r) {
  std::map<std::string, int> out;
  for (const LabeledAdmission& a : r.labeled) out[a.admission_id] = a.readmit;
  return out;
}

std::vector<LabeledAdmission> Ids(std::size_t n) {
  std::vector<LabeledAdmission> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"p", "adm" + std::to_string(i), 0});
  return out;
}

TEST(TimestampTest, ParsesAndFormats) {
  const TimePoint t = ParseIsoTimestamp("2100-01-02T03:04:05Z");
  EXPECT_EQ(FormatIsoTimestamp(t), "2100-01-02T03:04:05Z");
  EXPECT_EQ(ParseIsoTimestamp("2100-01-02 03:04:05"), t);
  EXPECT_THROW(ParseIsoTimestamp("2100-13-02T03:04:05"), FormatError);
  EXPECT_THROW(ParseIsoTimestamp("yesterday"), FormatError);
}

TEST(LabelTest, NineteenDaysIsPositive) {
  const std::vector<AdmissionRecord> a = {
      Stay("p", "a1", "2100-01-01T00:00:00", "2100-01-01T12:00:00"),
      Stay("p", "a2", "2100-01-20T12:00:00", "2100-01-22T00:00:00")};
  const auto labels = Labels(LabelReadmissions(a));
  EXPECT_EQ(labels.at("a1"), 1);
  EXPECT_EQ(labels.at("a2"), 0);
}

TEST(LabelTest, FortyFiveDaysIsNegative) {
  const std::vector<AdmissionRecord> a = {
      Stay("p", "a1", "2099-12-30T00:00:00", "2100-01-01T00:00:00"),
      Stay("p", "a2", "2100-02-15T00:00:00", "2100-02-16T00:00:00")};
  EXPECT_EQ(Labels(LabelReadmissions(a)).at("a1"), 0);
}

TEST(LabelTest, WindowIsInclusive) {
  const std::vector<AdmissionRecord> exact = {
      Stay("p", "a1", "2100-01-01T00:00:00", "2100-01-01T00:00:00"),
      Stay("p", "a2", "2100-01-31T00:00:00", "2100-02-01T00:00:00")};
  EXPECT_EQ(Labels(LabelReadmissions(exact)).at("a1"), 1);
  const std::vector<AdmissionRecord> late = {
      Stay("p", "a1", "2100-01-01T00:00:00", "2100-01-01T00:00:00"),
      Stay("p", "a2", "2100-01-31T00:00:01", "2100-02-01T00:00:00")};
  EXPECT_EQ(Labels(LabelReadmissions(late)).at("a1"), 0);
}

TEST(LabelTest, DeathsAndNewbornsAreExcluded) {
  const std::vector<AdmissionRecord> a = {
      Stay("p", "a1", "2100-01-01T00:00:00", "2100-01-02T00:00:00", true),
      Stay("q", "b1", "2100-01-01T00:00:00", "2100-01-02T00:00:00", false, true),
      Stay("r", "c1", "2100-01-01T00:00:00", "2100-01-02T00:00:00")};
  const LabelingResult r = LabelReadmissions(a);
  EXPECT_EQ(r.excluded_deaths, 1u);
  EXPECT_EQ(r.excluded_newborns, 1u);
  ASSERT_EQ(r.labeled.size(), 1u);
  EXPECT_EQ(r.labeled[0].admission_id, "c1");
}

TEST(LabelTest, FatalReadmissionStillCountsForEarlierStay) {
  const std::vector<AdmissionRecord> a = {
      Stay("p", "a1", "2100-01-01T00:00:00", "2100-01-02T00:00:00"),
      Stay("p", "a2", "2100-01-10T00:00:00", "2100-01-12T00:00:00", true)};
  const auto labels = Labels(LabelReadmissions(a));
  EXPECT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels.at("a1"), 1);
}

TEST(LabelTest, OverlapWarnsAndKeepsBoth) {
  const std::vector<AdmissionRecord> a = {
      Stay("p", "a1", "2100-01-01T00:00:00", "2100-01-05T00:00:00"),
      Stay("p", "a2", "2100-01-03T00:00:00", "2100-01-06T00:00:00")};
  const LabelingResult r = LabelReadmissions(a);
  EXPECT_EQ(r.labeled.size(), 2u);
  EXPECT_FALSE(r.warnings.empty());
}

std::vector<AdmissionRecord> RandomAdmissions(Rng& rng) {
  std::vector<AdmissionRecord> out;
  const TimePoint base = ParseIsoTimestamp("2100-01-01T00:00:00");
  for (int p = 0; p < 6; ++p) {
    const std::size_t n = 1 + rng.UniformIndex(4);
    for (std::size_t i = 0; i < n; ++i) {
      AdmissionRecord r;
      r.patient_id = "p" + std::to_string(p);
      r.admission_id = r.patient_id + "_" + std::to_string(i);
      r.admit_time = base + std::chrono::hours(rng.UniformIndex(24 * 120));
      r.discharge_time = r.admit_time + std::chrono::hours(rng.UniformIndex(24 * 10));
      r.died_in_hospital = rng.Bernoulli(0.1);
      out.push_back(r);
    }
  }
  return out;
}

TEST(LabelPropertyTest, InvariantToInputOrder) {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<AdmissionRecord> a = RandomAdmissions(rng);
    const auto before = Labels(LabelReadmissions(a));
    rng.Shuffle(std::span<AdmissionRecord>(a));
    EXPECT_EQ(Labels(LabelReadmissions(a)), before);
  }
}

TEST(LabelPropertyTest, DroppingALaterStayOnlyClearsLabels) {
  Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<AdmissionRecord> a = RandomAdmissions(rng);
    const auto before = Labels(LabelReadmissions(a));
    auto latest = std::max_element(a.begin(), a.end(), [](const auto& x, const auto& y) {
      return x.admit_time < y.admit_time;
    });
    const std::string removed = latest->admission_id;
    a.erase(latest);
    for (const auto& [id, label] : Labels(LabelReadmissions(a))) {
      EXPECT_LE(label, before.at(id)) << id << " after removing " << removed;
    }
  }
}

TEST(FoldTest, TenAdmissionsGiveFoldsOfTwo) {
  const FoldAssignment f = SplitFolds(Ids(10), 5, 7);
  std::map<int, int> sizes;
  for (const auto& [id, fold] : f) ++sizes[fold];
  ASSERT_EQ(sizes.size(), 5u);
  for (const auto& [fold, n] : sizes) EXPECT_EQ(n, 2);
}

TEST(FoldTest, DeterministicAndOrderIndependent) {
  std::vector<LabeledAdmission> ids = Ids(37);
  const FoldAssignment a = SplitFolds(ids, 5, 9);
  std::reverse(ids.begin(), ids.end());
  EXPECT_EQ(SplitFolds(ids, 5, 9), a);
  EXPECT_NE(SplitFolds(ids, 5, 10), a);
}

TEST(FoldTest, SizesDifferByAtMostOne) {
  for (std::size_t n : {5u, 6u, 11u, 99u}) {
    const FoldAssignment f = SplitFolds(Ids(n), 5, 3);
    EXPECT_EQ(f.size(), n);
    std::vector<int> sizes(5, 0);
    for (const auto& [id, fold] : f) ++sizes.at(fold);
    EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) -
                  *std::min_element(sizes.begin(), sizes.end()),
              1);
  }
}

TEST(FoldTest, Errors) {
  EXPECT_THROW(SplitFolds(Ids(3), 5, 1), ContractError);
  EXPECT_THROW(SplitFolds(Ids(3), 1, 1), ContractError);
}

TEST(RunSplitTest, PartitionsWithTestFoldHalved) {
  const FoldAssignment f = SplitFolds(Ids(100), 5, 11);
  for (int fold = 0; fold < 5; ++fold) {
    const RunSplit s = MakeRunSplit(f, fold, 11);
    EXPECT_EQ(s.train.size(), 80u);
    EXPECT_EQ(s.validation.size(), 10u);
    EXPECT_EQ(s.test.size(), 10u);
    std::set<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.validation.begin(), s.validation.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 100u);
    for (const std::string& id : s.train) EXPECT_NE(f.at(id), fold);
    for (const std::string& id : s.test) EXPECT_EQ(f.at(id), fold);
  }
  EXPECT_THROW(MakeRunSplit(f, 5, 11), ContractError);
}

AdmissionRecord WithNotes(double hours, std::vector<std::optional<double>> times) {
  AdmissionRecord r = Stay("p", "a", "2100-01-01T00:00:00", "2100-01-01T00:00:00");
  r.discharge_time = r.admit_time + std::chrono::seconds(static_cast<long>(hours * 3600));
  for (std::size_t i = 0; i < times.size(); ++i) {
    r.notes.push_back({"n" + std::to_string(i), "a", times[i], "text"});
  }
  return r;
}

TEST(CutoffTest, ShortStayIsNotScorable) {
  const CutoffResult r = CutoffFilter(WithNotes(30, {1.0}), 48);
  EXPECT_FALSE(r.scorable);
  EXPECT_EQ(r.bucket, "24-48h");
  EXPECT_FALSE(CutoffFilter(WithNotes(48, {1.0}), 48).scorable);
}

TEST(CutoffTest, KeepsNotesUpToCutoff) {
  const CutoffResult r = CutoffFilter(WithNotes(100, {10, 40, 60}), 48);
  ASSERT_TRUE(r.scorable);
  ASSERT_EQ(r.notes.size(), 2u);
  EXPECT_EQ(r.notes[0].note_id, "n0");
  EXPECT_EQ(r.notes[1].note_id, "n1");
  const CutoffResult s = CutoffFilter(WithNotes(100, {10, 72, 72.5}), 72);
  EXPECT_EQ(s.bucket, "48-72h");
  EXPECT_EQ(s.notes.size(), 2u);
}

TEST(CutoffTest, Errors) {
  try {
    CutoffFilter(WithNotes(100, {10, std::nullopt}), 48);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("n1"), std::string::npos);
  }
  EXPECT_THROW(CutoffFilter(WithNotes(100, {10}), 24), ContractError);
  EXPECT_THROW(CutoffBucket(36), ContractError);
}

}  // namespace
}  // namespace clinote
