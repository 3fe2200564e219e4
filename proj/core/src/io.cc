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

#include "clinote/io.h"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include "clinote/error.h"
#include "config_json.h"

namespace clinote {
namespace {

using internal::Json;

// Calls fn(line, line_number) for every non-blank line; FormatError and JSON
// errors raised by fn are rethrown with the line number.
template <typename Fn>
void ForEachLine(std::string_view text, std::string_view what, Fn fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      fn(line);
    } catch (const FormatError& e) {
      throw FormatError(std::string(what) + " line " + std::to_string(line_no) + ": " +
                        e.what());
    } catch (const Json::exception& e) {
      throw FormatError(std::string(what) + " line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

std::string RequireString(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw FormatError(std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

bool OptionalBool(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return false;
  if (!it->is_boolean()) throw FormatError(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

std::optional<double> OptionalNumber(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw FormatError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields(1);
  for (char ch : line) {
    if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  return fields;
}

double ParseNumber(const std::string& cell, std::string_view column) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || *end != '\0') {
    throw FormatError(std::string(column) + " value '" + cell + "' is not a number");
  }
  return v;
}

std::string Trim(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

Json CharttimeJson(const std::optional<double>& t) { return t ? Json(*t) : Json(nullptr); }

}  // namespace

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void WriteTextFile(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

std::vector<RawNote> ParseNotesJsonl(std::string_view text) {
  std::vector<RawNote> notes;
  ForEachLine(text, "notes", [&](std::string_view line) {
    const Json j = internal::ParseJson(line, "invalid JSON");
    internal::CheckKeys(j, "note", {"note_id", "admission_id", "charttime", "text"});
    notes.push_back({RequireString(j, "note_id"), RequireString(j, "admission_id"),
                     OptionalNumber(j, "charttime"), RequireString(j, "text")});
  });
  return notes;
}

std::string FormatNotesJsonl(std::span<const RawNote> notes) {
  std::string out;
  for (const RawNote& n : notes) {
    out += Json{{"note_id", n.note_id},
                {"admission_id", n.admission_id},
                {"charttime", CharttimeJson(n.charttime)},
                {"text", n.text}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<AdmissionRecord> ParseAdmissionsJsonl(std::string_view text) {
  std::vector<AdmissionRecord> out;
  std::set<std::string> seen;
  ForEachLine(text, "admissions", [&](std::string_view line) {
    const Json j = internal::ParseJson(line, "invalid JSON");
    internal::CheckKeys(j, "admission",
                        {"patient_id", "admission_id", "admit_time", "discharge_time",
                         "died_in_hospital", "is_newborn"});
    AdmissionRecord a;
    a.patient_id = RequireString(j, "patient_id");
    a.admission_id = RequireString(j, "admission_id");
    a.admit_time = ParseIsoTimestamp(RequireString(j, "admit_time"));
    a.discharge_time = ParseIsoTimestamp(RequireString(j, "discharge_time"));
    a.died_in_hospital = OptionalBool(j, "died_in_hospital");
    a.is_newborn = OptionalBool(j, "is_newborn");
    if (a.discharge_time < a.admit_time) {
      throw FormatError("admission " + a.admission_id + " is discharged before admission");
    }
    if (!seen.insert(a.admission_id).second) {
      throw FormatError("duplicate admission_id " + a.admission_id);
    }
    out.push_back(std::move(a));
  });
  return out;
}

std::string FormatAdmissionsJsonl(std::span<const AdmissionRecord> admissions) {
  std::string out;
  for (const AdmissionRecord& a : admissions) {
    out += Json{{"patient_id", a.patient_id},
                {"admission_id", a.admission_id},
                {"admit_time", FormatIsoTimestamp(a.admit_time)},
                {"discharge_time", FormatIsoTimestamp(a.discharge_time)},
                {"died_in_hospital", a.died_in_hospital},
                {"is_newborn", a.is_newborn}}
               .dump();
    out += '\n';
  }
  return out;
}

void AttachNotes(std::span<AdmissionRecord> admissions, std::span<const RawNote> notes) {
  std::map<std::string, AdmissionRecord*> by_id;
  for (AdmissionRecord& a : admissions) by_id[a.admission_id] = &a;
  for (const RawNote& note : notes) {
    auto it = by_id.find(note.admission_id);
    if (it == by_id.end()) {
      throw FormatError("note " + note.note_id + " refers to unknown admission " +
                        note.admission_id);
    }
    it->second->notes.push_back(note);
  }
}

std::string FormatSegmentedJsonl(std::span<const SegmentedNote> notes) {
  std::string out;
  for (const SegmentedNote& n : notes) {
    out += Json{{"note_id", n.note_id},
                {"admission_id", n.admission_id},
                {"charttime", CharttimeJson(n.charttime)},
                {"sentences", n.sentences}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<SegmentedNote> ParseSegmentedJsonl(std::string_view text) {
  std::vector<SegmentedNote> out;
  ForEachLine(text, "segmented notes", [&](std::string_view line) {
    const Json j = internal::ParseJson(line, "invalid JSON");
    internal::CheckKeys(j, "segmented note", {"note_id", "admission_id", "charttime", "sentences"});
    out.push_back({RequireString(j, "note_id"), RequireString(j, "admission_id"),
                   OptionalNumber(j, "charttime"),
                   j.at("sentences").get<std::vector<std::string>>()});
  });
  return out;
}

std::string FormatPredictionsCsv(std::span<const PatientPrediction> predictions) {
  std::string out = "admission_id,n,p_max,p_mean,risk,status\n";
  char buf[160];
  for (const PatientPrediction& p : predictions) {
    if (p.scorable) {
      std::snprintf(buf, sizeof(buf), ",%zu,%.17g,%.17g,%.17g,", p.n(), p.p_max, p.p_mean,
                    p.risk);
    } else {
      std::snprintf(buf, sizeof(buf), ",,,,,not scorable: ");
    }
    out += p.admission_id + buf + p.status + '\n';
  }
  return out;
}

std::vector<PatientPrediction> ParsePredictionsCsv(std::string_view text) {
  std::vector<PatientPrediction> out;
  bool header = true;
  ForEachLine(text, "predictions", [&](std::string_view line) {
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (header) {
      if (line != "admission_id,n,p_max,p_mean,risk,status") {
        throw FormatError("expected header admission_id,n,p_max,p_mean,risk,status");
      }
      header = false;
      return;
    }
    if (cells.size() != 6) throw FormatError("expected 6 columns");
    PatientPrediction p;
    p.admission_id = cells[0];
    if (cells[1].empty()) {
      p.scorable = false;
      p.status = cells[5];
      out.push_back(std::move(p));
      return;
    }
    const double n = ParseNumber(cells[1], "n");
    p.p_max = ParseNumber(cells[2], "p_max");
    p.p_mean = ParseNumber(cells[3], "p_mean");
    p.risk = ParseNumber(cells[4], "risk");
    p.status = cells[5];
    p.probabilities.assign(static_cast<std::size_t>(n), p.p_mean);
    out.push_back(std::move(p));
  });
  return out;
}

std::string FormatLabelsCsv(std::span<const LabeledAdmission> labels) {
  std::string out = "admission_id,readmit\n";
  for (const LabeledAdmission& l : labels) {
    out += l.admission_id + "," + std::to_string(l.readmit) + "\n";
  }
  return out;
}

std::map<std::string, int> ParseLabelsCsv(std::string_view text) {
  std::map<std::string, int> out;
  bool header = true;
  ForEachLine(text, "labels", [&](std::string_view line) {
    if (header) {
      if (line != "admission_id,readmit") throw FormatError("expected header admission_id,readmit");
      header = false;
      return;
    }
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != 2 || (cells[1] != "0" && cells[1] != "1")) {
      throw FormatError("expected admission_id,0|1");
    }
    if (!out.emplace(cells[0], cells[1] == "1" ? 1 : 0).second) {
      throw FormatError("duplicate admission_id " + cells[0]);
    }
  });
  return out;
}

std::vector<ConceptPair> ParseConceptPairs(std::string_view text) {
  std::vector<ConceptPair> out;
  ForEachLine(text, "concept pairs", [&](std::string_view line) {
    if (Trim(line).starts_with('#')) return;
    char delimiter = '\t';
    if (line.find('\t') == std::string_view::npos) {
      delimiter = line.find('|') != std::string_view::npos ? '|' : ',';
    }
    std::vector<std::string> cells(1);
    for (char ch : line) {
      if (ch == delimiter) {
        cells.emplace_back();
      } else {
        cells.back() += ch;
      }
    }
    if (cells.size() != 3) throw FormatError("expected term_a, term_b, rating");
    out.push_back({Trim(cells[0]), Trim(cells[1]), ParseNumber(Trim(cells[2]), "rating")});
  });
  return out;
}

}  // namespace clinote
