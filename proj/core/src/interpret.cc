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

#include "clinote/interpret.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "clinote/error.h"
#include "clinote/text_preprocess.h"

namespace clinote {
namespace {

std::string CsvField(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

// Splits one CSV record starting at `pos`; advances past its line break.
std::vector<std::string> ReadCsvRecord(std::string_view csv, std::size_t& pos) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  while (pos < csv.size()) {
    const char ch = csv[pos++];
    if (quoted) {
      if (ch == '"' && pos < csv.size() && csv[pos] == '"') {
        fields.back() += '"';
        ++pos;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch == '\n') {
      return fields;
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  return fields;
}

std::string XmlEscape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::vector<AttentionMap> AttentionMaps(std::string_view sentence, const Vocabulary& vocab,
                                        const EncoderParams& params,
                                        const EncoderConfig& config,
                                        std::vector<AttentionCapture>* captures) {
  const std::string normalized = Normalize(sentence);
  if (normalized.empty()) throw ContractError("attention needs a non-empty sentence");
  const std::vector<std::string> tokens = Tokenize(normalized, vocab);
  if (tokens.size() > config.max_seq_len) {
    throw ContractError("sentence has " + std::to_string(tokens.size()) +
                        " tokens, more than max_seq_len " +
                        std::to_string(config.max_seq_len));
  }
  TokenSequence seq;
  for (const std::string& t : tokens) seq.ids.push_back(*vocab.Find(t));
  seq.segment_ids.assign(seq.ids.size(), 0);

  ForwardOptions options;
  options.capture_attention = true;
  EncoderOutput out = Forward(seq, params, config, options);
  std::vector<AttentionMap> maps;
  for (const AttentionCapture& cap : out.attention) {
    const auto values = cap.weights.values();
    maps.push_back({cap.layer, cap.head, tokens, std::vector<double>(values.begin(), values.end())});
  }
  if (captures != nullptr) *captures = std::move(out.attention);
  return maps;
}

std::vector<AttendedCell> TopAttended(const AttentionMap& map, std::size_t k) {
  if (k == 0) throw ContractError("top_attended needs k >= 1");
  std::vector<std::size_t> cells(map.weights.size());
  std::iota(cells.begin(), cells.end(), 0);
  const std::size_t take = std::min(k, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + take, cells.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (map.weights[a] != map.weights[b]) return map.weights[a] > map.weights[b];
                      return a < b;
                    });
  std::vector<AttendedCell> out;
  const std::size_t n = map.size();
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t q = cells[i] / n, key = cells[i] % n;
    out.push_back({q, key, map.tokens[q], map.tokens[key], map.weights[cells[i]]});
  }
  return out;
}

std::string HeatmapCsv(const AttentionMap& map) {
  std::string out;
  for (const std::string& token : map.tokens) out += "," + CsvField(token);
  out += '\n';
  char buf[32];
  for (std::size_t q = 0; q < map.size(); ++q) {
    out += CsvField(map.tokens[q]);
    for (std::size_t k = 0; k < map.size(); ++k) {
      std::snprintf(buf, sizeof(buf), ",%.17g", map.at(q, k));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

AttentionMap ParseHeatmapCsv(std::string_view csv) {
  std::size_t pos = 0;
  std::vector<std::string> header = ReadCsvRecord(csv, pos);
  if (header.size() < 2 || !header[0].empty()) {
    throw FormatError("heatmap CSV header must start with an empty cell and list tokens");
  }
  AttentionMap map;
  map.tokens.assign(header.begin() + 1, header.end());
  const std::size_t n = map.tokens.size();
  for (std::size_t q = 0; q < n; ++q) {
    if (pos >= csv.size()) throw FormatError("heatmap CSV has fewer rows than tokens");
    const std::vector<std::string> row = ReadCsvRecord(csv, pos);
    if (row.size() != n + 1) {
      throw FormatError("heatmap CSV row " + std::to_string(q + 2) + " has " +
                        std::to_string(row.size()) + " cells, expected " +
                        std::to_string(n + 1));
    }
    for (std::size_t k = 1; k <= n; ++k) {
      char* end = nullptr;
      const double v = std::strtod(row[k].c_str(), &end);
      if (row[k].empty() || *end != '\0') {
        throw FormatError("heatmap CSV cell '" + row[k] + "' is not a number");
      }
      map.weights.push_back(v);
    }
  }
  return map;
}

std::string HeatmapSvg(const AttentionMap& map) {
  constexpr int kCell = 24;
  constexpr int kMargin = 120;
  const int n = static_cast<int>(map.size());
  const int side = kMargin + n * kCell;
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "font-family=\"monospace\" font-size=\"11\">\n",
                side, side);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<title>layer %zu head %zu: x = query, y = key</title>\n", map.layer,
                map.head);
  out += buf;
  for (int q = 0; q < n; ++q) {
    for (int k = 0; k < n; ++k) {
      const double w = std::clamp(map.at(q, k), 0.0, 1.0);
      const int level = static_cast<int>(std::lround(255.0 * (1.0 - w)));
      std::snprintf(buf, sizeof(buf),
                    "<rect class=\"cell\" x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" "
                    "fill=\"rgb(%d,%d,%d)\"/>\n",
                    kMargin + q * kCell, kMargin + k * kCell, kCell, kCell, level, level,
                    level);
      out += buf;
    }
  }
  for (int i = 0; i < n; ++i) {
    const std::string label = XmlEscape(map.tokens[i]);
    const int center = kMargin + i * kCell + kCell / 2;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" transform=\"rotate(-90 %d %d)\">", center,
                  kMargin - 4, center, kMargin - 4);
    out += buf + label + "</text>\n";
    std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">",
                  kMargin - 4, center + 4);
    out += buf + label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace clinote
