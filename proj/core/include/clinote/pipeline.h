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

#ifndef CLINOTE_PIPELINE_H_
#define CLINOTE_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/cohort.h"
#include "clinote/encoder.h"
#include "clinote/pretrain.h"
#include "clinote/readmission.h"
#include "clinote/synthetic.h"
#include "clinote/tokenizer.h"

namespace clinote {

struct RunPaths {
  std::filesystem::path notes;
  std::filesystem::path admissions;
  std::filesystem::path vocab;
  std::filesystem::path pretrained;
  std::filesystem::path finetuned;
  std::filesystem::path predictions;
  std::filesystem::path labels;
  std::filesystem::path metrics_log;
  std::filesystem::path baseline_predictions;
};

// One experiment run. Loaded from a single JSON document whose "seed" key is
// mandatory; every other key falls back to the desk defaults below.
struct RunConfig {
  std::uint64_t seed = 0;
  int fold = 0;
  int num_folds = 5;
  EncoderConfig encoder;  // vocab_size is taken from the vocabulary file
  PretrainSchedule pretrain;
  FinetuneOptions finetune;
  double c = 2.0;
  std::size_t vocab_size = 2000;
  std::size_t vocab_merges = 100000;
  NoteSelection selection;
  RunPaths paths;

  RunConfig();
  // Sets the run seed and the pre-training and fine-tuning seeds derived
  // from it.
  void SetSeed(std::uint64_t run_seed);
  // Throws ContractError when two written paths coincide or the fold is out
  // of range.
  void Validate() const;
};

RunConfig ParseRunConfig(std::string_view json_text);
RunConfig LoadRunConfig(const std::filesystem::path& path);
std::string FormatRunConfig(const RunConfig& config);

// Admissions with notes attached, labels, and this run's fold split.
struct CohortData {
  std::vector<AdmissionRecord> admissions;
  LabelingResult labeling;
  std::map<std::string, int> labels;
  RunSplit split;

  // Admissions of one split part, in admission id order.
  std::vector<AdmissionRecord> Select(const std::vector<std::string>& ids) const;
};
CohortData LoadCohort(const RunConfig& config);

// Preprocessed sentences of the given admissions in admission order, notes
// ordered by charttime.
std::vector<std::string> CorpusSentences(std::span<const AdmissionRecord> admissions);

// Every command writes its artifacts to the configured paths and a short
// summary (numbers with 4 decimals) to `out`. Errors propagate as exceptions.
void CmdPreprocess(const std::filesystem::path& input, const std::filesystem::path& output,
                   std::ostream& out);
void CmdBuildVocab(const RunConfig& config, std::ostream& out);
void CmdPretrain(const RunConfig& config, std::ostream& out);
void CmdFinetune(const RunConfig& config, std::ostream& out);
void CmdPredict(const RunConfig& config, std::ostream& out);
void CmdEval(const std::filesystem::path& predictions, const std::filesystem::path& labels,
             std::ostream& out);
void CmdSimilarity(const std::filesystem::path& pairs, const std::filesystem::path& checkpoint,
                   const std::filesystem::path& vocab, std::ostream& out);

struct AttentionRequest {
  std::string sentence;
  std::size_t layer = 0;
  std::size_t head = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path vocab;
  std::filesystem::path csv;
  std::filesystem::path svg;  // optional
  std::size_t top_k = 5;
};
void CmdAttention(const AttentionRequest& request, std::ostream& out);

void CmdGenSynth(const SyntheticOptions& options, const std::filesystem::path& notes,
                 const std::filesystem::path& admissions, std::ostream& out);
void CmdBaselineBow(const RunConfig& config, std::ostream& out);

}  // namespace clinote

#endif  // CLINOTE_PIPELINE_H_
