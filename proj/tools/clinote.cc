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

// Command-line front end for the clinote pipeline.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "clinote/pipeline.h"

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> fold;
  std::string mode;
  std::optional<int> cutoff;
};

void AddRunFlags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("-c,--config", flags.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Override the config seed");
  cmd->add_option("--fold", flags.fold, "Override the held-out fold");
}

void AddSelectionFlags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--mode", flags.mode, "Note selection: discharge or cutoff")
      ->check(CLI::IsMember({"discharge", "cutoff"}));
  cmd->add_option("--cutoff", flags.cutoff, "Cutoff in hours (48 or 72)")
      ->check(CLI::IsMember({48, 72}));
}

clinote::RunConfig Resolve(const RunFlags& flags) {
  clinote::RunConfig config = clinote::LoadRunConfig(flags.config);
  if (flags.seed) config.SetSeed(*flags.seed);
  if (flags.fold) config.fold = *flags.fold;
  if (flags.mode == "discharge") config.selection.kind = clinote::NoteSelection::Kind::kDischarge;
  if (flags.mode == "cutoff") config.selection.kind = clinote::NoteSelection::Kind::kCutoff;
  if (flags.cutoff) config.selection.cutoff_hours = *flags.cutoff;
  config.Validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clinote: clinical note encoder, readmission prediction and evaluation"};
  app.require_subcommand(1);

  std::string input, output;
  auto* preprocess = app.add_subcommand("preprocess", "Normalize and segment raw notes (JSONL)");
  preprocess->add_option("input", input, "Raw notes JSONL")->required()->check(CLI::ExistingFile);
  preprocess->add_option("output", output, "Segmented notes JSONL")->required();

  RunFlags flags;
  auto* build_vocab = app.add_subcommand("build-vocab", "Learn a subword vocabulary");
  AddRunFlags(build_vocab, flags);
  auto* pretrain = app.add_subcommand("pretrain", "MLM + NSP pre-training");
  AddRunFlags(pretrain, flags);
  auto* finetune = app.add_subcommand("finetune", "Fine-tune for 30-day readmission");
  AddRunFlags(finetune, flags);
  AddSelectionFlags(finetune, flags);
  auto* predict = app.add_subcommand("predict", "Score the test admissions");
  AddRunFlags(predict, flags);
  AddSelectionFlags(predict, flags);
  auto* baseline = app.add_subcommand("baseline-bow", "Bag-of-words logistic regression baseline");
  AddRunFlags(baseline, flags);
  AddSelectionFlags(baseline, flags);

  std::string predictions, labels;
  auto* eval = app.add_subcommand("eval", "AUROC, AUPRC and RP80 of a predictions file");
  eval->add_option("predictions", predictions, "Predictions CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("labels", labels, "Labels CSV")->required()->check(CLI::ExistingFile);

  std::string pairs, checkpoint, vocab;
  auto* similarity = app.add_subcommand("similarity", "Concept-pair similarity benchmark");
  similarity->add_option("pairs", pairs, "Concept pairs file")->required()->check(CLI::ExistingFile);
  similarity->add_option("--checkpoint", checkpoint, "Encoder checkpoint")->required();
  similarity->add_option("--vocab", vocab, "Vocabulary file")->required();

  clinote::AttentionRequest attention_request;
  std::string csv_path, svg_path;
  auto* attention = app.add_subcommand("attention", "Export one attention head as a heatmap");
  attention->add_option("sentence", attention_request.sentence, "Input sentence")->required();
  attention->add_option("--layer", attention_request.layer, "Layer index")->required();
  attention->add_option("--head", attention_request.head, "Head index")->required();
  attention->add_option("--checkpoint", checkpoint, "Encoder checkpoint")->required();
  attention->add_option("--vocab", vocab, "Vocabulary file")->required();
  attention->add_option("--csv", csv_path, "Heatmap CSV output")->required();
  attention->add_option("--svg", svg_path, "Heatmap SVG output");
  attention->add_option("--top", attention_request.top_k, "Cells to list")->check(CLI::PositiveNumber);

  clinote::SyntheticOptions synth;
  std::string notes_out, admissions_out;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic cohort");
  gen->add_option("--seed", synth.seed, "Generator seed")->required();
  gen->add_option("--patients", synth.num_patients, "Number of patients");
  gen->add_option("--signal-rate", synth.signal_rate, "Per-note signal rate for positives")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--positive-fraction", synth.positive_fraction, "Fraction of positive patients")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--notes-per-admission", synth.notes_per_admission, "Notes per admission");
  gen->add_option("--min-filler", synth.min_filler_sentences, "Fewest filler sentences per note");
  gen->add_option("--max-filler", synth.max_filler_sentences, "Most filler sentences per note");
  gen->add_flag("--single-signal-note", synth.single_signal_note,
                "Plant the signal in exactly one note of each positive admission");
  gen->add_option("--notes", notes_out, "Notes JSONL output")->required();
  gen->add_option("--admissions", admissions_out, "Admissions JSONL output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (preprocess->parsed()) {
      clinote::CmdPreprocess(input, output, std::cout);
    } else if (build_vocab->parsed()) {
      clinote::CmdBuildVocab(Resolve(flags), std::cout);
    } else if (pretrain->parsed()) {
      clinote::CmdPretrain(Resolve(flags), std::cout);
    } else if (finetune->parsed()) {
      clinote::CmdFinetune(Resolve(flags), std::cout);
    } else if (predict->parsed()) {
      clinote::CmdPredict(Resolve(flags), std::cout);
    } else if (baseline->parsed()) {
      clinote::CmdBaselineBow(Resolve(flags), std::cout);
    } else if (eval->parsed()) {
      clinote::CmdEval(predictions, labels, std::cout);
    } else if (similarity->parsed()) {
      clinote::CmdSimilarity(pairs, checkpoint, vocab, std::cout);
    } else if (attention->parsed()) {
      attention_request.checkpoint = checkpoint;
      attention_request.vocab = vocab;
      attention_request.csv = csv_path;
      attention_request.svg = svg_path;
      clinote::CmdAttention(attention_request, std::cout);
    } else if (gen->parsed()) {
      clinote::CmdGenSynth(synth, notes_out, admissions_out, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "clinote " << app.get_subcommands().front()->get_name() << ": " << e.what()
              << "\n";
    return 1;
  }
  return 0;
}
