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

#include "clinote/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <set>

#include "clinote/baselines.h"
#include "clinote/checkpoint.h"
#include "clinote/error.h"
#include "clinote/interpret.h"
#include "clinote/io.h"
#include "clinote/metrics.h"
#include "clinote/text_preprocess.h"
#include "config_json.h"

namespace clinote {
namespace {

using internal::Json;

// Streams derived from the run seed.
enum SeedStream : std::uint64_t {
  kFoldSeed = 1,
  kPretrainSeed = 2,
  kFinetuneSeed = 3,
};

std::uint64_t DerivedSeed(std::uint64_t seed, SeedStream stream) {
  return Rng(seed).Split(stream).NextU64();
}

std::string Fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void RequirePath(const std::filesystem::path& path, const char* key) {
  if (path.empty()) throw ContractError(std::string("config paths.") + key + " is not set");
}

EncoderConfig ConfigForVocab(const RunConfig& config, const Vocabulary& vocab) {
  EncoderConfig enc = config.encoder;
  enc.vocab_size = vocab.size();
  enc.Validate();
  return enc;
}

void CheckVocab(const Checkpoint& ck, const Vocabulary& vocab) {
  if (ck.vocab_digest != vocab.Digest()) {
    throw FormatError("checkpoint was trained with a different vocabulary");
  }
}

struct Scored {
  std::vector<double> scores;
  std::vector<int> labels;
};

void PrintRankingMetrics(const Scored& s, std::ostream& out) {
  out << "scored " << s.scores.size() << "\n";
  out << "auroc " << Fixed4(Auroc(s.scores, s.labels)) << "\n";
  out << "auprc " << Fixed4(Auprc(s.scores, s.labels)) << "\n";
  out << "rp80 " << Fixed4(Rp80(s.scores, s.labels)) << "\n";
}

Scored JoinWithLabels(std::span<const PatientPrediction> predictions,
                      const std::map<std::string, int>& labels) {
  Scored s;
  for (const PatientPrediction& p : predictions) {
    if (!p.scorable) continue;
    auto it = labels.find(p.admission_id);
    if (it == labels.end()) throw FormatError("no label for admission " + p.admission_id);
    s.scores.push_back(p.risk);
    s.labels.push_back(it->second);
  }
  return s;
}

std::vector<LabeledAdmission> LabelsFor(const CohortData& cohort,
                                        const std::vector<std::string>& ids) {
  std::vector<LabeledAdmission> out;
  for (const std::string& id : ids) out.push_back({"", id, cohort.labels.at(id)});
  return out;
}

std::string AdmissionText(const AdmissionRecord& admission) {
  std::string text;
  for (const std::string& s : CorpusSentences(std::span(&admission, 1))) {
    if (!text.empty()) text += ' ';
    text += s;
  }
  return text;
}

}  // namespace

RunConfig::RunConfig() {
  pretrain.stages = {{64, 1000, 16}, {128, 1000, 2}};
  pretrain.learning_rate = 1e-3;
  finetune.learning_rate = 5e-4;
  finetune.batch_size = 8;
}

void RunConfig::SetSeed(std::uint64_t run_seed) {
  seed = run_seed;
  pretrain.seed = DerivedSeed(seed, kPretrainSeed);
  finetune.seed = DerivedSeed(seed, kFinetuneSeed);
}

void RunConfig::Validate() const {
  if (num_folds < 2) throw ContractError("num_folds must be at least 2");
  if (fold < 0 || fold >= num_folds) {
    throw ContractError("fold " + std::to_string(fold) + " outside [0, " +
                        std::to_string(num_folds) + ")");
  }
  if (!(c > 0.0)) throw ContractError("c must be positive");
  const std::vector<std::pair<const char*, const std::filesystem::path*>> written = {
      {"vocab", &paths.vocab},
      {"pretrained", &paths.pretrained},
      {"finetuned", &paths.finetuned},
      {"predictions", &paths.predictions},
      {"labels", &paths.labels},
      {"metrics_log", &paths.metrics_log},
      {"baseline_predictions", &paths.baseline_predictions}};
  std::map<std::string, std::string> seen;
  for (const auto& [key, path] : written) {
    if (path->empty()) continue;
    const std::string norm = path->lexically_normal().string();
    auto [it, inserted] = seen.emplace(norm, key);
    if (!inserted) {
      throw ContractError(std::string("paths.") + key + " and paths." + it->second +
                          " both write " + norm);
    }
  }
}

RunConfig ParseRunConfig(std::string_view json_text) {
  const Json j = internal::ParseJson(json_text, "run config");
  internal::CheckKeys(j, "run config",
                      {"seed", "fold", "num_folds", "encoder", "pretrain", "finetune", "vocab",
                       "selection", "paths"});
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
    throw FormatError("run config needs a nonnegative integer 'seed'");
  }
  RunConfig c;
  try {
    c.seed = j["seed"].get<std::uint64_t>();
    c.fold = j.value("fold", c.fold);
    c.num_folds = j.value("num_folds", c.num_folds);
    if (j.contains("encoder")) c.encoder = internal::EncoderConfigFromJson(j["encoder"], c.encoder);
    if (j.contains("pretrain")) {
      c.pretrain = internal::PretrainScheduleFromJson(j["pretrain"], c.pretrain);
    }
    if (j.contains("finetune")) {
      c.finetune = internal::FinetuneOptionsFromJson(j["finetune"], c.finetune);
      c.c = j["finetune"].value("c", c.c);
    }
    if (j.contains("vocab")) {
      internal::CheckKeys(j["vocab"], "vocab", {"size", "merges"});
      c.vocab_size = j["vocab"].value("size", c.vocab_size);
      c.vocab_merges = j["vocab"].value("merges", c.vocab_merges);
    }
    if (j.contains("selection")) {
      const Json& s = j["selection"];
      internal::CheckKeys(s, "selection", {"mode", "cutoff_hours"});
      const std::string mode = s.value("mode", std::string("discharge"));
      if (mode == "discharge") {
        c.selection.kind = NoteSelection::Kind::kDischarge;
      } else if (mode == "cutoff") {
        c.selection.kind = NoteSelection::Kind::kCutoff;
      } else {
        throw FormatError("selection.mode must be discharge or cutoff");
      }
      c.selection.cutoff_hours = s.value("cutoff_hours", c.selection.cutoff_hours);
      CutoffBucket(c.selection.cutoff_hours);
    }
    if (j.contains("paths")) {
      const Json& p = j["paths"];
      internal::CheckKeys(p, "paths",
                          {"notes", "admissions", "vocab", "pretrained", "finetuned",
                           "predictions", "labels", "metrics_log", "baseline_predictions"});
      auto read = [&](const char* key, std::filesystem::path& out) {
        if (p.contains(key)) out = p[key].get<std::string>();
      };
      read("notes", c.paths.notes);
      read("admissions", c.paths.admissions);
      read("vocab", c.paths.vocab);
      read("pretrained", c.paths.pretrained);
      read("finetuned", c.paths.finetuned);
      read("predictions", c.paths.predictions);
      read("labels", c.paths.labels);
      read("metrics_log", c.paths.metrics_log);
      read("baseline_predictions", c.paths.baseline_predictions);
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("run config: ") + e.what());
  }
  c.SetSeed(c.seed);
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  try {
    return ParseRunConfig(ReadTextFile(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string FormatRunConfig(const RunConfig& c) {
  Json pretrain = internal::ToJson(c.pretrain);
  pretrain.erase("seed");
  Json finetune = internal::ToJson(c.finetune);
  finetune.erase("seed");
  finetune["c"] = c.c;
  const Json j = {
      {"seed", c.seed},
      {"fold", c.fold},
      {"num_folds", c.num_folds},
      {"encoder", internal::ToJson(c.encoder)},
      {"pretrain", pretrain},
      {"finetune", finetune},
      {"vocab", {{"size", c.vocab_size}, {"merges", c.vocab_merges}}},
      {"selection",
       {{"mode", c.selection.kind == NoteSelection::Kind::kDischarge ? "discharge" : "cutoff"},
        {"cutoff_hours", c.selection.cutoff_hours}}},
      {"paths",
       {{"notes", c.paths.notes.string()},
        {"admissions", c.paths.admissions.string()},
        {"vocab", c.paths.vocab.string()},
        {"pretrained", c.paths.pretrained.string()},
        {"finetuned", c.paths.finetuned.string()},
        {"predictions", c.paths.predictions.string()},
        {"labels", c.paths.labels.string()},
        {"metrics_log", c.paths.metrics_log.string()},
        {"baseline_predictions", c.paths.baseline_predictions.string()}}}};
  return j.dump(2) + "\n";
}

std::vector<AdmissionRecord> CohortData::Select(const std::vector<std::string>& ids) const {
  std::map<std::string, const AdmissionRecord*> by_id;
  for (const AdmissionRecord& a : admissions) by_id[a.admission_id] = &a;
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<AdmissionRecord> out;
  for (const std::string& id : sorted) out.push_back(*by_id.at(id));
  return out;
}

CohortData LoadCohort(const RunConfig& config) {
  RequirePath(config.paths.notes, "notes");
  RequirePath(config.paths.admissions, "admissions");
  CohortData data;
  data.admissions = ParseAdmissionsJsonl(ReadTextFile(config.paths.admissions));
  AttachNotes(data.admissions, ParseNotesJsonl(ReadTextFile(config.paths.notes)));
  data.labeling = LabelReadmissions(data.admissions);
  for (const LabeledAdmission& l : data.labeling.labeled) data.labels[l.admission_id] = l.readmit;
  const FoldAssignment folds = SplitFolds(data.labeling.labeled, config.num_folds,
                                          DerivedSeed(config.seed, kFoldSeed));
  data.split = MakeRunSplit(folds, config.fold, DerivedSeed(config.seed, kFoldSeed));
  return data;
}

std::vector<std::string> CorpusSentences(std::span<const AdmissionRecord> admissions) {
  std::vector<std::string> out;
  for (const AdmissionRecord& a : admissions) {
    std::vector<const RawNote*> notes;
    for (const RawNote& n : a.notes) notes.push_back(&n);
    std::stable_sort(notes.begin(), notes.end(), [](const RawNote* x, const RawNote* y) {
      if (x->charttime && y->charttime) return *x->charttime < *y->charttime;
      return x->charttime.has_value() && !y->charttime.has_value();
    });
    for (const RawNote* n : notes) {
      for (std::string& s : PreprocessText(n->text)) out.push_back(std::move(s));
    }
  }
  return out;
}

void CmdPreprocess(const std::filesystem::path& input, const std::filesystem::path& output,
                   std::ostream& out) {
  const std::vector<RawNote> notes = ParseNotesJsonl(ReadTextFile(input));
  std::vector<SegmentedNote> segmented;
  std::size_t sentences = 0;
  for (const RawNote& note : notes) {
    segmented.push_back(PreprocessNote(note));
    sentences += segmented.back().sentences.size();
  }
  WriteTextFile(output, FormatSegmentedJsonl(segmented));
  out << "notes " << notes.size() << "\nsentences " << sentences << "\n";
}

void CmdBuildVocab(const RunConfig& config, std::ostream& out) {
  RequirePath(config.paths.vocab, "vocab");
  const CohortData cohort = LoadCohort(config);
  const std::vector<std::string> corpus = CorpusSentences(cohort.Select(cohort.split.train));
  const Vocabulary vocab = BuildVocabulary(corpus, config.vocab_size, config.vocab_merges);
  vocab.Save(config.paths.vocab);
  out << "training admissions " << cohort.split.train.size() << "\nsentences " << corpus.size()
      << "\nvocabulary " << vocab.size() << "\n";
}

void CmdPretrain(const RunConfig& config, std::ostream& out) {
  RequirePath(config.paths.vocab, "vocab");
  RequirePath(config.paths.pretrained, "pretrained");
  const Vocabulary vocab = Vocabulary::Load(config.paths.vocab);
  const EncoderConfig enc = ConfigForVocab(config, vocab);
  const CohortData cohort = LoadCohort(config);
  std::vector<std::vector<TokenId>> sentences;
  for (const std::string& s : CorpusSentences(cohort.Select(cohort.split.train))) {
    sentences.push_back(EncodeIds(s, vocab));
  }
  const PretrainResult result = RunPretraining(sentences, config.pretrain, enc);
  if (result.diverged) throw ContractError("pre-training diverged (non-finite loss)");

  Checkpoint ck;
  ck.config = enc;
  ck.vocab_digest = vocab.Digest();
  ck.attributes = {{"kind", "pretrained"},
                   {"seed", std::to_string(config.seed)},
                   {"fold", std::to_string(config.fold)}};
  for (const NamedTensor& nt : result.params.Named()) ck.tensors.push_back({"encoder." + nt.name, nt.tensor});
  for (const NamedTensor& nt : result.heads.Named()) ck.tensors.push_back({"pretrain." + nt.name, nt.tensor});
  SaveCheckpoint(ck, config.paths.pretrained);
  if (!config.paths.metrics_log.empty()) {
    WriteTextFile(config.paths.metrics_log, FormatMetricsCsv(result.log));
  }
  out << "steps " << result.step_losses.size() << "\n";
  if (!result.log.empty()) {
    out << "mlm_accuracy " << Fixed4(result.log.back().mlm_accuracy) << "\nnsp_accuracy "
        << Fixed4(result.log.back().nsp_accuracy) << "\n";
  }
}

void CmdFinetune(const RunConfig& config, std::ostream& out) {
  RequirePath(config.paths.vocab, "vocab");
  RequirePath(config.paths.pretrained, "pretrained");
  RequirePath(config.paths.finetuned, "finetuned");
  const Vocabulary vocab = Vocabulary::Load(config.paths.vocab);
  const Checkpoint pre = LoadCheckpoint(config.paths.pretrained);
  CheckVocab(pre, vocab);
  const EncoderConfig enc = pre.config;
  const EncoderParams params = EncoderParams::FromNamed(enc, pre.WithPrefix("encoder."));
  const CohortData cohort = LoadCohort(config);
  const std::vector<LabeledSequence> train =
      MakeLabeledSequences(cohort.Select(cohort.split.train), cohort.labels, config.selection,
                           vocab, enc.max_seq_len);
  const std::vector<LabeledSequence> validation =
      MakeLabeledSequences(cohort.Select(cohort.split.validation), cohort.labels,
                           config.selection, vocab, enc.max_seq_len);
  const FinetuneResult result = Finetune(train, validation, params, enc, config.finetune);

  Checkpoint ck;
  ck.config = enc;
  ck.vocab_digest = vocab.Digest();
  ck.attributes = {{"kind", "finetuned"},
                   {"head_mode", HeadModeName(config.finetune.head_mode)},
                   {"best_epoch", std::to_string(result.best_epoch)},
                   {"seed", std::to_string(config.seed)},
                   {"fold", std::to_string(config.fold)}};
  for (const NamedTensor& nt : result.params.Named()) ck.tensors.push_back({"encoder." + nt.name, nt.tensor});
  for (const NamedTensor& nt : result.head.Named()) ck.tensors.push_back({"readmission." + nt.name, nt.tensor});
  SaveCheckpoint(ck, config.paths.finetuned);
  out << "train_subsequences " << train.size() << "\nvalidation_subsequences "
      << validation.size() << "\n";
  for (std::size_t e = 0; e < result.validation_loss.size(); ++e) {
    out << "epoch " << e + 1 << " train_loss " << Fixed4(result.train_loss[e])
        << " validation_loss " << Fixed4(result.validation_loss[e]) << "\n";
  }
  out << "best_epoch " << result.best_epoch << "\n";
}

void CmdPredict(const RunConfig& config, std::ostream& out) {
  RequirePath(config.paths.vocab, "vocab");
  RequirePath(config.paths.finetuned, "finetuned");
  RequirePath(config.paths.predictions, "predictions");
  const Vocabulary vocab = Vocabulary::Load(config.paths.vocab);
  const Checkpoint ck = LoadCheckpoint(config.paths.finetuned);
  CheckVocab(ck, vocab);
  const EncoderParams params = EncoderParams::FromNamed(ck.config, ck.WithPrefix("encoder."));
  const ReadmissionHead head = ReadmissionHead::FromNamed(
      ParseHeadMode(ck.Attribute("head_mode")), ck.config, ck.WithPrefix("readmission."));
  const CohortData cohort = LoadCohort(config);
  std::vector<PatientPrediction> predictions;
  for (const AdmissionRecord& a : cohort.Select(cohort.split.test)) {
    predictions.push_back(
        PredictPatient(a, config.selection, vocab, params, ck.config, head, config.c));
  }
  WriteTextFile(config.paths.predictions, FormatPredictionsCsv(predictions));
  if (!config.paths.labels.empty()) {
    WriteTextFile(config.paths.labels, FormatLabelsCsv(LabelsFor(cohort, cohort.split.test)));
  }
  const Scored s = JoinWithLabels(predictions, cohort.labels);
  out << "mode " << config.selection.Name() << "\nadmissions " << predictions.size() << "\n";
  PrintRankingMetrics(s, out);
}

void CmdEval(const std::filesystem::path& predictions, const std::filesystem::path& labels,
             std::ostream& out) {
  const std::vector<PatientPrediction> preds = ParsePredictionsCsv(ReadTextFile(predictions));
  const std::map<std::string, int> label_map = ParseLabelsCsv(ReadTextFile(labels));
  PrintRankingMetrics(JoinWithLabels(preds, label_map), out);
}

void CmdSimilarity(const std::filesystem::path& pairs, const std::filesystem::path& checkpoint,
                   const std::filesystem::path& vocab_path, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::Load(vocab_path);
  const Checkpoint ck = LoadCheckpoint(checkpoint);
  CheckVocab(ck, vocab);
  const EncoderParams params = EncoderParams::FromNamed(ck.config, ck.WithPrefix("encoder."));
  const std::vector<ConceptPair> concept_pairs = ParseConceptPairs(ReadTextFile(pairs));
  const TermEmbedder embed = [&](std::string_view term) -> std::optional<std::vector<double>> {
    const std::string normalized = Normalize(term);
    if (normalized.empty()) return std::nullopt;
    const std::vector<TokenId> ids = EncodeIds(normalized, vocab);
    if (std::find(ids.begin(), ids.end(), kUnkId) != ids.end()) return std::nullopt;
    if (ids.size() + 2 > ck.config.max_seq_len) return std::nullopt;
    return TermEmbedding(normalized, vocab, params, ck.config);
  };
  const ConceptBenchmarkResult r = ConceptBenchmark(concept_pairs, embed);
  out << "pairs " << concept_pairs.size() << "\nevaluated " << r.evaluated << "\ndropped "
      << r.dropped << "\npearson " << Fixed4(r.pearson) << "\n";
}

void CmdAttention(const AttentionRequest& request, std::ostream& out) {
  const Vocabulary vocab = Vocabulary::Load(request.vocab);
  const Checkpoint ck = LoadCheckpoint(request.checkpoint);
  CheckVocab(ck, vocab);
  if (request.layer >= ck.config.num_layers || request.head >= ck.config.num_heads) {
    throw ContractError("layer/head (" + std::to_string(request.layer) + ", " +
                        std::to_string(request.head) + ") outside the model's " +
                        std::to_string(ck.config.num_layers) + " x " +
                        std::to_string(ck.config.num_heads));
  }
  const EncoderParams params = EncoderParams::FromNamed(ck.config, ck.WithPrefix("encoder."));
  const std::vector<AttentionMap> maps = AttentionMaps(request.sentence, vocab, params, ck.config);
  const AttentionMap& map = maps[request.layer * ck.config.num_heads + request.head];
  WriteTextFile(request.csv, HeatmapCsv(map));
  if (!request.svg.empty()) WriteTextFile(request.svg, HeatmapSvg(map));
  out << "tokens " << map.size() << "\n";
  for (const AttendedCell& cell : TopAttended(map, request.top_k)) {
    out << cell.query_token << " -> " << cell.key_token << " " << Fixed4(cell.weight) << "\n";
  }
}

void CmdGenSynth(const SyntheticOptions& options, const std::filesystem::path& notes,
                 const std::filesystem::path& admissions, std::ostream& out) {
  if (notes.lexically_normal() == admissions.lexically_normal()) {
    throw ContractError("notes and admissions outputs must differ");
  }
  const SyntheticCohort cohort = GenerateCohort(options);
  const std::vector<RawNote> all_notes = cohort.Notes();
  WriteTextFile(notes, FormatNotesJsonl(all_notes));
  WriteTextFile(admissions, FormatAdmissionsJsonl(cohort.admissions));
  std::size_t positives = 0;
  for (const LabeledAdmission& l : cohort.intended) positives += l.readmit;
  out << "patients " << options.num_patients << "\nadmissions " << cohort.admissions.size()
      << "\nnotes " << all_notes.size() << "\npositive_admissions " << positives << "\n";
}

void CmdBaselineBow(const RunConfig& config, std::ostream& out) {
  RequirePath(config.paths.baseline_predictions, "baseline_predictions");
  const CohortData cohort = LoadCohort(config);
  auto texts = [&](const std::vector<std::string>& ids) {
    std::vector<std::string> t;
    for (const AdmissionRecord& a : cohort.Select(ids)) {
      SelectedNotes selected = SelectNotes(a, config.selection);
      AdmissionRecord view = a;
      view.notes = std::move(selected.notes);
      t.push_back(selected.scorable ? AdmissionText(view) : std::string());
    }
    return t;
  };
  const std::vector<std::string> train_text = texts(cohort.split.train);
  const BowFeaturizer featurizer = BowFeaturizer::Build(train_text);
  auto featurize = [&](const std::vector<std::string>& t) {
    std::vector<SparseCounts> x;
    for (const std::string& s : t) x.push_back(featurizer.Featurize(s));
    return x;
  };
  auto labels_of = [&](const std::vector<std::string>& ids) {
    std::vector<int> y;
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (const std::string& id : sorted) y.push_back(cohort.labels.at(id));
    return y;
  };
  const std::vector<double> grid = DefaultL2Grid();
  const L2Selection sel = SelectL2(featurize(train_text), labels_of(cohort.split.train),
                                   featurize(texts(cohort.split.validation)),
                                   labels_of(cohort.split.validation), featurizer.size(), grid);
  if (!sel.model.warning.empty()) out << "warning " << sel.model.warning << "\n";

  std::vector<PatientPrediction> predictions;
  const std::vector<AdmissionRecord> test = cohort.Select(cohort.split.test);
  const std::vector<std::string> test_text = texts(cohort.split.test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const SelectedNotes selected = SelectNotes(test[i], config.selection);
    if (!selected.scorable) {
      predictions.push_back(NotScorable(test[i].admission_id, selected.status));
      continue;
    }
    predictions.push_back(AggregatePrediction(
        test[i].admission_id, {sel.model.Predict(featurizer.Featurize(test_text[i]))}, config.c));
  }
  WriteTextFile(config.paths.baseline_predictions, FormatPredictionsCsv(predictions));
  out << "bow_vocabulary " << featurizer.size() << "\nl2 " << sel.l2 << "\n";
  PrintRankingMetrics(JoinWithLabels(predictions, cohort.labels), out);
}

}  // namespace clinote
