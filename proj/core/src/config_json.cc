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

#include "config_json.h"

#include <algorithm>

#include "clinote/error.h"

namespace clinote::internal {
namespace {

template <typename T>
void Read(const Json& j, const char* key, T& out, std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string(context) + "." + key + " has the wrong type");
  }
}

}  // namespace

void CheckKeys(const Json& j, std::string_view context,
               std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw FormatError(std::string(context) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw FormatError("unknown key '" + key + "' in " + std::string(context));
    }
  }
}

Json ParseJson(std::string_view text, std::string_view context) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string(context) + ": " + e.what());
  }
}

Json ToJson(const EncoderConfig& c) {
  return Json{{"num_layers", c.num_layers},     {"num_heads", c.num_heads},
              {"model_dim", c.model_dim},       {"ff_dim", c.ff_dim},
              {"max_seq_len", c.max_seq_len},   {"vocab_size", c.vocab_size},
              {"dropout_rate", c.dropout_rate}, {"layer_norm_eps", c.layer_norm_eps},
              {"activation", ActivationName(c.activation)},
              {"pre_norm", c.pre_norm}};
}

EncoderConfig EncoderConfigFromJson(const Json& j, EncoderConfig c) {
  constexpr std::string_view kCtx = "encoder";
  CheckKeys(j, kCtx,
            {"num_layers", "num_heads", "model_dim", "ff_dim", "max_seq_len", "vocab_size",
             "dropout_rate", "layer_norm_eps", "activation", "pre_norm"});
  Read(j, "num_layers", c.num_layers, kCtx);
  Read(j, "num_heads", c.num_heads, kCtx);
  Read(j, "model_dim", c.model_dim, kCtx);
  Read(j, "ff_dim", c.ff_dim, kCtx);
  Read(j, "max_seq_len", c.max_seq_len, kCtx);
  Read(j, "vocab_size", c.vocab_size, kCtx);
  Read(j, "dropout_rate", c.dropout_rate, kCtx);
  Read(j, "layer_norm_eps", c.layer_norm_eps, kCtx);
  Read(j, "pre_norm", c.pre_norm, kCtx);
  std::string activation = ActivationName(c.activation);
  Read(j, "activation", activation, kCtx);
  c.activation = ParseActivation(activation);
  return c;
}

Json ToJson(const PretrainSchedule& s) {
  Json stages = Json::array();
  for (const PretrainStage& st : s.stages) {
    stages.push_back(
        {{"max_seq_len", st.max_seq_len}, {"num_steps", st.num_steps}, {"batch_size", st.batch_size}});
  }
  return Json{{"stages", stages},
              {"learning_rate", s.learning_rate},
              {"seed", s.seed},
              {"eval_interval", s.eval_interval},
              {"eval_examples", s.eval_examples},
              {"holdout_fraction", s.holdout_fraction},
              {"max_grad_norm", s.max_grad_norm},
              {"masking",
               {{"select_rate", s.masking.select_rate},
                {"mask_fraction", s.masking.mask_fraction},
                {"random_fraction", s.masking.random_fraction}}}};
}

PretrainSchedule PretrainScheduleFromJson(const Json& j, PretrainSchedule s) {
  constexpr std::string_view kCtx = "pretrain";
  CheckKeys(j, kCtx,
            {"stages", "learning_rate", "seed", "eval_interval", "eval_examples",
             "holdout_fraction", "max_grad_norm", "masking"});
  if (auto it = j.find("stages"); it != j.end()) {
    if (!it->is_array()) throw FormatError("pretrain.stages must be an array");
    s.stages.clear();
    for (const Json& st : *it) {
      CheckKeys(st, "pretrain.stages[]", {"max_seq_len", "num_steps", "batch_size"});
      PretrainStage stage;
      Read(st, "max_seq_len", stage.max_seq_len, "pretrain.stages[]");
      Read(st, "num_steps", stage.num_steps, "pretrain.stages[]");
      Read(st, "batch_size", stage.batch_size, "pretrain.stages[]");
      s.stages.push_back(stage);
    }
  }
  Read(j, "learning_rate", s.learning_rate, kCtx);
  Read(j, "seed", s.seed, kCtx);
  Read(j, "eval_interval", s.eval_interval, kCtx);
  Read(j, "eval_examples", s.eval_examples, kCtx);
  Read(j, "holdout_fraction", s.holdout_fraction, kCtx);
  Read(j, "max_grad_norm", s.max_grad_norm, kCtx);
  if (auto it = j.find("masking"); it != j.end()) {
    CheckKeys(*it, "pretrain.masking", {"select_rate", "mask_fraction", "random_fraction"});
    Read(*it, "select_rate", s.masking.select_rate, "pretrain.masking");
    Read(*it, "mask_fraction", s.masking.mask_fraction, "pretrain.masking");
    Read(*it, "random_fraction", s.masking.random_fraction, "pretrain.masking");
  }
  return s;
}

Json ToJson(const FinetuneOptions& o) {
  return Json{{"epochs", o.epochs},
              {"batch_size", o.batch_size},
              {"learning_rate", o.learning_rate},
              {"head_mode", HeadModeName(o.head_mode)},
              {"seed", o.seed},
              {"max_grad_norm", o.max_grad_norm},
              {"patience", o.patience}};
}

FinetuneOptions FinetuneOptionsFromJson(const Json& j, FinetuneOptions o) {
  constexpr std::string_view kCtx = "finetune";
  CheckKeys(j, kCtx,
            {"epochs", "batch_size", "learning_rate", "head_mode", "seed", "max_grad_norm",
             "patience", "c"});
  Read(j, "epochs", o.epochs, kCtx);
  Read(j, "batch_size", o.batch_size, kCtx);
  Read(j, "learning_rate", o.learning_rate, kCtx);
  Read(j, "seed", o.seed, kCtx);
  Read(j, "max_grad_norm", o.max_grad_norm, kCtx);
  Read(j, "patience", o.patience, kCtx);
  std::string head = HeadModeName(o.head_mode);
  Read(j, "head_mode", head, kCtx);
  o.head_mode = ParseHeadMode(head);
  return o;
}

}  // namespace clinote::internal
