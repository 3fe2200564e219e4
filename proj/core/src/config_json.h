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

#ifndef CLINOTE_CONFIG_JSON_H_
#define CLINOTE_CONFIG_JSON_H_

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "clinote/encoder.h"
#include "clinote/pretrain.h"
#include "clinote/readmission.h"

namespace clinote::internal {

using Json = nlohmann::json;

// Throws FormatError naming `context` when `j` is not an object or holds a
// key outside `allowed`.
void CheckKeys(const Json& j, std::string_view context,
               std::initializer_list<std::string_view> allowed);

// Parses `text`, throwing FormatError with `context` on a syntax error.
Json ParseJson(std::string_view text, std::string_view context);

Json ToJson(const EncoderConfig& config);
// Missing keys keep the defaults of `base`.
EncoderConfig EncoderConfigFromJson(const Json& j, EncoderConfig base = {});

Json ToJson(const PretrainSchedule& schedule);
PretrainSchedule PretrainScheduleFromJson(const Json& j, PretrainSchedule base = {});

Json ToJson(const FinetuneOptions& options);
FinetuneOptions FinetuneOptionsFromJson(const Json& j, FinetuneOptions base = {});

}  // namespace clinote::internal

#endif  // CLINOTE_CONFIG_JSON_H_
