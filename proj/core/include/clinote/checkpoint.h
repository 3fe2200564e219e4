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

#ifndef CLINOTE_CHECKPOINT_H_
#define CLINOTE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clinote/encoder.h"
#include "clinote/tensor.h"

namespace clinote {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// File layout: the 8-byte magic "CLNTCKPT", a little-endian u32 format
// version, a u64 manifest length, the JSON manifest, then the payload of
// little-endian IEEE-754 doubles. The manifest lists each tensor's name,
// shape, element offset and count, plus the payload's SHA-256.
struct Checkpoint {
  EncoderConfig config;
  std::string vocab_digest;
  std::map<std::string, std::string> attributes;
  std::vector<NamedTensor> tensors;

  // Tensors whose name starts with `prefix`, with the prefix stripped.
  std::vector<NamedTensor> WithPrefix(std::string_view prefix) const;
  // Throws FormatError when the attribute is missing.
  const std::string& Attribute(const std::string& key) const;
};

std::string SerializeCheckpoint(const Checkpoint& checkpoint);
// Throws FormatError for a bad magic, an unsupported version, truncation,
// an inconsistent manifest or a payload digest mismatch.
Checkpoint ParseCheckpoint(std::string_view bytes);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace clinote

#endif  // CLINOTE_CHECKPOINT_H_
