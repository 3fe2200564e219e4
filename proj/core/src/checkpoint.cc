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

#include "clinote/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "clinote/digest.h"
#include "clinote/error.h"
#include "config_json.h"

namespace clinote {
namespace {

constexpr std::string_view kMagic = "CLNTCKPT";
constexpr std::size_t kHeaderBytes = 8 + 4 + 8;

template <typename T>
void AppendLittleEndian(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out += static_cast<char>(static_cast<unsigned char>(value >> (8 * i)));
  }
}

template <typename T>
T ReadLittleEndian(std::string_view bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return value;
}

}  // namespace

std::vector<NamedTensor> Checkpoint::WithPrefix(std::string_view prefix) const {
  std::vector<NamedTensor> out;
  for (const NamedTensor& nt : tensors) {
    if (nt.name.starts_with(prefix)) out.push_back({nt.name.substr(prefix.size()), nt.tensor});
  }
  return out;
}

const std::string& Checkpoint::Attribute(const std::string& key) const {
  auto it = attributes.find(key);
  if (it == attributes.end()) throw FormatError("checkpoint has no attribute '" + key + "'");
  return it->second;
}

std::string SerializeCheckpoint(const Checkpoint& checkpoint) {
  std::string payload;
  internal::Json index = internal::Json::array();
  std::uint64_t offset = 0;
  for (const NamedTensor& nt : checkpoint.tensors) {
    const auto values = nt.tensor.values();
    index.push_back({{"name", nt.name},
                     {"shape", nt.tensor.shape()},
                     {"offset", offset},
                     {"count", values.size()}});
    for (double v : values) AppendLittleEndian(payload, std::bit_cast<std::uint64_t>(v));
    offset += values.size();
  }
  const internal::Json manifest = {
      {"format_version", kCheckpointVersion},
      {"config", internal::ToJson(checkpoint.config)},
      {"vocab_digest", checkpoint.vocab_digest},
      {"attributes", checkpoint.attributes},
      {"tensors", index},
      {"payload_bytes", payload.size()},
      {"payload_sha256", Sha256Hex(payload)},
  };
  const std::string manifest_text = manifest.dump();
  std::string out(kMagic);
  AppendLittleEndian(out, kCheckpointVersion);
  AppendLittleEndian(out, static_cast<std::uint64_t>(manifest_text.size()));
  out += manifest_text;
  out += payload;
  return out;
}

Checkpoint ParseCheckpoint(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw FormatError("checkpoint truncated: " + std::to_string(bytes.size()) +
                      " bytes is shorter than the header");
  }
  if (bytes.substr(0, kMagic.size()) != kMagic) throw FormatError("not a clinote checkpoint");
  const auto version = ReadLittleEndian<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto manifest_len = ReadLittleEndian<std::uint64_t>(bytes, 12);
  if (manifest_len > bytes.size() - kHeaderBytes) {
    throw FormatError("checkpoint truncated inside the manifest");
  }
  const internal::Json manifest = internal::ParseJson(
      bytes.substr(kHeaderBytes, manifest_len), "checkpoint manifest");
  const std::string_view payload = bytes.substr(kHeaderBytes + manifest_len);

  Checkpoint ck;
  try {
    const std::uint64_t payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
    if (payload.size() != payload_bytes) {
      throw FormatError("checkpoint payload length " + std::to_string(payload.size()) +
                        " does not match the manifest's " + std::to_string(payload_bytes) +
                        " (truncated file?)");
    }
    if (Sha256Hex(payload) != manifest.at("payload_sha256").get<std::string>()) {
      throw FormatError("checkpoint payload digest mismatch");
    }
    ck.config = internal::EncoderConfigFromJson(manifest.at("config"));
    ck.vocab_digest = manifest.at("vocab_digest").get<std::string>();
    ck.attributes = manifest.at("attributes").get<std::map<std::string, std::string>>();
    const std::uint64_t total = payload.size() / 8;
    for (const internal::Json& entry : manifest.at("tensors")) {
      const Shape shape = entry.at("shape").get<Shape>();
      const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
      const std::uint64_t count = entry.at("count").get<std::uint64_t>();
      const std::string name = entry.at("name").get<std::string>();
      if (ShapeSize(shape) != count || offset > total || count > total - offset) {
        throw FormatError("checkpoint tensor '" + name + "' has an inconsistent extent");
      }
      std::vector<double> values(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        values[i] = std::bit_cast<double>(ReadLittleEndian<std::uint64_t>(payload, 8 * (offset + i)));
      }
      ck.tensors.push_back({name, Tensor::FromValues(shape, std::move(values), true)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  return ck;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::string bytes = SerializeCheckpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ParseCheckpoint(bytes);
}

}  // namespace clinote
