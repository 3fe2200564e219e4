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

#ifndef CLINOTE_RNG_H_
#define CLINOTE_RNG_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace clinote {

// Counter-based, splittable pseudo random generator.
//
// Each draw hashes (key, counter) with the SplitMix64 finalizer, so a stream
// is fully described by two integers and the sequence it produces does not
// depend on the standard library's distribution implementations. Child
// streams are derived with `Split`, which never advances the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Independent child stream identified by `stream_id`.
  Rng Split(std::uint64_t stream_id) const;

  std::uint64_t NextU64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  // Uniform in [0, n); n must be positive. Unbiased (rejection sampling).
  std::size_t UniformIndex(std::size_t n);
  bool Bernoulli(double p);
  // Standard normal via Box-Muller; consumes two draws per call.
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = UniformIndex(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int /*raw*/)
      : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stable 64-bit mix of a byte string, used to derive keys from identifiers.
std::uint64_t HashString(std::uint64_t seed, const char* data, std::size_t size);

}  // namespace clinote

#endif  // CLINOTE_RNG_H_
