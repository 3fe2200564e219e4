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

#include "clinote/rng.h"

#include <cmath>
#include <numbers>

namespace clinote {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t Mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(Mix(Mix(seed + kGolden) ^ Mix(stream * kGolden + 0x632BE59BD9B4E019ULL))) {}

Rng Rng::Split(std::uint64_t stream_id) const {
  return Rng(Mix(key_ ^ Mix((stream_id + 1) * kGolden)), 0, 0);
}

std::uint64_t Rng::NextU64() {
  ++counter_;
  return Mix(key_ + counter_ * kGolden);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

std::size_t Rng::UniformIndex(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t draw = NextU64();
  while (draw >= limit) draw = NextU64();
  return static_cast<std::size_t>(draw % bound);
}

bool Rng::Bernoulli(double p) { return Uniform() < p; }

double Rng::Normal() {
  // 1 - U keeps the log argument in (0, 1].
  const double u1 = 1.0 - Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t HashString(std::uint64_t seed, const char* data, std::size_t size) {
  std::uint64_t h = Mix(seed ^ 0xCBF29CE484222325ULL);
  for (std::size_t i = 0; i < size; ++i) {
    h = Mix(h ^ static_cast<unsigned char>(data[i]));
  }
  return Mix(h + size);
}

}  // namespace clinote
