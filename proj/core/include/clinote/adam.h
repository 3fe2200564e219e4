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

#ifndef CLINOTE_ADAM_H_
#define CLINOTE_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "clinote/tensor.h"

namespace clinote {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators, one pair per parameter, in the order the
// parameters were registered.
struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

AdamState MakeAdamState(std::span<const Tensor> params, AdamOptions options = {});

// One bias-corrected Adam update of every parameter from its accumulated
// gradient. Throws ContractError if a parameter has no gradient or the state
// was built for a different parameter list.
void AdamStep(std::span<Tensor> params, AdamState& state);

// Rescales gradients so their joint L2 norm is at most `max_norm`. Returns
// the norm before clipping.
double ClipGradNorm(std::span<Tensor> params, double max_norm);

}  // namespace clinote

#endif  // CLINOTE_ADAM_H_
