// Copyright 2026 The sanlm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sanlm/autograd.hpp"

namespace sanlm {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  // Zero accumulators shaped like the given parameters.
  static AdamState for_params(std::span<Parameter* const> params);
};

// Bias-corrected Adam update. Zeroes every gradient afterwards and advances
// state.step by one.
void adam_step(std::span<Parameter* const> params, AdamState& state,
               const AdamConfig& config);

}  // namespace sanlm
