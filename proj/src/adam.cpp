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

#include "sanlm/adam.hpp"

#include <cmath>

#include "sanlm/errors.hpp"

namespace sanlm {

AdamState AdamState::for_params(std::span<Parameter* const> params) {
  AdamState state;
  for (const Parameter* p : params) {
    state.first_moment.emplace_back(p->value.shape(), 0.0);
    state.second_moment.emplace_back(p->value.shape(), 0.0);
  }
  return state;
}

void adam_step(std::span<Parameter* const> params, AdamState& state,
               const AdamConfig& config) {
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) +
                         " tensors but " + std::to_string(params.size()) +
                         " parameters were passed");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    require_same_shape(p.value, m, "adam_step");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    p.zero_grad();
  }
}

}  // namespace sanlm
