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

#include <cstddef>
#include <cstdint>
#include <span>

namespace sanlm {

struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const RngState&, const RngState&) = default;
};

// Combines two 64-bit values into a well-mixed seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Counter-based generator: draw k is splitmix64(seed, k), so the whole state
// is (seed, counter) and streams can be derived without sharing state.
// Distributions are implemented here rather than with <random> so draws are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : state_{seed, counter} {}
  explicit Rng(RngState state) : state_(state) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  double normal();
  // Normal(0, std) resampled until |x| <= 2 std.
  double truncated_normal(double std);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent generator for a named sub-stream.
  Rng fork(std::uint64_t stream) const { return Rng(mix_seed(state_.seed, stream)); }

  const RngState& state() const { return state_; }

 private:
  RngState state_;
};

}  // namespace sanlm
