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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sanlm/model.hpp"
#include "sanlm/rng.hpp"
#include "sanlm/vocabulary.hpp"

namespace sanlm {

inline constexpr std::size_t kMaxMasksPerInstance = 4;

// min(4, max(1, round(0.15 n))), rounding halves away from zero.
std::size_t mask_count(std::size_t n);

struct TrainingInstance {
  LmMode mode = LmMode::kBidirectional;
  std::vector<TokenId> input;
  // Bidirectional: one label per masked position. Unidirectional: the
  // target for every input position.
  std::vector<TokenId> labels;
  // Sorted; empty for unidirectional instances.
  std::vector<std::size_t> masked_positions;

  std::size_t label_count() const { return labels.size(); }
  std::size_t label_position(std::size_t k) const {
    return mode == LmMode::kBidirectional ? masked_positions[k] : k;
  }
};

// Masks mask_count(n) distinct uniformly drawn positions with <M>.
// Returns nullopt (skip) for empty sentences or n > max_len.
std::optional<TrainingInstance> make_mlm_instance(std::span<const TokenId> sentence,
                                                  std::size_t max_len, Rng& rng);

// Input [<s>, w1..wn], targets [w1..wn, </s>]. Returns nullopt (skip) when
// the sentence is empty or the n+1 inputs exceed max_len.
std::optional<TrainingInstance> make_unilm_instance(std::span<const TokenId> sentence,
                                                    std::size_t max_len);

struct LabelRef {
  std::size_t instance = 0;
  std::size_t position = 0;
  TokenId target = 0;
};

// Instances padded with <pad> to the widest one. Padding is trailing;
// `valid` marks real positions and padded cells never enter attention or
// the loss.
struct Batch {
  std::size_t size = 0;
  std::size_t width = 0;
  std::vector<TokenId> ids;         // size×width
  std::vector<std::uint8_t> valid;  // size×width
  std::vector<std::size_t> lengths;
  std::vector<LabelRef> labels;

  std::span<const TokenId> row(std::size_t i) const {
    return std::span<const TokenId>(ids).subspan(i * width, lengths[i]);
  }
  std::size_t padded_cells() const;
};

Batch make_batch(std::span<const TrainingInstance> instances);
std::vector<Batch> make_batches(std::span<const TrainingInstance> instances,
                                std::size_t batch_size);

// One tokenized sentence per non-empty line.
std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path);

}  // namespace sanlm
