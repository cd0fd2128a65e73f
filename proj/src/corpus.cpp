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

#include "sanlm/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "sanlm/errors.hpp"

namespace sanlm {

std::size_t mask_count(std::size_t n) {
  // round(15n / 100) with halves away from zero, in integers.
  const std::size_t rounded = (15 * n + 50) / 100;
  return std::min(kMaxMasksPerInstance, std::max<std::size_t>(1, rounded));
}

std::optional<TrainingInstance> make_mlm_instance(std::span<const TokenId> sentence,
                                                  std::size_t max_len, Rng& rng) {
  const std::size_t n = sentence.size();
  if (n == 0 || n > max_len) return std::nullopt;
  TrainingInstance inst;
  inst.mode = LmMode::kBidirectional;
  inst.input.assign(sentence.begin(), sentence.end());
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  const std::size_t m = mask_count(n);
  // Partial Fisher-Yates: the first m slots are a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(positions[i], positions[j]);
  }
  positions.resize(m);
  std::sort(positions.begin(), positions.end());
  for (std::size_t p : positions) {
    inst.labels.push_back(sentence[p]);
    inst.input[p] = kMaskId;
  }
  inst.masked_positions = std::move(positions);
  return inst;
}

std::optional<TrainingInstance> make_unilm_instance(std::span<const TokenId> sentence,
                                                    std::size_t max_len) {
  const std::size_t n = sentence.size();
  if (n == 0 || n + 1 > max_len) return std::nullopt;
  TrainingInstance inst;
  inst.mode = LmMode::kUnidirectional;
  inst.input.reserve(n + 1);
  inst.input.push_back(kBosId);
  inst.input.insert(inst.input.end(), sentence.begin(), sentence.end());
  inst.labels.assign(sentence.begin(), sentence.end());
  inst.labels.push_back(kEosId);
  return inst;
}

std::size_t Batch::padded_cells() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 0));
}

Batch make_batch(std::span<const TrainingInstance> instances) {
  Batch b;
  b.size = instances.size();
  for (const auto& inst : instances) b.width = std::max(b.width, inst.input.size());
  b.ids.assign(b.size * b.width, kPadId);
  b.valid.assign(b.size * b.width, 0);
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto& inst = instances[i];
    b.lengths.push_back(inst.input.size());
    std::copy(inst.input.begin(), inst.input.end(), b.ids.begin() + i * b.width);
    std::fill_n(b.valid.begin() + i * b.width, inst.input.size(), 1);
    for (std::size_t k = 0; k < inst.label_count(); ++k) {
      b.labels.push_back({i, inst.label_position(k), inst.labels[k]});
    }
  }
  return b;
}

std::vector<Batch> make_batches(std::span<const TrainingInstance> instances,
                                std::size_t batch_size) {
  if (batch_size == 0) throw ParameterError("batch size must be at least 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < instances.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, instances.size() - start);
    out.push_back(make_batch(instances.subspan(start, count)));
  }
  return out;
}

std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize(line);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

}  // namespace sanlm
