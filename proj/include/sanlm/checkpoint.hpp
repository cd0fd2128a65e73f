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
#include <filesystem>
#include <optional>
#include <string>

#include "sanlm/adam.hpp"
#include "sanlm/model.hpp"
#include "sanlm/rng.hpp"

namespace sanlm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct VocabularyRef {
  std::uint64_t hash = 0;
  std::string path;
};

struct Checkpoint {
  LanguageModel model;
  VocabularyRef vocab;
  std::optional<AdamState> optimizer;
  std::uint64_t step = 0;
  RngState rng;
};

// Optional cross-checks performed by load_checkpoint.
struct CheckpointExpectations {
  std::optional<std::uint64_t> vocab_hash;
  std::optional<ModelConfig> config;
};

// Layout, all integers little-endian:
//   "SANLMCKP" | u32 version
//   u64 length | header JSON (model config, vocab hash/path, step, rng)
//   u64 length | manifest JSON [{name, shape, offset}] (offsets into data)
//   u64 length | raw little-endian float64 tensor data
//   u64 FNV-1a checksum of every preceding byte
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

// Throws CheckpointVersionError, CheckpointTruncatedError,
// CheckpointChecksumError or CheckpointMismatchError.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const CheckpointExpectations& expect = {});

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes, const CheckpointExpectations& expect = {});

}  // namespace sanlm
