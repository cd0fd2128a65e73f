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
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sanlm/tensor.hpp"

namespace sanlm {

// Reserved ids, always the first five vocabulary lines.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr TokenId kEosId = 3;
inline constexpr TokenId kMaskId = 4;
inline constexpr std::size_t kNumSpecials = 5;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kMaskToken = "<M>";

// Lowercases and splits on runs of whitespace.
std::vector<std::string> tokenize(std::string_view line);

class Vocabulary {
 public:
  Vocabulary();

  // Specials followed by the `max_words` most frequent tokens, frequency
  // descending with lexicographic tie-break. Throws DataError on an empty corpus.
  static Vocabulary build(std::span<const std::vector<std::string>> sentences,
                          std::size_t max_words);
  // Reads one sentence per line.
  static Vocabulary build(std::istream& corpus, std::size_t max_words);

  // One token per line; line number is the id and the specials come first.
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  // kUnkId for out-of-vocabulary words.
  TokenId id(std::string_view word) const;
  bool contains(std::string_view word) const;

  // Maps words to ids; counts words that fell back to <unk>.
  std::vector<TokenId> encode(std::span<const std::string> words,
                              std::size_t* oov_count = nullptr) const;

  // FNV-1a over serialize(); identifies the vocabulary inside checkpoints.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace sanlm
