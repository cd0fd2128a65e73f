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

#include "sanlm/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sanlm/errors.hpp"

namespace sanlm {
namespace {

const std::string_view kSpecials[kNumSpecials] = {kPadToken, kUnkToken, kBosToken,
                                                  kEosToken, kMaskToken};

bool is_special(std::string_view w) {
  return std::find(std::begin(kSpecials), std::end(kSpecials), w) != std::end(kSpecials);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : line) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> words) {
  tokens_.assign(std::begin(kSpecials), std::end(kSpecials));
  for (auto& w : words) tokens_.push_back(std::move(w));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw VocabularyError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> sentences,
                             std::size_t max_words) {
  if (max_words == 0) throw ParameterError("vocabulary size must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences) {
    for (const auto& w : sentence) {
      if (!is_special(w)) ++counts[w];
    }
  }
  if (counts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is already in lexicographic order, so a stable sort on frequency
  // keeps the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_words) ranked.resize(max_words);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, n] : ranked) words.push_back(w);
  return Vocabulary(std::move(words));
}

Vocabulary Vocabulary::build(std::istream& corpus, std::size_t max_words) {
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(corpus, line)) sentences.push_back(tokenize(line));
  return build(sentences, max_words);
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.size() < kNumSpecials) {
    throw VocabularyError("vocabulary file has " + std::to_string(lines.size()) +
                          " lines; the " + std::to_string(kNumSpecials) +
                          " reserved tokens are missing");
  }
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    if (lines[i] != kSpecials[i]) {
      throw VocabularyError("vocabulary line " + std::to_string(i + 1) + " is '" + lines[i] +
                            "', expected '" + std::string(kSpecials[i]) + "'");
    }
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + kNumSpecials, lines.end()));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  out << serialize();
  if (!out) throw DataError("failed writing vocabulary file " + path.string());
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

TokenId Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.count(std::string(word)) != 0;
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> words,
                                        std::size_t* oov_count) const {
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  std::size_t oov = 0;
  for (const auto& w : words) {
    auto it = index_.find(w);
    if (it == index_.end()) {
      ++oov;
      ids.push_back(kUnkId);
    } else {
      ids.push_back(it->second);
    }
  }
  if (oov_count) *oov_count = oov;
  return ids;
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(serialize()); }

}  // namespace sanlm
