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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sanlm/model.hpp"
#include "sanlm/vocabulary.hpp"

namespace sanlm {

struct WordScore {
  std::size_t position = 0;
  std::string token;
  double log_prob = 0.0;
};

// Natural-log sentence score: the sum of one term per word.
struct SentenceScore {
  double total = 0.0;
  std::vector<WordScore> per_word;
  std::size_t length = 0;
  std::size_t oov_count = 0;
  // Words beyond the model's max_len were dropped before scoring.
  bool truncated = false;
};

struct MaskedInstance {
  std::vector<TokenId> input;
  std::size_t position = 0;
  TokenId label = 0;
};

// One instance per word with <M> at that word. Sentences longer than
// max_len are cut to their first max_len words. Throws DataError if empty.
std::vector<MaskedInstance> expand_masked_instances(std::span<const TokenId> tokens,
                                                    std::size_t max_len);

struct ScoreOptions {
  // Masked instances per forward pass; 0 puts all of a sentence's
  // instances into one pass.
  std::size_t instances_per_pass = 0;
};

// Sum over i of log p(w_i | sentence with <M> at i).
SentenceScore score_bidirectional(const LanguageModel& model, const Vocabulary& vocab,
                                  std::span<const std::string> words,
                                  const ScoreOptions& options = {});

// Sum over i of log p(w_i | <s>, w_1..w_{i-1}); no end-of-sentence term.
SentenceScore score_unidirectional(const LanguageModel& model, const Vocabulary& vocab,
                                   std::span<const std::string> words);

// Dispatches on the model's mode.
SentenceScore score_sentence(const LanguageModel& model, const Vocabulary& vocab,
                             std::span<const std::string> words,
                             const ScoreOptions& options = {});

// Scores sentences on up to `threads` workers; output order matches input
// order and does not depend on the thread count.
std::vector<SentenceScore> score_sentences(const LanguageModel& model, const Vocabulary& vocab,
                                           std::span<const std::vector<std::string>> sentences,
                                           std::size_t threads = 1,
                                           const ScoreOptions& options = {});

// Runs fn(i) for i in [0, count) over up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace sanlm
