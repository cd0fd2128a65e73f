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

#include "sanlm/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "sanlm/errors.hpp"

namespace sanlm {
namespace {

struct PreparedSentence {
  std::vector<TokenId> ids;
  std::size_t oov = 0;
  bool truncated = false;
};

PreparedSentence prepare(const LanguageModel& model, const Vocabulary& vocab,
                         std::span<const std::string> words) {
  if (words.empty()) throw DataError("cannot score an empty sentence");
  if (vocab.size() != model.config().vocab_size) {
    throw VocabularyError("vocabulary has " + std::to_string(vocab.size()) +
                          " entries but the model expects " +
                          std::to_string(model.config().vocab_size));
  }
  PreparedSentence p;
  const std::size_t keep = std::min(words.size(), model.config().max_len);
  p.truncated = keep < words.size();
  p.ids = vocab.encode(words.first(keep), &p.oov);
  return p;
}

SentenceScore finish(std::span<const std::string> words, const PreparedSentence& p,
                     std::vector<double> terms) {
  SentenceScore s;
  s.length = terms.size();
  s.oov_count = p.oov;
  s.truncated = p.truncated;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    s.per_word.push_back({i, words[i], terms[i]});
    s.total += terms[i];
  }
  return s;
}

}  // namespace

std::vector<MaskedInstance> expand_masked_instances(std::span<const TokenId> tokens,
                                                    std::size_t max_len) {
  if (tokens.empty()) throw DataError("cannot expand an empty sentence");
  const std::size_t n = std::min(tokens.size(), max_len);
  std::vector<MaskedInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    MaskedInstance inst;
    inst.input.assign(tokens.begin(), tokens.begin() + n);
    inst.input[i] = kMaskId;
    inst.position = i;
    inst.label = tokens[i];
    out.push_back(std::move(inst));
  }
  return out;
}

SentenceScore score_bidirectional(const LanguageModel& model, const Vocabulary& vocab,
                                  std::span<const std::string> words,
                                  const ScoreOptions& options) {
  if (model.mode() != LmMode::kBidirectional) {
    throw ParameterError("score_bidirectional needs a bidirectional model");
  }
  const PreparedSentence p = prepare(model, vocab, words);
  const auto instances = expand_masked_instances(p.ids, model.config().max_len);
  const std::size_t n = instances.size();
  const std::size_t group = options.instances_per_pass == 0 ? n : options.instances_per_pass;
  std::vector<double> terms(n);
  for (std::size_t start = 0; start < n; start += group) {
    const std::size_t count = std::min(group, n - start);
    std::vector<std::vector<TokenId>> seqs;
    std::vector<TokenId> rows;
    for (std::size_t k = 0; k < count; ++k) {
      seqs.push_back(instances[start + k].input);
      // Every instance has length n; keep only the masked row.
      rows.push_back(static_cast<TokenId>(k * n + instances[start + k].position));
    }
    const Var hidden = model.encode(seqs);
    const Tensor lp = model.output_log_probs(gather_rows(hidden, rows)).value();
    for (std::size_t k = 0; k < count; ++k) {
      terms[start + k] = lp.at(k, instances[start + k].label);
    }
  }
  return finish(words, p, std::move(terms));
}

SentenceScore score_unidirectional(const LanguageModel& model, const Vocabulary& vocab,
                                   std::span<const std::string> words) {
  if (model.mode() != LmMode::kUnidirectional) {
    throw ParameterError("score_unidirectional needs a unidirectional model");
  }
  const PreparedSentence p = prepare(model, vocab, words);
  const std::size_t n = p.ids.size();
  // Row i of [<s>, w_1..w_{n-1}] predicts w_{i+1}; the final word needs no
  // input slot of its own, so n words fit in n positions.
  std::vector<TokenId> input;
  input.reserve(n);
  input.push_back(kBosId);
  input.insert(input.end(), p.ids.begin(), p.ids.end() - 1);
  const Tensor lp = model.log_probs(input);
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = lp.at(i, p.ids[i]);
  return finish(words, p, std::move(terms));
}

SentenceScore score_sentence(const LanguageModel& model, const Vocabulary& vocab,
                             std::span<const std::string> words, const ScoreOptions& options) {
  return model.mode() == LmMode::kBidirectional
             ? score_bidirectional(model, vocab, words, options)
             : score_unidirectional(model, vocab, words);
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

std::vector<SentenceScore> score_sentences(const LanguageModel& model, const Vocabulary& vocab,
                                           std::span<const std::vector<std::string>> sentences,
                                           std::size_t threads, const ScoreOptions& options) {
  std::vector<SentenceScore> out(sentences.size());
  parallel_for(sentences.size(), threads, [&](std::size_t i) {
    out[i] = score_sentence(model, vocab, sentences[i], options);
  });
  return out;
}

}  // namespace sanlm
