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
#include <string>
#include <vector>

#include "sanlm/nbest.hpp"
#include "sanlm/rng.hpp"

namespace sanlm::synthetic {

// Templated topic grammar used for desk-scale experiments. Every sentence
// picks one topic; nouns, verbs and adjectives come from that topic, verbs
// agree in number with their subject, and determiners agree with their noun.
// Roughly 200 word types.
class TopicGrammar {
 public:
  TopicGrammar();

  std::vector<std::string> sentence(Rng& rng) const;
  std::vector<std::vector<std::string>> sentences(std::size_t count, Rng& rng) const;

  // A different word of the same grammatical slot (other topic, other
  // number, or another function word of the same class).
  std::string confusable(const std::string& word, Rng& rng) const;

  const std::vector<std::string>& lexicon() const { return lexicon_; }
  std::size_t topic_count() const { return topics_.size(); }

 private:
  struct Topic {
    std::vector<std::string> nouns_sg, nouns_pl, verbs_sg, verbs_pl, adjectives;
  };
  struct WordClass {
    std::size_t klass = 0;  // index into class_members_
  };

  std::vector<std::string> noun_phrase(const Topic& t, bool plural, Rng& rng) const;
  void register_class(const std::vector<std::string>& members);

  std::vector<Topic> topics_;
  std::vector<std::string> lexicon_;
  std::vector<std::vector<std::string>> class_members_;
  std::vector<std::pair<std::string, std::size_t>> word_class_;  // sorted by word
};

struct NBestOptions {
  std::size_t list_size = 10;
  // Probability that some corrupted hypothesis gets the best AM score.
  double flip_probability = 0.4;
  std::size_t min_substitutions = 1;
  std::size_t max_substitutions = 3;
  // 0: corruption positions uniform over the sentence; otherwise drawn
  // from [0, early_window).
  std::size_t early_window = 0;
  std::size_t min_length = 1;
};

// Utterances whose reference is a grammar sentence and whose other
// hypotheses are copies with 1-3 words replaced by confusable words.
std::vector<NBestList> make_nbest_lists(const TopicGrammar& grammar, std::size_t count,
                                        const NBestOptions& options, Rng& rng,
                                        const std::string& id_prefix = "utt");

std::string join_words(const std::vector<std::string>& words);

}  // namespace sanlm::synthetic
