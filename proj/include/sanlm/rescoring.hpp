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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sanlm/evaluation.hpp"
#include "sanlm/model.hpp"
#include "sanlm/nbest.hpp"
#include "sanlm/vocabulary.hpp"

namespace sanlm {

// (1 - lambda) am + lambda lm. Throws ParameterError outside [0, 1].
double combine(double am_score, double lm_score, double lambda);
// (1 - alpha) uni + alpha bi. Throws ParameterError outside [0, 1].
double combine_lms(double uni_score, double bi_score, double alpha);

// LM scores of one hypothesis from whichever models were supplied.
struct LmScores {
  std::optional<double> uni;
  std::optional<double> bi;

  // The single available score, or combine_lms of both.
  double combined(double alpha) const;
};

struct ScoredHypothesis {
  std::size_t am_rank = 0;  // 1-based position in the input list
  std::string text;
  double am_score = 0.0;
  double lm_score = 0.0;
  double score = 0.0;
  LmScores lm;
};

// Attaches LM and combined scores and sorts by combined score, descending.
// Ties go to the better AM rank, then to the lexicographically smaller text.
std::vector<ScoredHypothesis> rescore_nbest(const NBestList& list,
                                            std::span<const LmScores> lm_scores,
                                            double lambda, double alpha = 1.0);
std::vector<ScoredHypothesis> rescore_nbest(const NBestList& list,
                                            std::span<const double> lm_scores, double lambda);

struct LmScorer {
  const LanguageModel* model = nullptr;
  const Vocabulary* vocab = nullptr;
};

// Sentence scores for every hypothesis of every list, indexed
// [list][hypothesis]. Either scorer may be absent, not both.
std::vector<std::vector<LmScores>> score_nbest_lists(std::span<const NBestList> lists,
                                                     const std::optional<LmScorer>& uni,
                                                     const std::optional<LmScorer>& bi,
                                                     std::size_t threads = 1);

// NBestList reordered by a rescoring, with AM scores kept.
NBestList reordered(const NBestList& list, std::span<const ScoredHypothesis> ranked);

// 0.00, 0.05, ..., 1.00
std::vector<double> default_lambda_grid();
// "a,b,c" or "start:stop:step".
std::vector<double> parse_grid(const std::string& text);

struct SweepRow {
  double lambda = 0.0;
  ErrorCounts counts;
};

struct SweepResult {
  double best_lambda = 0.0;
  std::vector<SweepRow> table;
};

// Corpus WER of the rescored top-1 for each lambda; the smallest lambda
// among those with the fewest errors wins. Every list needs a reference.
SweepResult sweep_lambda(std::span<const NBestList> lists,
                         std::span<const std::vector<LmScores>> lm_scores,
                         std::span<const double> grid, double alpha = 1.0);

// Top-1 of every list after rescoring with the given weights.
std::vector<std::string> rescored_top1(std::span<const NBestList> lists,
                                       std::span<const std::vector<LmScores>> lm_scores,
                                       double lambda, double alpha = 1.0);

}  // namespace sanlm
