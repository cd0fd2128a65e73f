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

#include "sanlm/rescoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sanlm/errors.hpp"
#include "sanlm/scoring.hpp"

namespace sanlm {
namespace {

void check_weight(double w, const char* name) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ParameterError(std::string(name) + " must lie in [0, 1], got " + std::to_string(w));
  }
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParameterError("bad number '" + s + "' in grid");
  return v;
}

}  // namespace

double combine(double am_score, double lm_score, double lambda) {
  check_weight(lambda, "lambda");
  return (1.0 - lambda) * am_score + lambda * lm_score;
}

double combine_lms(double uni_score, double bi_score, double alpha) {
  check_weight(alpha, "alpha");
  return (1.0 - alpha) * uni_score + alpha * bi_score;
}

double LmScores::combined(double alpha) const {
  if (uni && bi) return combine_lms(*uni, *bi, alpha);
  if (bi) return *bi;
  if (uni) return *uni;
  throw ParameterError("hypothesis has no LM score");
}

std::vector<ScoredHypothesis> rescore_nbest(const NBestList& list,
                                            std::span<const LmScores> lm_scores,
                                            double lambda, double alpha) {
  if (list.entries.empty()) {
    throw DataError("utterance '" + list.utterance_id + "' has no hypotheses");
  }
  if (lm_scores.size() != list.entries.size()) {
    throw DimensionError("utterance '" + list.utterance_id + "': " +
                         std::to_string(lm_scores.size()) + " LM scores for " +
                         std::to_string(list.entries.size()) + " hypotheses");
  }
  check_weight(lambda, "lambda");
  check_weight(alpha, "alpha");
  std::vector<ScoredHypothesis> out;
  out.reserve(list.entries.size());
  for (std::size_t k = 0; k < list.entries.size(); ++k) {
    ScoredHypothesis h;
    h.am_rank = k + 1;
    h.text = list.entries[k].text;
    h.am_score = list.entries[k].am_score;
    h.lm = lm_scores[k];
    h.lm_score = lm_scores[k].combined(alpha);
    h.score = combine(h.am_score, h.lm_score, lambda);
    out.push_back(std::move(h));
  }
  std::sort(out.begin(), out.end(), [](const ScoredHypothesis& a, const ScoredHypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.am_rank != b.am_rank) return a.am_rank < b.am_rank;
    return a.text < b.text;
  });
  return out;
}

std::vector<ScoredHypothesis> rescore_nbest(const NBestList& list,
                                            std::span<const double> lm_scores, double lambda) {
  std::vector<LmScores> wrapped;
  wrapped.reserve(lm_scores.size());
  for (double s : lm_scores) wrapped.push_back({std::nullopt, s});
  return rescore_nbest(list, wrapped, lambda, 1.0);
}

std::vector<std::vector<LmScores>> score_nbest_lists(std::span<const NBestList> lists,
                                                     const std::optional<LmScorer>& uni,
                                                     const std::optional<LmScorer>& bi,
                                                     std::size_t threads) {
  if (!uni && !bi) throw ParameterError("rescoring needs at least one language model");
  if (uni && uni->model->mode() != LmMode::kUnidirectional) {
    throw ParameterError("the unidirectional slot holds a bidirectional model");
  }
  if (bi && bi->model->mode() != LmMode::kBidirectional) {
    throw ParameterError("the bidirectional slot holds a unidirectional model");
  }
  // Flatten so work is balanced across lists.
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  std::vector<std::vector<LmScores>> out(lists.size());
  for (std::size_t l = 0; l < lists.size(); ++l) {
    out[l].resize(lists[l].entries.size());
    for (std::size_t k = 0; k < lists[l].entries.size(); ++k) jobs.emplace_back(l, k);
  }
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto [l, k] = jobs[j];
    const auto words = tokenize(lists[l].entries[k].text);
    LmScores& s = out[l][k];
    // An empty hypothesis has no words to score: log-likelihood 0.
    if (uni) s.uni = words.empty() ? 0.0 : score_sentence(*uni->model, *uni->vocab, words).total;
    if (bi) s.bi = words.empty() ? 0.0 : score_sentence(*bi->model, *bi->vocab, words).total;
  });
  return out;
}

NBestList reordered(const NBestList& list, std::span<const ScoredHypothesis> ranked) {
  NBestList out;
  out.utterance_id = list.utterance_id;
  out.reference = list.reference;
  for (const auto& h : ranked) out.entries.push_back({h.text, h.am_score});
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() != 3) throw ParameterError("grid range must be start:stop:step");
    const double start = parse_double(parts[0]);
    const double stop = parse_double(parts[1]);
    const double step = parse_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw ParameterError("grid range is empty or has step <= 0");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    // Snap to 12 decimals so 0:1:0.05 yields 0.15 rather than 0.15000000000000002.
    for (long i = 0; i <= count; ++i) {
      grid.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    std::stringstream ss(text);
    std::string p;
    while (std::getline(ss, p, ',')) {
      if (!p.empty()) grid.push_back(parse_double(p));
    }
  }
  if (grid.empty()) throw ParameterError("lambda grid is empty");
  for (double g : grid) check_weight(g, "grid value");
  return grid;
}

std::vector<std::string> rescored_top1(std::span<const NBestList> lists,
                                       std::span<const std::vector<LmScores>> lm_scores,
                                       double lambda, double alpha) {
  if (lm_scores.size() != lists.size()) {
    throw DimensionError("LM scores supplied for " + std::to_string(lm_scores.size()) +
                         " of " + std::to_string(lists.size()) + " lists");
  }
  std::vector<std::string> out;
  out.reserve(lists.size());
  for (std::size_t l = 0; l < lists.size(); ++l) {
    out.push_back(rescore_nbest(lists[l], lm_scores[l], lambda, alpha).front().text);
  }
  return out;
}

SweepResult sweep_lambda(std::span<const NBestList> lists,
                         std::span<const std::vector<LmScores>> lm_scores,
                         std::span<const double> grid, double alpha) {
  if (grid.empty()) throw ParameterError("lambda grid is empty");
  for (const auto& list : lists) {
    if (!list.reference) {
      throw DataError("lambda sweep: utterance '" + list.utterance_id + "' has no reference");
    }
  }
  SweepResult result;
  std::size_t best_errors = 0;
  for (double lambda : grid) {
    const auto top1 = rescored_top1(lists, lm_scores, lambda, alpha);
    SweepRow row;
    row.lambda = lambda;
    for (std::size_t l = 0; l < lists.size(); ++l) {
      row.counts += wer(*lists[l].reference, top1[l]).counts;
    }
    const bool better = result.table.empty() || row.counts.errors() < best_errors ||
                        (row.counts.errors() == best_errors && lambda < result.best_lambda);
    if (better) {
      best_errors = row.counts.errors();
      result.best_lambda = lambda;
    }
    result.table.push_back(row);
  }
  return result;
}

}  // namespace sanlm
