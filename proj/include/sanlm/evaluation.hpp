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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sanlm/nbest.hpp"

namespace sanlm {

enum class EditOp { kMatch, kSubstitution, kDeletion, kInsertion };

inline constexpr std::size_t kNoPosition = static_cast<std::size_t>(-1);

struct AlignmentStep {
  EditOp op = EditOp::kMatch;
  std::size_t ref_pos = kNoPosition;  // kNoPosition for insertions
  std::size_t hyp_pos = kNoPosition;  // kNoPosition for deletions
};

struct ErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_words = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
  double wer() const {
    return ref_words ? static_cast<double>(errors()) / static_cast<double>(ref_words) : 0.0;
  }
  ErrorCounts& operator+=(const ErrorCounts& o);
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

struct WerResult {
  ErrorCounts counts;
  std::vector<AlignmentStep> alignment;  // in reading order
};

// Unit-cost Levenshtein alignment of words. The backtrace prefers the
// diagonal (match/substitution), then deletion, then insertion. Throws
// DataError when the reference is empty.
WerResult wer(std::span<const std::string> ref, std::span<const std::string> hyp);
WerResult wer(const std::string& ref, const std::string& hyp);

struct UtteranceErrors {
  std::string utterance_id;
  ErrorCounts counts;
};

struct WerReport {
  std::vector<UtteranceErrors> utterances;
  ErrorCounts total;

  void add(std::string utterance_id, const ErrorCounts& counts);
  double wer() const { return total.wer(); }
};

struct OracleResult {
  std::size_t index = 0;  // into list.entries
  WerResult result;
};

// Hypothesis with the fewest errors, ties to the better AM rank. Throws
// DataError if the list has no reference.
OracleResult oracle_wer(const NBestList& list);
WerReport oracle_report(std::span<const NBestList> lists);
// Scores entries[0] of every list.
WerReport top1_report(std::span<const NBestList> lists);

// Error counts by 0-based hypothesis word position. Substitutions and
// insertions count at their hypothesis position; deletions have none.
class PositionHistogram {
 public:
  void add(const WerResult& result);
  void add(std::span<const AlignmentStep> alignment);
  void add_count(std::size_t position, std::size_t count);

  const std::vector<std::size_t>& bins() const { return bins_; }
  std::size_t total() const;
  // Sum over positions in [begin, end); end past the last bin is fine.
  std::size_t range(std::size_t begin, std::size_t end) const;

  friend bool operator==(const PositionHistogram&, const PositionHistogram&) = default;

 private:
  std::vector<std::size_t> bins_;
};

// WER report as CSV (utt_id,ref_words,substitutions,deletions,insertions,
// errors,wer_percent) closed by a "<corpus>" row, plus a JSON summary
// written next to it as <path>.summary.json.
void write_wer_report(const std::filesystem::path& path, const WerReport& report);
WerReport read_wer_report(const std::filesystem::path& path);

// position,errors rows plus the JSON summary.
void write_histogram(const std::filesystem::path& path, const PositionHistogram& histogram);
PositionHistogram read_histogram(const std::filesystem::path& path);

struct MethodRow {
  std::string method;
  ErrorCounts counts;
};
// method,errors,ref_words,wer_percent rows.
void write_method_table(const std::filesystem::path& path, std::span<const MethodRow> rows);

std::string format_percent(double fraction);  // 2 decimals

}  // namespace sanlm
