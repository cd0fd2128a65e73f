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
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sanlm {

struct NBestEntry {
  std::string text;
  double am_score = 0.0;  // log domain, higher is better
};

struct NBestList {
  std::string utterance_id;
  std::optional<std::string> reference;
  // Rank 1 first: sorted by descending am_score, file order among equals.
  std::vector<NBestEntry> entries;
};

// N-best files hold one JSON object per line:
//   {"utt_id": "u1", "reference": "optional text",
//    "hypotheses": [{"text": "...", "am_score": -12.5}, ...]}
// Lists are validated (non-empty, finite scores) and put into rank order.
// max_entries > 0 rejects longer lists.
std::vector<NBestList> read_nbest(std::istream& in, std::size_t max_entries = 0);
std::vector<NBestList> read_nbest(const std::filesystem::path& path, std::size_t max_entries = 0);
void write_nbest(std::ostream& out, const std::vector<NBestList>& lists);
void write_nbest(const std::filesystem::path& path, const std::vector<NBestList>& lists);

// Transcript files: "utt_id<TAB>text" per line.
struct Transcript {
  std::string utterance_id;
  std::string text;
};
std::vector<Transcript> read_transcripts(const std::filesystem::path& path);
void write_transcripts(const std::filesystem::path& path, const std::vector<Transcript>& rows);

}  // namespace sanlm
