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

#include "sanlm/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "sanlm/errors.hpp"
#include "sanlm/vocabulary.hpp"

namespace sanlm {

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_words += o.ref_words;
  return *this;
}

WerResult wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) throw DataError("WER needs a non-empty reference");
  const std::size_t r = ref.size(), h = hyp.size();
  std::vector<std::size_t> dist((r + 1) * (h + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dist[i * (h + 1) + j]; };
  for (std::size_t i = 0; i <= r; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= h; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= r; ++i) {
    for (std::size_t j = 1; j <= h; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  WerResult result;
  result.counts.ref_words = r;
  std::size_t i = r, j = h;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        --i;
        --j;
        result.alignment.push_back({same ? EditOp::kMatch : EditOp::kSubstitution, i, j});
        if (!same) ++result.counts.substitutions;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      --i;
      result.alignment.push_back({EditOp::kDeletion, i, kNoPosition});
      ++result.counts.deletions;
      continue;
    }
    --j;
    result.alignment.push_back({EditOp::kInsertion, kNoPosition, j});
    ++result.counts.insertions;
  }
  std::reverse(result.alignment.begin(), result.alignment.end());
  return result;
}

WerResult wer(const std::string& ref, const std::string& hyp) {
  const auto r = tokenize(ref);
  const auto h = tokenize(hyp);
  return wer(r, h);
}

void WerReport::add(std::string utterance_id, const ErrorCounts& counts) {
  utterances.push_back({std::move(utterance_id), counts});
  total += counts;
}

OracleResult oracle_wer(const NBestList& list) {
  if (!list.reference) {
    throw DataError("utterance '" + list.utterance_id + "' has no reference for oracle WER");
  }
  if (list.entries.empty()) throw DataError("utterance '" + list.utterance_id + "' is empty");
  OracleResult best;
  for (std::size_t k = 0; k < list.entries.size(); ++k) {
    WerResult res = wer(*list.reference, list.entries[k].text);
    if (k == 0 || res.counts.errors() < best.result.counts.errors()) {
      best.index = k;
      best.result = std::move(res);
    }
  }
  return best;
}

WerReport oracle_report(std::span<const NBestList> lists) {
  WerReport report;
  for (const auto& list : lists) report.add(list.utterance_id, oracle_wer(list).result.counts);
  return report;
}

WerReport top1_report(std::span<const NBestList> lists) {
  WerReport report;
  for (const auto& list : lists) {
    if (!list.reference) {
      throw DataError("utterance '" + list.utterance_id + "' has no reference");
    }
    report.add(list.utterance_id, wer(*list.reference, list.entries.at(0).text).counts);
  }
  return report;
}

void PositionHistogram::add_count(std::size_t position, std::size_t count) {
  if (bins_.size() <= position) bins_.resize(position + 1, 0);
  bins_[position] += count;
}

void PositionHistogram::add(std::span<const AlignmentStep> alignment) {
  for (const AlignmentStep& s : alignment) {
    if (s.op == EditOp::kSubstitution || s.op == EditOp::kInsertion) add_count(s.hyp_pos, 1);
  }
}

void PositionHistogram::add(const WerResult& result) { add(result.alignment); }

std::size_t PositionHistogram::total() const {
  return std::accumulate(bins_.begin(), bins_.end(), std::size_t{0});
}

std::size_t PositionHistogram::range(std::size_t begin, std::size_t end) const {
  std::size_t out = 0;
  for (std::size_t p = begin; p < std::min(end, bins_.size()); ++p) out += bins_[p];
  return out;
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
  return buf;
}

namespace {

constexpr const char* kWerHeader =
    "utt_id,ref_words,substitutions,deletions,insertions,errors,wer_percent";
constexpr const char* kCorpusRow = "<corpus>";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write report " + path.string());
  return out;
}

void write_counts_row(std::ostream& out, const std::string& id, const ErrorCounts& c) {
  out << id << ',' << c.ref_words << ',' << c.substitutions << ',' << c.deletions << ','
      << c.insertions << ',' << c.errors() << ',' << format_percent(c.wer()) << '\n';
}

void write_summary(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = open_out(path.string() + ".summary.json");
  out << j.dump() << '\n';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

void write_wer_report(const std::filesystem::path& path, const WerReport& report) {
  for (const auto& u : report.utterances) {
    if (u.utterance_id.find(',') != std::string::npos || u.utterance_id == kCorpusRow) {
      throw DataError("utterance id '" + u.utterance_id + "' cannot be written to a CSV report");
    }
  }
  auto out = open_out(path);
  out << kWerHeader << '\n';
  for (const auto& u : report.utterances) write_counts_row(out, u.utterance_id, u.counts);
  write_counts_row(out, kCorpusRow, report.total);
  nlohmann::ordered_json j;
  j["utterances"] = report.utterances.size();
  j["ref_words"] = report.total.ref_words;
  j["substitutions"] = report.total.substitutions;
  j["deletions"] = report.total.deletions;
  j["insertions"] = report.total.insertions;
  j["errors"] = report.total.errors();
  j["wer_percent"] = format_percent(report.total.wer());
  write_summary(path, j);
}

WerReport read_wer_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kWerHeader) {
    throw DataError(path.string() + ": not a WER report");
  }
  WerReport report;
  ErrorCounts corpus;
  bool saw_corpus = false;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 7) throw DataError(path.string() + ": malformed row '" + line + "'");
    ErrorCounts c;
    c.ref_words = std::stoull(cells[1]);
    c.substitutions = std::stoull(cells[2]);
    c.deletions = std::stoull(cells[3]);
    c.insertions = std::stoull(cells[4]);
    if (cells[0] == kCorpusRow) {
      corpus = c;
      saw_corpus = true;
    } else {
      report.add(cells[0], c);
    }
  }
  if (!saw_corpus || !(corpus == report.total)) {
    throw DataError(path.string() + ": corpus row missing or inconsistent with utterance rows");
  }
  return report;
}

void write_histogram(const std::filesystem::path& path, const PositionHistogram& histogram) {
  auto out = open_out(path);
  out << "position,errors\n";
  const auto& bins = histogram.bins();
  for (std::size_t p = 0; p < bins.size(); ++p) out << p << ',' << bins[p] << '\n';
  nlohmann::ordered_json j;
  j["positions"] = bins.size();
  j["total_errors"] = histogram.total();
  write_summary(path, j);
}

PositionHistogram read_histogram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open histogram " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "position,errors") {
    throw DataError(path.string() + ": not a position histogram");
  }
  PositionHistogram h;
  while (std::getline(in, line)) {
    const auto cells = split_csv(line);
    if (cells.size() != 2) throw DataError(path.string() + ": malformed row '" + line + "'");
    h.add_count(std::stoull(cells[0]), std::stoull(cells[1]));
  }
  return h;
}

void write_method_table(const std::filesystem::path& path, std::span<const MethodRow> rows) {
  auto out = open_out(path);
  out << "method,errors,ref_words,wer_percent\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.counts.errors() << ',' << r.counts.ref_words << ','
        << format_percent(r.counts.wer()) << '\n';
  }
}

}  // namespace sanlm
