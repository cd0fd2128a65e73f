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

#include "sanlm/nbest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sanlm/errors.hpp"

namespace sanlm {

using nlohmann::json;

std::vector<NBestList> read_nbest(std::istream& in, std::size_t max_entries) {
  std::vector<NBestList> lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "n-best line " + std::to_string(line_no);
    NBestList list;
    try {
      const json j = json::parse(line);
      list.utterance_id = j.at("utt_id").get<std::string>();
      if (j.contains("reference") && !j.at("reference").is_null()) {
        list.reference = j.at("reference").get<std::string>();
      }
      for (const json& h : j.at("hypotheses")) {
        list.entries.push_back({h.at("text").get<std::string>(), h.at("am_score").get<double>()});
      }
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (list.entries.empty()) throw DataError(where + ": list has no hypotheses");
    if (max_entries && list.entries.size() > max_entries) {
      throw DataError(where + ": " + std::to_string(list.entries.size()) +
                      " hypotheses exceed the configured N of " + std::to_string(max_entries));
    }
    for (const auto& e : list.entries) {
      if (!std::isfinite(e.am_score)) throw DataError(where + ": non-finite am_score");
    }
    std::stable_sort(list.entries.begin(), list.entries.end(),
                     [](const NBestEntry& a, const NBestEntry& b) { return a.am_score > b.am_score; });
    lists.push_back(std::move(list));
  }
  return lists;
}

std::vector<NBestList> read_nbest(const std::filesystem::path& path, std::size_t max_entries) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open n-best file " + path.string());
  return read_nbest(in, max_entries);
}

void write_nbest(std::ostream& out, const std::vector<NBestList>& lists) {
  for (const auto& list : lists) {
    nlohmann::ordered_json j;
    j["utt_id"] = list.utterance_id;
    if (list.reference) j["reference"] = *list.reference;
    j["hypotheses"] = json::array();
    for (const auto& e : list.entries) {
      nlohmann::ordered_json h;
      h["text"] = e.text;
      h["am_score"] = e.am_score;
      j["hypotheses"].push_back(h);
    }
    out << j.dump() << '\n';
  }
}

void write_nbest(const std::filesystem::path& path, const std::vector<NBestList>& lists) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write n-best file " + path.string());
  write_nbest(out, lists);
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open transcript file " + path.string());
  std::vector<Transcript> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'utt_id<TAB>text'");
    }
    rows.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return rows;
}

void write_transcripts(const std::filesystem::path& path, const std::vector<Transcript>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write transcript file " + path.string());
  for (const auto& r : rows) out << r.utterance_id << '\t' << r.text << '\n';
}

}  // namespace sanlm
