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

#include "sanlm/synthetic.hpp"

#include <algorithm>
#include <set>

#include "sanlm/errors.hpp"

namespace sanlm::synthetic {
namespace {

struct TopicWords {
  const char* nouns[9];
  const char* plurals[9];
  const char* verbs[6];
  const char* verbs_pl[6];
  const char* adjectives[6];
};

constexpr TopicWords kTopics[] = {
    {{"pot", "knife", "stove", "spoon", "plate", "cup", "oven", "bowl", "kettle"},
     {"pots", "knives", "stoves", "spoons", "plates", "cups", "ovens", "bowls", "kettles"},
     {"heats", "stirs", "washes", "boils", "chops", "fills"},
     {"heat", "stir", "wash", "boil", "chop", "fill"},
     {"hot", "greasy", "steaming", "clean", "ceramic", "sharp"}},
    {{"cow", "barn", "tractor", "goat", "field", "farmer", "hen", "plow", "fence"},
     {"cows", "barns", "tractors", "goats", "fields", "farmers", "hens", "plows", "fences"},
     {"feeds", "plants", "harvests", "milks", "herds", "digs"},
     {"feed", "plant", "harvest", "milk", "herd", "dig"},
     {"muddy", "rural", "dusty", "fertile", "wooden", "rusty"}},
    {{"ship", "wave", "sailor", "anchor", "whale", "harbor", "net", "shell", "reef"},
     {"ships", "waves", "sailors", "anchors", "whales", "harbors", "nets", "shells", "reefs"},
     {"sails", "drifts", "dives", "floats", "fishes", "rows"},
     {"sail", "drift", "dive", "float", "fish", "row"},
     {"salty", "stormy", "deep", "tidal", "foamy", "coastal"}},
    {{"car", "street", "tower", "driver", "bridge", "train", "shop", "taxi", "lamp"},
     {"cars", "streets", "towers", "drivers", "bridges", "trains", "shops", "taxis", "lamps"},
     {"drives", "parks", "honks", "sells", "builds", "rents"},
     {"drive", "park", "honk", "sell", "build", "rent"},
     {"busy", "noisy", "urban", "crowded", "concrete", "neon"}},
    {{"tree", "wolf", "trail", "owl", "river", "hunter", "fox", "cabin", "moss"},
     {"trees", "wolves", "trails", "owls", "rivers", "hunters", "foxes", "cabins", "mosses"},
     {"climbs", "hunts", "howls", "hides", "grows", "tracks"},
     {"climb", "hunt", "howl", "hide", "grow", "track"},
     {"shady", "wild", "leafy", "mossy", "quiet", "dense"}},
};

const std::vector<std::string> kSingularDets = {"the", "a", "this"};
const std::vector<std::string> kPluralDets = {"the", "some", "these"};
const std::vector<std::string> kPrepositions = {"with", "near", "over", "under", "in"};
const std::vector<std::string> kConjunctions = {"and", "while", "then"};
const std::string kIntensifier = "very";

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[rng.uniform_index(v.size())];
}

}  // namespace

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

TopicGrammar::TopicGrammar() {
  for (const auto& tw : kTopics) {
    Topic t;
    t.nouns_sg.assign(std::begin(tw.nouns), std::end(tw.nouns));
    t.nouns_pl.assign(std::begin(tw.plurals), std::end(tw.plurals));
    t.verbs_sg.assign(std::begin(tw.verbs), std::end(tw.verbs));
    t.verbs_pl.assign(std::begin(tw.verbs_pl), std::end(tw.verbs_pl));
    t.adjectives.assign(std::begin(tw.adjectives), std::end(tw.adjectives));
    topics_.push_back(std::move(t));
  }
  // Confusion classes: content words swap across topics and number;
  // function words swap within their class.
  std::vector<std::string> nouns, verbs, adjectives;
  for (const auto& t : topics_) {
    nouns.insert(nouns.end(), t.nouns_sg.begin(), t.nouns_sg.end());
    nouns.insert(nouns.end(), t.nouns_pl.begin(), t.nouns_pl.end());
    verbs.insert(verbs.end(), t.verbs_sg.begin(), t.verbs_sg.end());
    verbs.insert(verbs.end(), t.verbs_pl.begin(), t.verbs_pl.end());
    adjectives.insert(adjectives.end(), t.adjectives.begin(), t.adjectives.end());
  }
  std::vector<std::string> dets = {"the", "a", "this", "some", "these"};
  std::vector<std::string> linkers = kPrepositions;
  linkers.insert(linkers.end(), kConjunctions.begin(), kConjunctions.end());
  linkers.push_back(kIntensifier);
  register_class(nouns);
  register_class(verbs);
  register_class(adjectives);
  register_class(dets);
  register_class(linkers);
  std::sort(word_class_.begin(), word_class_.end());
  for (const auto& [w, c] : word_class_) lexicon_.push_back(w);
}

void TopicGrammar::register_class(const std::vector<std::string>& members) {
  const std::size_t id = class_members_.size();
  class_members_.push_back(members);
  for (const auto& w : members) word_class_.emplace_back(w, id);
}

std::vector<std::string> TopicGrammar::noun_phrase(const Topic& t, bool plural, Rng& rng) const {
  std::vector<std::string> np;
  np.push_back(pick(plural ? kPluralDets : kSingularDets, rng));
  const std::size_t adjectives = rng.uniform_index(3);
  for (std::size_t a = 0; a < adjectives; ++a) {
    if (rng.bernoulli(0.2)) np.push_back(kIntensifier);
    np.push_back(pick(t.adjectives, rng));
  }
  np.push_back(pick(plural ? t.nouns_pl : t.nouns_sg, rng));
  return np;
}

std::vector<std::string> TopicGrammar::sentence(Rng& rng) const {
  const Topic& t = topics_[rng.uniform_index(topics_.size())];
  std::vector<std::string> out;
  const std::size_t clauses = rng.bernoulli(0.5) ? 2 : 1;
  for (std::size_t c = 0; c < clauses; ++c) {
    if (c > 0) out.push_back(pick(kConjunctions, rng));
    const bool plural = rng.bernoulli(0.5);
    auto subject = noun_phrase(t, plural, rng);
    out.insert(out.end(), subject.begin(), subject.end());
    out.push_back(pick(plural ? t.verbs_pl : t.verbs_sg, rng));
    auto object = noun_phrase(t, rng.bernoulli(0.5), rng);
    out.insert(out.end(), object.begin(), object.end());
    if (rng.bernoulli(0.5)) {
      out.push_back(pick(kPrepositions, rng));
      auto extra = noun_phrase(t, rng.bernoulli(0.5), rng);
      out.insert(out.end(), extra.begin(), extra.end());
    }
  }
  return out;
}

std::vector<std::vector<std::string>> TopicGrammar::sentences(std::size_t count, Rng& rng) const {
  std::vector<std::vector<std::string>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sentence(rng));
  return out;
}

std::string TopicGrammar::confusable(const std::string& word, Rng& rng) const {
  auto it = std::lower_bound(word_class_.begin(), word_class_.end(),
                             std::make_pair(word, std::size_t{0}));
  if (it == word_class_.end() || it->first != word) {
    throw DataError("word '" + word + "' is not in the grammar lexicon");
  }
  const auto& members = class_members_[it->second];
  for (;;) {
    const std::string& candidate = members[rng.uniform_index(members.size())];
    if (candidate != word) return candidate;
  }
}

std::vector<NBestList> make_nbest_lists(const TopicGrammar& grammar, std::size_t count,
                                        const NBestOptions& options, Rng& rng,
                                        const std::string& id_prefix) {
  if (options.list_size < 2) throw ParameterError("n-best lists need at least 2 entries");
  if (options.min_substitutions == 0 || options.max_substitutions < options.min_substitutions) {
    throw ParameterError("bad substitution range");
  }
  std::vector<NBestList> lists;
  lists.reserve(count);
  for (std::size_t u = 0; u < count; ++u) {
    std::vector<std::string> truth;
    do {
      truth = grammar.sentence(rng);
    } while (truth.size() < options.min_length);
    const std::size_t n = truth.size();
    const std::size_t window = options.early_window ? std::min(options.early_window, n) : n;

    std::set<std::vector<std::string>> seen{truth};
    std::vector<std::vector<std::string>> corrupted;
    std::size_t attempts = 0;
    while (corrupted.size() + 1 < options.list_size && attempts++ < 50 * options.list_size) {
      std::vector<std::string> hyp = truth;
      const std::size_t span = options.max_substitutions - options.min_substitutions + 1;
      const std::size_t edits =
          std::min(window, options.min_substitutions + rng.uniform_index(span));
      std::vector<std::size_t> positions(window);
      for (std::size_t i = 0; i < window; ++i) positions[i] = i;
      rng.shuffle(std::span<std::size_t>(positions));
      for (std::size_t e = 0; e < edits; ++e) {
        hyp[positions[e]] = grammar.confusable(truth[positions[e]], rng);
      }
      if (seen.insert(hyp).second) corrupted.push_back(std::move(hyp));
    }

    // AM scores: corrupted hypotheses fall 0.2-3 below the truth unless the
    // list is flipped, in which case one of them beats it by 0.05-1.
    const double truth_score = -0.5 * static_cast<double>(n) - 2.0 * rng.uniform();
    std::vector<NBestEntry> entries;
    entries.push_back({join_words(truth), truth_score});
    for (const auto& hyp : corrupted) {
      entries.push_back({join_words(hyp), truth_score - 0.2 - 2.8 * rng.uniform()});
    }
    if (entries.size() > 1 && rng.bernoulli(options.flip_probability)) {
      const std::size_t k = 1 + rng.uniform_index(entries.size() - 1);
      entries[k].am_score = truth_score + 0.05 + 0.95 * rng.uniform();
    }
    // Present in a shuffled order; readers sort by AM score.
    rng.shuffle(std::span<NBestEntry>(entries));
    std::stable_sort(entries.begin(), entries.end(),
                     [](const NBestEntry& a, const NBestEntry& b) { return a.am_score > b.am_score; });

    NBestList list;
    list.utterance_id = id_prefix + "-" + std::to_string(u);
    list.reference = join_words(truth);
    list.entries = std::move(entries);
    lists.push_back(std::move(list));
  }
  return lists;
}

}  // namespace sanlm::synthetic
