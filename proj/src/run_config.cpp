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

#include "sanlm/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sanlm/errors.hpp"

namespace sanlm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json defaults() {
  ordered_json j;
  j["seed"] = 1;
  j["threads"] = 1;
  j["mode"] = "bi";
  j["vocab_size"] = 10000;
  j["num_layers"] = 2;
  j["model_dim"] = 64;
  j["num_heads"] = 2;
  j["ffn_dim"] = 256;
  j["max_len"] = 128;
  j["dropout"] = 0.1;
  j["learning_rate"] = 1e-4;
  j["beta1"] = 0.9;
  j["beta2"] = 0.999;
  j["adam_eps"] = 1e-8;
  j["batch_size"] = 32;
  j["max_steps"] = 1000;
  j["eval_interval"] = 100;
  j["checkpoint_interval"] = 0;
  j["heldout_fraction"] = 0.05;
  j["max_nbest"] = 100;
  j["instances_per_pass"] = 0;
  j["lambda"] = 0.5;
  j["alpha"] = 1.0;
  j["grid"] = "0:1:0.05";
  j["sentences"] = 1000;
  j["lists"] = 100;
  j["list_size"] = 10;
  j["early_window"] = 0;
  j["corpus"] = "";
  j["heldout"] = "";
  j["vocab"] = "";
  j["checkpoint"] = json::array();
  j["input"] = "";
  j["nbest"] = "";
  j["hyp"] = "";
  j["references"] = "";
  j["out"] = "";
  return j;
}

const ordered_json& default_values() {
  static const ordered_json d = defaults();
  return d;
}

bool is_integer_key(const ordered_json& v) { return v.is_number_integer(); }

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [key, v] : default_values().items()) out.push_back(key);
    return out;
  }();
  return k;
}

void RunConfig::merge_json(const json& object, const std::string& source) {
  if (!object.is_object()) throw ParameterError(source + ": configuration must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!default_values().contains(key)) {
      throw ParameterError(source + ": unknown configuration key '" + key + "'");
    }
    const auto& proto = default_values()[key];
    bool ok = false;
    if (is_integer_key(proto)) {
      ok = value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
    } else if (proto.is_number()) {
      ok = value.is_number();
    } else if (proto.is_string()) {
      ok = value.is_string();
    } else if (proto.is_array()) {
      ok = value.is_array() &&
           std::all_of(value.begin(), value.end(), [](const json& e) { return e.is_string(); });
    }
    if (!ok) {
      throw ParameterError(source + ": key '" + key + "' expects " +
                           (is_integer_key(proto) ? "a non-negative integer" : proto.type_name()));
    }
    values_[key] = value;
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  merge_json(j, path.string());
}

void RunConfig::merge_env(const std::function<const char*(const char*)>& lookup) {
  for (const auto& key : keys()) {
    const std::string name = kEnvPrefix + upper(key);
    const char* value = lookup ? lookup(name.c_str()) : std::getenv(name.c_str());
    if (value) set(key, value, name);
  }
}

void RunConfig::set(const std::string& key, const std::string& text, const std::string& source) {
  if (!default_values().contains(key)) {
    throw ParameterError(source + ": unknown configuration key '" + key + "'");
  }
  const auto& proto = default_values()[key];
  json parsed;
  if (proto.is_string()) {
    parsed = text;
  } else if (proto.is_array()) {
    parsed = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) parsed.push_back(item);
    }
  } else {
    try {
      parsed = json::parse(text);
    } catch (const json::exception&) {
      throw ParameterError(source + ": cannot parse '" + text + "' for key '" + key + "'");
    }
  }
  json wrapper;
  wrapper[key] = parsed;
  merge_json(wrapper, source);
}

std::string RunConfig::dump() const { return values_.dump(2) + "\n"; }

void RunConfig::write_to(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kFileName, std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / kFileName).string());
  out << dump();
}

std::uint64_t RunConfig::integer(const std::string& key) const {
  return values_.at(key).get<std::uint64_t>();
}
double RunConfig::number(const std::string& key) const { return values_.at(key).get<double>(); }
std::string RunConfig::string(const std::string& key) const {
  return values_.at(key).get<std::string>();
}
std::vector<std::string> RunConfig::strings(const std::string& key) const {
  return values_.at(key).get<std::vector<std::string>>();
}

ModelConfig RunConfig::model_config(std::size_t vocab_size) const {
  ModelConfig m;
  m.mode = mode();
  m.num_layers = integer("num_layers");
  m.model_dim = integer("model_dim");
  m.num_heads = integer("num_heads");
  m.ffn_dim = integer("ffn_dim");
  m.max_len = integer("max_len");
  m.vocab_size = vocab_size;
  m.dropout = number("dropout");
  m.validate();
  return m;
}

TrainConfig RunConfig::train_config(std::size_t vocab_size) const {
  TrainConfig t;
  t.model = model_config(vocab_size);
  t.adam.learning_rate = number("learning_rate");
  t.adam.beta1 = number("beta1");
  t.adam.beta2 = number("beta2");
  t.adam.eps = number("adam_eps");
  t.batch_size = integer("batch_size");
  t.max_steps = integer("max_steps");
  t.eval_interval = integer("eval_interval");
  t.checkpoint_interval = integer("checkpoint_interval");
  t.seed = seed();
  t.validate();
  return t;
}

}  // namespace sanlm
