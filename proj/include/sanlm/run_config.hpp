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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sanlm/model.hpp"
#include "sanlm/training.hpp"

namespace sanlm {

// Resolved settings for one CLI invocation. Layers are merged in the order
// defaults < config file < SANLM_* environment variables < flags; every
// layer is checked against the documented key set.
class RunConfig {
 public:
  static constexpr const char* kEnvPrefix = "SANLM_";
  static constexpr const char* kFileName = "resolved_config.json";

  RunConfig();

  static const std::vector<std::string>& keys();

  void merge_json(const nlohmann::json& object, const std::string& source);
  void merge_file(const std::filesystem::path& path);
  // `lookup` defaults to std::getenv. List-valued keys take comma-separated text.
  void merge_env(const std::function<const char*(const char*)>& lookup = {});
  void set(const std::string& key, const std::string& text, const std::string& source);

  const nlohmann::ordered_json& values() const { return values_; }
  std::string dump() const;
  void write_to(const std::filesystem::path& dir) const;

  std::uint64_t integer(const std::string& key) const;
  double number(const std::string& key) const;
  std::string string(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;

  std::uint64_t seed() const { return integer("seed"); }
  std::size_t threads() const { return integer("threads"); }
  LmMode mode() const { return parse_mode(string("mode")); }
  ModelConfig model_config(std::size_t vocab_size) const;
  TrainConfig train_config(std::size_t vocab_size) const;

 private:
  nlohmann::ordered_json values_;
};

}  // namespace sanlm
