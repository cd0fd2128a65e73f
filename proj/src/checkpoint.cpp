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

#include "sanlm/checkpoint.hpp"

#include <bit>
#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sanlm/errors.hpp"
#include "sanlm/vocabulary.hpp"

namespace sanlm {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'A', 'N', 'L', 'M', 'C', 'K', 'P'};
constexpr std::string_view kAdamFirst = "adam.m.";
constexpr std::string_view kAdamSecond = "adam.v.";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, std::size_t limit)
      : bytes_(bytes), limit_(limit) {}

  std::uint64_t u64(const char* what) { return read_le(8, what); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(read_le(4, what)); }
  std::string_view take(std::uint64_t n, const char* what) {
    need(n, what);
    std::string_view out(bytes_.data() + pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::uint64_t n, const char* what) const {
    if (n > limit_ || pos_ > limit_ - n) {
      throw CheckpointTruncatedError(std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::uint64_t read_le(int n, const char* what) {
    need(n, what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  const std::string& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

json config_to_json(const ModelConfig& c) {
  return json{{"mode", std::string(mode_name(c.mode))},
              {"num_layers", c.num_layers},
              {"model_dim", c.model_dim},
              {"num_heads", c.num_heads},
              {"ffn_dim", c.ffn_dim},
              {"max_len", c.max_len},
              {"vocab_size", c.vocab_size},
              {"dropout", c.dropout}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

void append_tensor(std::string& data, const Tensor& t) {
  for (double v : t.values()) put_u64(data, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (const Parameter* p : ckpt.model.parameters()) tensors.emplace_back(p->name, &p->value);
  const auto params = ckpt.model.parameters();
  if (ckpt.optimizer) {
    const AdamState& adam = *ckpt.optimizer;
    if (adam.first_moment.size() != params.size()) {
      throw CheckpointError("optimizer state does not match the model parameters");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      tensors.emplace_back(std::string(kAdamFirst) + params[k]->name, &adam.first_moment[k]);
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      tensors.emplace_back(std::string(kAdamSecond) + params[k]->name, &adam.second_moment[k]);
    }
  }

  json manifest = json::array();
  std::string data;
  for (const auto& [name, t] : tensors) {
    manifest.push_back({{"name", name}, {"shape", t->shape()}, {"offset", data.size()}});
    append_tensor(data, *t);
  }

  json header{{"config", config_to_json(ckpt.model.config())},
              {"vocab", {{"hash", hex64(ckpt.vocab.hash)}, {"path", ckpt.vocab.path}}},
              {"step", ckpt.step},
              {"rng", {{"seed", ckpt.rng.seed}, {"counter", ckpt.rng.counter}}},
              {"optimizer", ckpt.optimizer ? json{{"step", ckpt.optimizer->step}} : json(nullptr)}};

  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  const std::string header_text = header.dump();
  const std::string manifest_text = manifest.dump();
  put_u64(out, header_text.size());
  out += header_text;
  put_u64(out, manifest_text.size());
  out += manifest_text;
  put_u64(out, data.size());
  out += data;
  put_u64(out, fnv1a64(out));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes, const CheckpointExpectations& expect) {
  const std::size_t magic_seen = std::min(bytes.size(), sizeof(kMagic));
  if (std::memcmp(bytes.data(), kMagic, magic_seen) != 0) {
    throw CheckpointVersionError("not a sanlm checkpoint (bad magic)");
  }
  if (bytes.size() < sizeof(kMagic) + 4 + 8) {
    throw CheckpointTruncatedError("checkpoint truncated in the preamble");
  }
  // The final 8 bytes are the checksum; everything else is the body.
  const std::size_t body_size = bytes.size() - 8;
  Reader r(bytes, body_size);
  r.take(sizeof(kMagic), "magic");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("checkpoint format version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const std::string_view header_text = r.take(r.u64("header length"), "header");
  const std::string_view manifest_text = r.take(r.u64("manifest length"), "manifest");
  const std::uint64_t data_size = r.u64("data length");
  const std::string_view data = r.take(data_size, "tensor data");
  if (r.pos() != body_size) {
    throw CheckpointTruncatedError("checkpoint has " + std::to_string(body_size - r.pos()) +
                                   " unexpected trailing bytes");
  }
  Reader tail(bytes, bytes.size());
  tail.take(body_size, "body");
  const std::uint64_t stored = tail.u64("checksum");
  if (stored != fnv1a64(std::string_view(bytes.data(), body_size))) {
    throw CheckpointChecksumError("checkpoint checksum mismatch; the file is corrupt");
  }

  json header, manifest;
  try {
    header = json::parse(header_text);
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  ModelConfig config;
  VocabularyRef vocab;
  std::map<std::string, Tensor> tensors;
  try {
    config = config_from_json(header.at("config"));
    vocab.hash = std::stoull(header.at("vocab").at("hash").get<std::string>(), nullptr, 16);
    vocab.path = header.at("vocab").at("path").get<std::string>();
    for (const json& entry : manifest) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const std::size_t count = shape_size(shape);
      if (offset > data.size() || count > (data.size() - offset) / 8) {
        throw CheckpointTruncatedError("tensor '" + name + "' extends past the data section");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
          bits |= static_cast<std::uint64_t>(
                      static_cast<unsigned char>(data[offset + 8 * i + b]))
                  << (8 * b);
        }
        values[i] = std::bit_cast<double>(bits);
      }
      tensors.emplace(name, Tensor(shape, std::move(values)));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }

  if (expect.vocab_hash && *expect.vocab_hash != vocab.hash) {
    throw CheckpointMismatchError("checkpoint was trained with vocabulary " + hex64(vocab.hash) +
                                  " but vocabulary " + hex64(*expect.vocab_hash) +
                                  " was supplied");
  }
  if (expect.config && !(*expect.config == config)) {
    throw CheckpointMismatchError("checkpoint model configuration differs from the expected one");
  }

  LanguageModel model = LanguageModel::zeros(config);
  auto params = model.parameters();
  auto take_tensor = [&](const std::string& name, const Shape& shape) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
    if (it->second.shape() != shape) {
      throw CheckpointError("tensor '" + name + "' has shape " +
                            shape_string(it->second.shape()) + ", expected " +
                            shape_string(shape));
    }
    return std::move(it->second);
  };
  for (Parameter* p : params) p->value = take_tensor(p->name, p->value.shape());

  std::optional<AdamState> optimizer;
  if (!header.at("optimizer").is_null()) {
    AdamState adam;
    adam.step = header.at("optimizer").at("step").get<std::uint64_t>();
    for (Parameter* p : params) {
      adam.first_moment.push_back(take_tensor(std::string(kAdamFirst) + p->name, p->value.shape()));
    }
    for (Parameter* p : params) {
      adam.second_moment.push_back(
          take_tensor(std::string(kAdamSecond) + p->name, p->value.shape()));
    }
    optimizer = std::move(adam);
  }

  return Checkpoint{std::move(model), std::move(vocab), std::move(optimizer),
                    header.at("step").get<std::uint64_t>(),
                    RngState{header.at("rng").at("seed").get<std::uint64_t>(),
                             header.at("rng").at("counter").get<std::uint64_t>()}};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const CheckpointExpectations& expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str(), expect);
}

}  // namespace sanlm
