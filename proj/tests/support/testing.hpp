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

// Helpers shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sanlm/autograd.hpp"
#include "sanlm/rng.hpp"
#include "sanlm/tensor.hpp"

namespace sanlm::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = scale * rng.normal();
  return t;
}

inline Parameter random_parameter(const std::string& name, Shape shape, Rng& rng,
                                  double scale = 1.0) {
  return Parameter(name, random_tensor(std::move(shape), rng, scale));
}

struct GradientReport {
  std::string name;
  double relative_error = 0.0;
  double analytic_norm = 0.0;
};

// Compares backward() against central differences for every element of every
// parameter. `loss` must build a fresh graph from the parameters' current
// values each call and be deterministic. The error of a tensor is
// ||analytic - numeric|| / max(||analytic||, ||numeric||), 0 when both vanish.
inline std::vector<GradientReport> gradient_check(const std::vector<const Parameter*>& params,
                                                  const std::function<Var()>& loss,
                                                  double h = 1e-5) {
  for (const Parameter* p : params) p->zero_grad();
  backward(loss());
  std::vector<GradientReport> out;
  for (const Parameter* p : params) {
    Tensor& value = const_cast<Parameter*>(p)->value;
    double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double up = loss().value().item();
      value[i] = saved - h;
      const double down = loss().value().item();
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      f2 += numeric * numeric;
    }
    const double denom = std::sqrt(std::max(a2, f2));
    out.push_back({p->name, denom == 0.0 ? 0.0 : std::sqrt(diff2) / denom, std::sqrt(a2)});
  }
  return out;
}

inline double max_error(const std::vector<GradientReport>& reports) {
  double m = 0.0;
  for (const auto& r : reports) m = std::max(m, r.relative_error);
  return m;
}

// Every sequence over {a, b, c} of length <= max_len, shortest first.
inline std::vector<std::vector<std::string>> all_sequences(std::size_t max_len) {
  std::vector<std::vector<std::string>> out = {{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (const char* sym : {"a", "b", "c"}) {
        auto next = out[i];
        next.push_back(sym);
        out.push_back(std::move(next));
      }
    }
    begin = end;
  }
  return out;
}

// Edit distances between all pairs of `all_sequences(max_len)`, found by
// breadth-first search over single-word insertions, deletions and
// substitutions. Shortest paths never need sequences longer than the longer
// endpoint, so the search stays inside the enumerated set.
inline std::vector<std::vector<int>> edit_distance_oracle(std::size_t max_len) {
  const auto seqs = all_sequences(max_len);
  const auto index_of = [](const std::vector<std::string>& s) {
    std::size_t idx = 0, base = 1, offset = 0;
    for (std::size_t l = 0; l < s.size(); ++l) {
      offset += base;
      base *= 3;
    }
    for (const auto& w : s) idx = idx * 3 + static_cast<std::size_t>(w[0] - 'a');
    return offset + idx;
  };
  std::vector<std::vector<int>> dist(seqs.size(), std::vector<int>(seqs.size(), -1));
  for (std::size_t src = 0; src < seqs.size(); ++src) {
    auto& d = dist[src];
    std::vector<std::size_t> frontier = {src};
    d[src] = 0;
    for (int level = 1; !frontier.empty(); ++level) {
      std::vector<std::size_t> next;
      auto visit = [&](const std::vector<std::string>& s) {
        const std::size_t k = index_of(s);
        if (d[k] < 0) {
          d[k] = level;
          next.push_back(k);
        }
      };
      for (std::size_t cur : frontier) {
        const auto& s = seqs[cur];
        for (std::size_t i = 0; i < s.size(); ++i) {
          auto del = s;
          del.erase(del.begin() + static_cast<long>(i));
          visit(del);
          for (const char* sym : {"a", "b", "c"}) {
            if (s[i] == sym) continue;
            auto sub = s;
            sub[i] = sym;
            visit(sub);
          }
        }
        if (s.size() < max_len) {
          for (std::size_t i = 0; i <= s.size(); ++i) {
            for (const char* sym : {"a", "b", "c"}) {
              auto ins = s;
              ins.insert(ins.begin() + static_cast<long>(i), sym);
              visit(ins);
            }
          }
        }
      }
      frontier = std::move(next);
    }
  }
  return dist;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sanlm-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sanlm::testing
