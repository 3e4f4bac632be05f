// attfuse/metrics.hpp

// Copyright 2026  attfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTFUSE_METRICS_HPP_
#define ATTFUSE_METRICS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "attfuse/errors.hpp"

namespace attfuse {

// Per-class precision/recall/F1 over the binary task plus the 2x2 confusion
// matrix. macro_f1 is the unweighted mean of the two F1 scores.
struct MetricsReport {
  std::array<std::array<int64_t, 2>, 2> confusion{};  // [true][predicted]
  std::array<double, 2> precision{};
  std::array<double, 2> recall{};
  std::array<double, 2> f1{};
  double macro_f1 = 0.0;
  int64_t n_samples = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n_samples"] = n_samples;
    j["confusion"] = {{confusion[0][0], confusion[0][1]},
                      {confusion[1][0], confusion[1][1]}};
    const char* names[2] = {"NotHate", "Hate"};
    for (int c = 0; c < 2; ++c) {
      j["per_class"][names[c]] = {{"precision", precision[c]},
                                  {"recall", recall[c]},
                                  {"f1", f1[c]}};
    }
    j["macro_f1"] = macro_f1;
    return j;
  }

  static MetricsReport from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.n_samples = j.at("n_samples").get<int64_t>();
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        r.confusion[a][b] = j.at("confusion").at(a).at(b).get<int64_t>();
      }
    }
    const char* names[2] = {"NotHate", "Hate"};
    for (int c = 0; c < 2; ++c) {
      const auto& pc = j.at("per_class").at(names[c]);
      r.precision[c] = pc.at("precision").get<double>();
      r.recall[c] = pc.at("recall").get<double>();
      r.f1[c] = pc.at("f1").get<double>();
    }
    r.macro_f1 = j.at("macro_f1").get<double>();
    return r;
  }
};

// Binary macro-F1 with the 0/0 -> 0 convention on degenerate classes.
inline MetricsReport macro_f1(const std::vector<int>& predictions,
                              const std::vector<int>& labels) {
  if (predictions.empty()) {
    throw MetricsError("macro_f1: empty sample set");
  }
  if (predictions.size() != labels.size()) {
    throw MetricsError("macro_f1: prediction/label count mismatch");
  }

  MetricsReport r;
  r.n_samples = static_cast<int64_t>(predictions.size());
  for (size_t i = 0; i < predictions.size(); ++i) {
    const int y = labels[i], p = predictions[i];
    if (y < 0 || y > 1 || p < 0 || p > 1) {
      throw MetricsError("macro_f1: labels must be 0 or 1");
    }
    ++r.confusion[y][p];
  }

  for (int c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(r.confusion[c][c]);
    const double fp = static_cast<double>(r.confusion[1 - c][c]);
    const double fn = static_cast<double>(r.confusion[c][1 - c]);
    r.precision[c] = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    r.recall[c] = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    const double denom = r.precision[c] + r.recall[c];
    r.f1[c] = denom > 0.0 ? 2.0 * r.precision[c] * r.recall[c] / denom : 0.0;
  }
  r.macro_f1 = (r.f1[0] + r.f1[1]) / 2.0;
  return r;
}

}  // namespace attfuse

#endif  // ATTFUSE_METRICS_HPP_
