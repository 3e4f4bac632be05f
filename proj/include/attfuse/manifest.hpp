// attfuse/manifest.hpp

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

// Line-delimited JSON dataset manifests with fields
// {audio_path, transcript, label, split, source}, plus the per-source,
// per-split, per-class counting behind the stats command.

#ifndef ATTFUSE_MANIFEST_HPP_
#define ATTFUSE_MANIFEST_HPP_

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "attfuse/errors.hpp"

namespace attfuse {

inline int label_from_string(const std::string& s) {
  if (s == "Hate") return 1;
  if (s == "NotHate") return 0;
  throw ManifestError("unknown label '" + s + "' (expected Hate|NotHate)");
}

inline const char* label_to_string(int label) {
  return label == 1 ? "Hate" : "NotHate";
}

inline int split_index(const std::string& s) {
  if (s == "train") return 0;
  if (s == "dev") return 1;
  if (s == "test") return 2;
  throw ManifestError("unknown split '" + s + "' (expected train|dev|test)");
}

inline constexpr const char* kSplitNames[3] = {"train", "dev", "test"};

struct ManifestEntry {
  std::string audio_path;
  std::string transcript;
  int label = 0;  // 0 = NotHate, 1 = Hate
  std::string split = "train";
  std::string source;
};

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(path + ":" + std::to_string(lineno) +
                          ": invalid JSON: " + e.what());
    }
    ManifestEntry entry;
    try {
      entry.audio_path = j.at("audio_path").get<std::string>();
      entry.transcript = j.at("transcript").get<std::string>();
      entry.label = label_from_string(j.at("label").get<std::string>());
      entry.split = j.at("split").get<std::string>();
      split_index(entry.split);  // validates
      entry.source = j.at("source").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ManifestError(path + ":" + std::to_string(lineno) +
                          ": missing or malformed field: " + e.what());
    } catch (const ManifestError& e) {
      throw ManifestError(path + ":" + std::to_string(lineno) + ": " +
                          e.what());
    }
    if (entry.audio_path.empty()) {
      throw ManifestError(path + ":" + std::to_string(lineno) +
                          ": audio_path must be nonempty");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

// counts[split][class]
using SplitClassCounts = std::array<std::array<int64_t, 2>, 3>;

struct DatasetStats {
  std::map<std::string, SplitClassCounts> per_source;
  SplitClassCounts totals{};

  nlohmann::json to_json() const {
    nlohmann::json j;
    auto block = [](const SplitClassCounts& c) {
      nlohmann::json b;
      for (int s = 0; s < 3; ++s) {
        b[kSplitNames[s]] = {{"Hate", c[s][1]}, {"NotHate", c[s][0]}};
      }
      return b;
    };
    for (const auto& [source, counts] : per_source) {
      j["sources"][source] = block(counts);
    }
    j["totals"] = block(totals);
    return j;
  }

  // Fixed-width table: one row per source, one totals row, split x class
  // columns.
  std::string format_table() const {
    std::ostringstream out;
    auto cell = [&out](const std::string& v) {
      out << std::string(v.size() < 14 ? 14 - v.size() : 1, ' ') << v;
    };
    auto row = [&](const std::string& name, const SplitClassCounts& c) {
      out << name;
      if (name.size() < 16) out << std::string(16 - name.size(), ' ');
      for (int s = 0; s < 3; ++s) {
        for (int cls = 1; cls >= 0; --cls) cell(std::to_string(c[s][cls]));
      }
      out << "\n";
    };
    out << std::string(16, ' ');
    for (int s = 0; s < 3; ++s) {
      for (int cls = 1; cls >= 0; --cls) {
        cell(std::string(kSplitNames[s]) + "/" + (cls ? "Hate" : "NotHate"));
      }
    }
    out << "\n";
    for (const auto& [source, counts] : per_source) row(source, counts);
    row("TOTAL", totals);
    return out.str();
  }
};

inline DatasetStats dataset_stats(const std::vector<ManifestEntry>& entries) {
  DatasetStats stats;
  for (const auto& e : entries) {
    const int s = split_index(e.split);
    stats.per_source[e.source][s][e.label] += 1;
    stats.totals[s][e.label] += 1;
  }
  return stats;
}

}  // namespace attfuse

#endif  // ATTFUSE_MANIFEST_HPP_
