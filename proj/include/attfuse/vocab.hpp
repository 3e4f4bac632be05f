// attfuse/vocab.hpp

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

#ifndef ATTFUSE_VOCAB_HPP_
#define ATTFUSE_VOCAB_HPP_

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "attfuse/errors.hpp"

namespace attfuse {

// Token ids 0-3 are reserved; pad must be 0 so zero-masked embeddings line
// up with padding.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;

inline constexpr int kVocabCapacity = 64014;

inline const char* kPadToken = "<pad>";
inline const char* kBosToken = "<s>";
inline const char* kEosToken = "</s>";
inline const char* kUnkToken = "<unk>";

// Bijective token<->id table over a fixed 64,014-slot id space. Stored
// tokens may occupy fewer slots than the capacity; the remainder is unused
// (or claimed by the hashed tokenizer's fallback band).
class Vocabulary {
 public:
  Vocabulary() { inject_specials(); }

  // Loads a UTF-8 vocab file, one token per line, ids assigned in line
  // order. The four specials take ids 0-3: either the file's first four
  // lines are exactly <pad>, <s>, </s>, <unk>, or they are injected ahead
  // of the file's tokens.
  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw VocabError("cannot open vocab file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }

    Vocabulary vocab;
    const bool file_has_specials =
        lines.size() >= 4 && lines[0] == kPadToken && lines[1] == kBosToken &&
        lines[2] == kEosToken && lines[3] == kUnkToken;
    for (size_t i = file_has_specials ? 4 : 0; i < lines.size(); ++i) {
      if (lines[i].empty()) {
        throw VocabError("empty token at line " + std::to_string(i + 1) +
                         " of " + path);
      }
      vocab.add(lines[i], path, i + 1);
    }
    return vocab;
  }

  // Number of stored tokens (specials included).
  int size() const { return static_cast<int>(id_to_token_.size()); }

  // Fixed id-space width; the embedding table dimension.
  static constexpr int capacity() { return kVocabCapacity; }

  bool contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
  }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  // Token string for an id. Ids inside the capacity with no stored token
  // render as the unknown marker; ids beyond the capacity are an error.
  std::string token(int id) const {
    if (id < 0 || id >= kVocabCapacity) {
      throw VocabError("token id out of range: " + std::to_string(id));
    }
    if (id >= size()) return kUnkToken;
    return id_to_token_[id];
  }

  int pad_id() const { return kPadId; }
  int bos_id() const { return kBosId; }
  int eos_id() const { return kEosId; }
  int unk_id() const { return kUnkId; }

 private:
  void inject_specials() {
    for (const char* tok : {kPadToken, kBosToken, kEosToken, kUnkToken}) {
      token_to_id_.emplace(tok, static_cast<int>(id_to_token_.size()));
      id_to_token_.emplace_back(tok);
    }
  }

  void add(const std::string& token, const std::string& path, size_t lineno) {
    if (token_to_id_.count(token)) {
      throw VocabError("duplicate token '" + token + "' at line " +
                       std::to_string(lineno) + " of " + path);
    }
    if (size() >= kVocabCapacity) {
      throw VocabError("vocab exceeds capacity of " +
                       std::to_string(kVocabCapacity) + " at line " +
                       std::to_string(lineno) + " of " + path);
    }
    token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(token);
  }

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

}  // namespace attfuse

#endif  // ATTFUSE_VOCAB_HPP_
