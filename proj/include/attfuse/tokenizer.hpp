// attfuse/tokenizer.hpp

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

#ifndef ATTFUSE_TOKENIZER_HPP_
#define ATTFUSE_TOKENIZER_HPP_

#include <cctype>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "attfuse/errors.hpp"
#include "attfuse/vocab.hpp"

namespace attfuse {

// BOS/EOS-delimited id sequence padded to a fixed length; mask is 1 on real
// tokens (BOS and EOS included) and 0 on padding.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<int> attention_mask;

  int length() const { return static_cast<int>(ids.size()); }

  // Index of the last real (unmasked) position.
  int last_real_position() const {
    for (int i = length() - 1; i >= 0; --i) {
      if (attention_mask[i]) return i;
    }
    return 0;
  }
};

// Splits on whitespace; runs of leading/trailing ASCII punctuation become
// their own tokens.
inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  auto is_space = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  auto is_punct = [](char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
  };
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    size_t j = i;
    while (j < n && !is_space(text[j])) ++j;
    // word span [i, j); peel punctuation off both ends
    size_t a = i, b = j;
    while (a < b && is_punct(text[a])) out.push_back(std::string(1, text[a++]));
    size_t core_end = b;
    while (core_end > a && is_punct(text[core_end - 1])) --core_end;
    if (core_end > a) out.push_back(text.substr(a, core_end - a));
    for (size_t k = core_end; k < b; ++k) out.push_back(std::string(1, text[k]));
    i = j;
  }
  return out;
}

// Assembles [bos] + ids + [eos], truncating the word ids so EOS always fits,
// then pads to max_length.
inline TokenSequence assemble_sequence(const std::vector<int>& word_ids,
                                       int max_length) {
  if (max_length < 2) {
    throw ShapeError("tokenize: max_length must be at least 2");
  }
  TokenSequence seq;
  seq.ids.reserve(max_length);
  seq.ids.push_back(kBosId);
  const int keep = std::min<int>(static_cast<int>(word_ids.size()),
                                 max_length - 2);
  for (int i = 0; i < keep; ++i) seq.ids.push_back(word_ids[i]);
  seq.ids.push_back(kEosId);
  const int real = static_cast<int>(seq.ids.size());
  seq.ids.resize(max_length, kPadId);
  seq.attention_mask.assign(max_length, 0);
  for (int i = 0; i < real; ++i) seq.attention_mask[i] = 1;
  return seq;
}

// Tokenizer contract: text in, fixed-length TokenSequence out, every id
// inside [0, kVocabCapacity).
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenSequence tokenize(const std::string& text,
                                 int max_length) const = 0;
  virtual std::string name() const = 0;
};

// Word-level tokenizer over a loaded vocabulary; unknown words map to <unk>.
class WordTokenizer : public Tokenizer {
 public:
  explicit WordTokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  TokenSequence tokenize(const std::string& text,
                         int max_length) const override {
    std::vector<int> ids;
    for (const auto& word : split_words(text)) ids.push_back(vocab_.id(word));
    return assemble_sequence(ids, max_length);
  }

  std::string name() const override { return "word"; }

  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
};

// Vocabulary-free tokenizer: every word hashes deterministically (FNV-1a)
// into the id band [4, capacity).
class HashedTokenizer : public Tokenizer {
 public:
  static int hash_id(const std::string& word) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : word) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    const uint64_t band = static_cast<uint64_t>(kVocabCapacity) - 4;
    return 4 + static_cast<int>(h % band);
  }

  TokenSequence tokenize(const std::string& text,
                         int max_length) const override {
    std::vector<int> ids;
    for (const auto& word : split_words(text)) ids.push_back(hash_id(word));
    return assemble_sequence(ids, max_length);
  }

  std::string name() const override { return "hashed"; }
};

// Strips specials and joins the remaining tokens with single spaces.
// Inverse of WordTokenizer::tokenize on in-vocab, untruncated text.
inline std::string detokenize(const TokenSequence& seq,
                              const Vocabulary& vocab) {
  std::string out;
  for (int i = 0; i < seq.length(); ++i) {
    const int id = seq.ids[i];
    if (id < 0 || id >= Vocabulary::capacity()) {
      throw VocabError("detokenize: id out of range: " + std::to_string(id));
    }
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

}  // namespace attfuse

#endif  // ATTFUSE_TOKENIZER_HPP_
