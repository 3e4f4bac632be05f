// attfuse/sampling.hpp

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

// The two input-adaptation blocks. Speech: conv -> GELU -> conv -> GELU ->
// linear bridge to d_model, then the sum of a positional-encoding path and
// an LSTM path. Text: zero-masked word embedding plus positional encoding.
// Neither block applies dropout.

#ifndef ATTFUSE_SAMPLING_HPP_
#define ATTFUSE_SAMPLING_HPP_

#include <string>
#include <vector>

#include "attfuse/layers.hpp"
#include "attfuse/tensor.hpp"
#include "attfuse/tokenizer.hpp"

namespace attfuse {

struct SpeechSamplingConfig {
  int n_mels = 80;
  int conv1_filters = 4096;
  int conv2_filters = 1024;
  int kernel = 3;
  int stride1 = 1;
  int stride2 = 2;
  int d_model = 512;

  bool operator==(const SpeechSamplingConfig&) const = default;
};

template <typename T>
struct SpeechSampling {
  SpeechSamplingConfig cfg;
  Conv1dLayer<T> conv1, conv2;
  Linear<T> proj;  // bridges conv2_filters down to d_model
  Lstm<T> lstm;

  SpeechSampling() = default;
  SpeechSampling(const SpeechSamplingConfig& c, Rng& rng)
      : cfg(c),
        conv1(c.n_mels, c.conv1_filters, c.kernel, c.stride1, 1, rng),
        conv2(c.conv1_filters, c.conv2_filters, c.kernel, c.stride2, 1, rng),
        proj(c.conv2_filters, c.d_model, rng),
        lstm(c.d_model, c.d_model, 0.0, rng) {}

  // spec: [n_mels, T] -> [ceil(T / stride2), d_model]
  Tensor<T> forward(const Tensor<T>& spec) const {
    if (spec.ndim() != 2 || spec.dim(0) != cfg.n_mels) {
      throw ShapeError("speech_sampling: expected [" +
                       std::to_string(cfg.n_mels) + ", T] spectrogram, got " +
                       shape_str(spec.shape()));
    }
    Tensor<T> h = gelu(conv1.forward(spec));
    h = gelu(conv2.forward(h));
    Tensor<T> tokens = proj.forward(transpose(h));  // [T', d_model]
    Tensor<T> with_positions =
        add(tokens, positional_encoding<T>(tokens.dim(0), cfg.d_model));
    Tensor<T> recurrent = lstm.forward(tokens);
    return add(with_positions, recurrent);
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    conv1.collect(params, prefix + ".conv1");
    conv2.collect(params, prefix + ".conv2");
    proj.collect(params, prefix + ".proj");
    lstm.collect(params, prefix + ".lstm");
  }
};

template <typename T>
struct TextSampling {
  int d_model = 0;
  EmbeddingLayer<T> word_embedding;

  TextSampling() = default;
  TextSampling(int vocab_capacity, int d, Rng& rng)
      : d_model(d), word_embedding(vocab_capacity, d, rng) {}

  // Pad rows carry no embedding, so they come out as pure positional
  // encoding.
  Tensor<T> forward(const TokenSequence& seq) const {
    Tensor<T> emb = word_embedding.forward(seq.ids, seq.attention_mask);
    return add(emb, positional_encoding<T>(seq.length(), d_model));
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    word_embedding.collect(params, prefix + ".embedding");
  }
};

}  // namespace attfuse

#endif  // ATTFUSE_SAMPLING_HPP_
