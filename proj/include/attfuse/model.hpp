// attfuse/model.hpp

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

// The full classifier graph: two cross-modal Transformer pipelines with
// LSTM heads (speech-encoder/text-decoder and the mirror image), the
// attentive-fusion layer that combines their pooled outputs, a concat
// ablation, single-pipeline ablations, and the 2-class softmax head.

#ifndef ATTFUSE_MODEL_HPP_
#define ATTFUSE_MODEL_HPP_

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "attfuse/audio.hpp"
#include "attfuse/layers.hpp"
#include "attfuse/mel.hpp"
#include "attfuse/sampling.hpp"
#include "attfuse/tensor.hpp"
#include "attfuse/tokenizer.hpp"
#include "attfuse/vocab.hpp"

namespace attfuse {

enum class Variant { kAttentive, kConcat, kPipeline1Only, kPipeline2Only };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kAttentive: return "attentive";
    case Variant::kConcat: return "concat";
    case Variant::kPipeline1Only: return "pipeline1";
    case Variant::kPipeline2Only: return "pipeline2";
  }
  return "attentive";
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "attentive") return Variant::kAttentive;
  if (name == "concat") return Variant::kConcat;
  if (name == "pipeline1") return Variant::kPipeline1Only;
  if (name == "pipeline2") return Variant::kPipeline2Only;
  throw Error("unknown variant: " + name +
              " (expected attentive|concat|pipeline1|pipeline2)");
}

// Architecture constants. Defaults are the full-size configuration; toy()
// is the reduced configuration the fast end-to-end checks run on.
struct ModelConfig {
  MelConfig mel;
  int vocab_capacity = kVocabCapacity;
  int max_length = 128;

  int conv1_filters = 4096;
  int conv2_filters = 1024;
  int kernel = 3;
  int stride1 = 1;
  int stride2 = 2;

  int d_model = 512;
  int n_heads = 4;
  int n_layers = 4;
  int ffn_dim = 2048;
  double dropout = 0.3;

  int lstm_units = 512;
  double lstm_dropout = 0.3;

  int fusion_dim = 512;
  double fusion_eps = 1e-7;

  bool operator==(const ModelConfig&) const = default;

  static ModelConfig defaults() { return ModelConfig{}; }

  static ModelConfig toy() {
    ModelConfig cfg;
    cfg.mel.chunk_length_s = 1;
    cfg.max_length = 16;
    cfg.conv1_filters = 64;
    cfg.conv2_filters = 32;
    cfg.d_model = 32;
    cfg.n_heads = 1;
    cfg.n_layers = 1;
    cfg.ffn_dim = 128;
    cfg.lstm_units = 32;
    cfg.fusion_dim = 32;
    return cfg;
  }

  SpeechSamplingConfig speech_sampling_config() const {
    SpeechSamplingConfig c;
    c.n_mels = mel.n_mels;
    c.conv1_filters = conv1_filters;
    c.conv2_filters = conv2_filters;
    c.kernel = kernel;
    c.stride1 = stride1;
    c.stride2 = stride2;
    c.d_model = d_model;
    return c;
  }

  // sampled speech length for a full chunk
  int speech_positions() const {
    return (mel.n_frames() + stride2 - 1) / stride2;
  }

  int samples_per_token() const { return mel.hop_length * stride2; }

  void validate() const {
    mel.validate();
    if (d_model % n_heads != 0) {
      throw ShapeError("ModelConfig: d_model must divide by n_heads");
    }
    if (dropout < 0.0 || dropout >= 1.0 || lstm_dropout < 0.0 ||
        lstm_dropout >= 1.0) {
      throw ShapeError("ModelConfig: dropout must lie in [0, 1)");
    }
    if (lstm_units != d_model) {
      throw ShapeError(
          "ModelConfig: lstm_units must equal d_model (outputs are summed)");
    }
    if (max_length < 2) {
      throw ShapeError("ModelConfig: max_length must be at least 2");
    }
    if (vocab_capacity < 4 || conv1_filters < 1 || conv2_filters < 1 ||
        n_layers < 1 || ffn_dim < 1 || fusion_dim < 1) {
      throw ShapeError("ModelConfig: sizes must be positive");
    }
    if (fusion_eps <= 0.0) {
      throw ShapeError("ModelConfig: fusion_eps must be positive");
    }
  }
};

// Hidden-state row at the last real (unmasked) position.
template <typename T>
Tensor<T> pool_last_real(const Tensor<T>& seq, const std::vector<int>* mask) {
  int idx = seq.dim(0) - 1;
  if (mask != nullptr) {
    for (int i = static_cast<int>(mask->size()) - 1; i >= 0; --i) {
      if ((*mask)[i]) {
        idx = i;
        break;
      }
    }
  }
  return reshape(slice(seq, 0, idx, 1), {seq.dim(1)});
}

// Encoder -> decoder -> LSTM head; one of the two cross-modal pipelines.
template <typename T>
struct Pipeline {
  TransformerEncoder<T> encoder;
  TransformerDecoder<T> decoder;
  Lstm<T> lstm;

  Pipeline() = default;
  Pipeline(const ModelConfig& cfg, Rng& rng)
      : encoder(cfg.n_layers, cfg.d_model, cfg.n_heads, cfg.ffn_dim,
                cfg.dropout, rng),
        decoder(cfg.n_layers, cfg.d_model, cfg.n_heads, cfg.ffn_dim,
                cfg.dropout, rng),
        lstm(cfg.d_model, cfg.lstm_units, cfg.lstm_dropout, rng) {}

  // Full LSTM hidden sequence over the decoder output.
  Tensor<T> forward_sequence(const Tensor<T>& enc_input,
                             const std::vector<int>* enc_key_mask,
                             const Tensor<T>& dec_input,
                             const std::vector<int>* dec_key_mask,
                             bool training, Rng* rng) const {
    Tensor<T> memory = encoder.forward(enc_input, enc_key_mask, training, rng);
    Tensor<T> decoded = decoder.forward(dec_input, memory, dec_key_mask,
                                        enc_key_mask, training, rng);
    return lstm.forward(decoded, training, rng);
  }

  // Pooled 512-wide output: LSTM state at the last real decoder position.
  Tensor<T> forward_pooled(const Tensor<T>& enc_input,
                           const std::vector<int>* enc_key_mask,
                           const Tensor<T>& dec_input,
                           const std::vector<int>* dec_key_mask, bool training,
                           Rng* rng) const {
    Tensor<T> seq = forward_sequence(enc_input, enc_key_mask, dec_input,
                                     dec_key_mask, training, rng);
    return pool_last_real(seq, dec_key_mask);
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    encoder.collect(params, prefix + ".encoder");
    decoder.collect(params, prefix + ".decoder");
    lstm.collect(params, prefix + ".lstm");
  }
};

// w = exp(tanh(Linear(x1) * Linear(x2))) elementwise, then each element is
// scaled by its share of the total: w' = (w / (sum(w) + eps)) * w. Every w
// lies in [1/e, e] by construction.
template <typename T>
Tensor<T> attentive_fusion(const Tensor<T>& x1, const Tensor<T>& x2,
                           const Linear<T>& l1, const Linear<T>& l2, T eps) {
  if (x1.shape() != x2.shape()) {
    throw ShapeError("attentive_fusion: input shape mismatch");
  }
  Tensor<T> a = l1.forward(x1);
  Tensor<T> b = l2.forward(x2);
  Tensor<T> w = exp_op(tanh_op(mul(a, b)));
  Tensor<T> denom = add_scalar(sum_all(w), eps);
  return mul(div_scalar_tensor(w, denom), w);
}

// Ablation: plain concatenation of the two pooled outputs.
template <typename T>
Tensor<T> concat_fusion(const Tensor<T>& x1, const Tensor<T>& x2) {
  if (x1.ndim() != 1 || x2.ndim() != 1) {
    throw ShapeError("concat_fusion: expected rank-1 inputs");
  }
  return concat<T>({x1, x2}, 0);
}

template <typename T>
struct ClassPrediction {
  std::array<T, 2> logits{};
  std::array<T, 2> probs{};
  int label = 0;  // 0 = NotHate, 1 = Hate

  const char* label_name() const { return label == 1 ? "Hate" : "NotHate"; }
};

inline constexpr const char* kLabelNames[2] = {"NotHate", "Hate"};

// Softmax over a 2-logit head; rejects non-finite input.
template <typename T>
ClassPrediction<T> prediction_from_logits(const Tensor<T>& logits) {
  if (logits.size() != 2) {
    throw ShapeError("classify: expected 2 logits");
  }
  ClassPrediction<T> pred;
  pred.logits = {logits.at(0), logits.at(1)};
  if (!std::isfinite(pred.logits[0]) || !std::isfinite(pred.logits[1])) {
    throw NumericalError("classify: non-finite logits");
  }
  const T m = std::max(pred.logits[0], pred.logits[1]);
  const T e0 = std::exp(pred.logits[0] - m);
  const T e1 = std::exp(pred.logits[1] - m);
  pred.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
  pred.label = pred.probs[1] > pred.probs[0] ? 1 : 0;
  return pred;
}

template <typename T>
struct Model {
  ModelConfig cfg;
  Variant variant = Variant::kAttentive;

  SpeechSampling<T> speech_sampling;
  TextSampling<T> text_sampling;
  Pipeline<T> pipeline1;  // speech encoder, text decoder
  Pipeline<T> pipeline2;  // text encoder, speech decoder
  Linear<T> fusion_l1, fusion_l2;
  Linear<T> classifier;

  Model() = default;

  // Every component is constructed regardless of variant (the ablations
  // must leave unused weights untouched, not absent); only the classifier
  // width depends on the variant.
  Model(const ModelConfig& config, Variant v, uint64_t seed)
      : cfg(config), variant(v) {
    cfg.validate();
    Rng rng = Rng(seed).fork(0);
    speech_sampling = SpeechSampling<T>(cfg.speech_sampling_config(), rng);
    text_sampling = TextSampling<T>(cfg.vocab_capacity, cfg.d_model, rng);
    pipeline1 = Pipeline<T>(cfg, rng);
    pipeline2 = Pipeline<T>(cfg, rng);
    fusion_l1 = Linear<T>(cfg.lstm_units, cfg.fusion_dim, rng);
    fusion_l2 = Linear<T>(cfg.lstm_units, cfg.fusion_dim, rng);
    classifier = Linear<T>(classifier_input_dim(), 2, rng);
  }

  int classifier_input_dim() const {
    switch (variant) {
      case Variant::kAttentive: return cfg.fusion_dim;
      case Variant::kConcat: return 2 * cfg.lstm_units;
      default: return cfg.lstm_units;
    }
  }

  Tensor<T> pooled_pipeline1(const Tensor<T>& speech, const Tensor<T>& text,
                             const std::vector<int>& text_mask, bool training,
                             Rng* rng) const {
    return pipeline1.forward_pooled(speech, nullptr, text, &text_mask,
                                    training, rng);
  }

  Tensor<T> pooled_pipeline2(const Tensor<T>& speech, const Tensor<T>& text,
                             const std::vector<int>& text_mask, bool training,
                             Rng* rng) const {
    return pipeline2.forward_pooled(text, &text_mask, speech, nullptr,
                                    training, rng);
  }

  // Classifier logits from a spectrogram tensor and token sequence.
  Tensor<T> logits_from_features(const Tensor<T>& spec,
                                 const TokenSequence& tokens, bool training,
                                 Rng* rng) const {
    Tensor<T> speech = speech_sampling.forward(spec);
    Tensor<T> text = text_sampling.forward(tokens);
    const std::vector<int>& mask = tokens.attention_mask;

    Tensor<T> fused;
    switch (variant) {
      case Variant::kAttentive: {
        Tensor<T> x1 = pooled_pipeline1(speech, text, mask, training, rng);
        Tensor<T> x2 = pooled_pipeline2(speech, text, mask, training, rng);
        fused = attentive_fusion(x1, x2, fusion_l1, fusion_l2,
                                 static_cast<T>(cfg.fusion_eps));
        break;
      }
      case Variant::kConcat: {
        Tensor<T> x1 = pooled_pipeline1(speech, text, mask, training, rng);
        Tensor<T> x2 = pooled_pipeline2(speech, text, mask, training, rng);
        fused = concat_fusion(x1, x2);
        break;
      }
      case Variant::kPipeline1Only:
        fused = pooled_pipeline1(speech, text, mask, training, rng);
        break;
      case Variant::kPipeline2Only:
        fused = pooled_pipeline2(speech, text, mask, training, rng);
        break;
    }
    return classifier.forward(fused);
  }

  // End-to-end inference from raw audio: resample, pad/trim, featurize,
  // classify. Builds no graph.
  ClassPrediction<T> forward(const AudioWave& audio,
                             const TokenSequence& tokens) const {
    NoGradGuard no_grad;
    Tensor<T> spec = featurize(audio);
    Tensor<T> logits = logits_from_features(spec, tokens, false, nullptr);
    return prediction_from_logits(logits);
  }

  Tensor<T> featurize(const AudioWave& audio) const {
    AudioWave at_rate = resample(audio, cfg.mel.sample_rate);
    AudioWave fixed = pad_or_trim(at_rate, cfg.mel.n_samples());
    LogMelSpectrogram<T> spec = log_mel_spectrogram<T>(fixed, cfg.mel);
    return Tensor<T>::from({spec.n_mels, spec.n_frames},
                           std::move(spec.values));
  }

  // Parameters the active variant trains and checkpoints. Registration
  // order is fixed.
  ParamMap<T> parameters() {
    ParamMap<T> params;
    speech_sampling.collect(params, "speech_sampling");
    text_sampling.collect(params, "text_sampling");
    const bool p1 = variant != Variant::kPipeline2Only;
    const bool p2 = variant != Variant::kPipeline1Only;
    if (p1) pipeline1.collect(params, "pipeline1");
    if (p2) pipeline2.collect(params, "pipeline2");
    if (variant == Variant::kAttentive) {
      fusion_l1.collect(params, "fusion.l1");
      fusion_l2.collect(params, "fusion.l2");
    }
    classifier.collect(params, "classifier");
    return params;
  }
};

}  // namespace attfuse

#endif  // ATTFUSE_MODEL_HPP_
