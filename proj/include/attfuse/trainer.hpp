// attfuse/trainer.hpp

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

// Epoch loop: seeded shuffling, batched gradient accumulation, global-norm
// clipping, AdamW with the warmup schedule, per-epoch dev metrics, and
// best-dev parameter retention. Everything is single-threaded and
// deterministic under a fixed seed.

#ifndef ATTFUSE_TRAINER_HPP_
#define ATTFUSE_TRAINER_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "attfuse/manifest.hpp"
#include "attfuse/metrics.hpp"
#include "attfuse/model.hpp"
#include "attfuse/optimizer.hpp"
#include "attfuse/synth.hpp"
#include "attfuse/tokenizer.hpp"

namespace attfuse {

struct TrainOptions {
  int epochs = 20;
  int batch_size = 8;
  uint64_t seed = 0;
  ScheduleMode schedule = ScheduleMode::kLiteral;
  int warmup_steps = 2048;
  double lr_cap = 4e-4;
  OptimizerConfig optimizer;
  double clip_norm = 1.0;  // <= 0 disables clipping
  bool class_weights = true;
  int max_steps = 0;  // 0 = no step budget
};

template <typename T>
struct FeaturizedExample {
  Tensor<T> spectrogram;
  TokenSequence tokens;
  int label = 0;
};

// Reads manifest audio from disk; transcripts ride along unchanged.
inline std::vector<RawExample> load_raw_dataset(
    const std::vector<ManifestEntry>& entries) {
  std::vector<RawExample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    RawExample ex;
    ex.audio = read_wav(e.audio_path);
    ex.transcript = e.transcript;
    ex.label = e.label;
    ex.split = e.split;
    ex.source = e.source;
    out.push_back(std::move(ex));
  }
  return out;
}

// Featurization is done once per example and cached as plain tensors.
template <typename T>
std::vector<FeaturizedExample<T>> featurize_dataset(
    const std::vector<RawExample>& raw, const ModelConfig& cfg,
    const Tokenizer& tokenizer) {
  std::vector<FeaturizedExample<T>> out;
  out.reserve(raw.size());
  for (const auto& ex : raw) {
    FeaturizedExample<T> f;
    AudioWave wave = resample(ex.audio, cfg.mel.sample_rate);
    wave = pad_or_trim(wave, static_cast<size_t>(cfg.mel.n_samples()));
    LogMelSpectrogram<T> spec = log_mel_spectrogram<T>(wave, cfg.mel);
    f.spectrogram = Tensor<T>::from({spec.n_mels, spec.n_frames},
                                    std::move(spec.values));
    f.tokens = tokenizer.tokenize(ex.transcript, cfg.max_length);
    f.label = ex.label;
    out.push_back(std::move(f));
  }
  return out;
}

// Inverse-frequency class weights normalized so a balanced set gives 1/1.
template <typename T>
std::array<T, 2> class_weights(const std::vector<FeaturizedExample<T>>& data) {
  std::array<int64_t, 2> counts{0, 0};
  for (const auto& ex : data) ++counts[ex.label];
  std::array<T, 2> w{T(1), T(1)};
  for (int c = 0; c < 2; ++c) {
    if (counts[c] > 0) {
      w[c] = static_cast<T>(static_cast<double>(data.size()) /
                            (2.0 * static_cast<double>(counts[c])));
    }
  }
  return w;
}

template <typename T>
MetricsReport evaluate_dataset(const Model<T>& model,
                               const std::vector<FeaturizedExample<T>>& data,
                               std::vector<int>* out_predictions = nullptr) {
  NoGradGuard no_grad;
  std::vector<int> predictions, labels;
  predictions.reserve(data.size());
  labels.reserve(data.size());
  for (const auto& ex : data) {
    Tensor<T> logits =
        model.logits_from_features(ex.spectrogram, ex.tokens, false, nullptr);
    predictions.push_back(prediction_from_logits(logits).label);
    labels.push_back(ex.label);
  }
  if (out_predictions != nullptr) *out_predictions = predictions;
  return macro_f1(predictions, labels);
}

struct EpochRecord {
  int epoch = 0;
  int steps = 0;
  double avg_train_loss = 0.0;
  MetricsReport dev;
};

struct TrainSummary {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  MetricsReport best_dev;
  MetricsReport train_metrics;  // on the train split, best parameters
  int64_t total_steps = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["total_steps"] = total_steps;
    j["best_epoch"] = best_epoch;
    j["best_dev"] = best_dev.to_json();
    j["train"] = train_metrics.to_json();
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : history) {
      j["epochs"].push_back({{"epoch", e.epoch},
                             {"steps", e.steps},
                             {"avg_train_loss", e.avg_train_loss},
                             {"dev", e.dev.to_json()}});
    }
    return j;
  }
};

// Trains in place and leaves the model holding the best-dev parameters.
// `on_epoch` (optional) sees each epoch record as it lands.
template <typename T>
TrainSummary train(Model<T>& model,
                   const std::vector<FeaturizedExample<T>>& train_data,
                   const std::vector<FeaturizedExample<T>>& dev_data,
                   const TrainOptions& opt,
                   const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (train_data.empty()) throw Error("train: empty training set");

  ParamMap<T> params = model.parameters();
  AdamW<T> optimizer(opt.optimizer);
  LrSchedule schedule{opt.schedule, opt.warmup_steps, model.cfg.d_model,
                      opt.lr_cap};
  Rng dropout_rng = Rng(opt.seed).fork(1);
  Rng shuffle_rng = Rng(opt.seed).fork(2);

  const std::array<T, 2> weights =
      opt.class_weights ? class_weights(train_data)
                        : std::array<T, 2>{T(1), T(1)};

  auto snapshot = [&params]() {
    std::vector<std::vector<T>> copy;
    copy.reserve(params.size());
    for (const auto& [name, p] : params.entries) copy.push_back(p.values());
    return copy;
  };
  auto restore = [&params](const std::vector<std::vector<T>>& copy) {
    for (size_t i = 0; i < params.size(); ++i) {
      params.entries[i].second.mutable_values() = copy[i];
    }
  };

  TrainSummary summary;
  std::vector<std::vector<T>> best = snapshot();
  summary.best_dev = evaluate_dataset(model, dev_data);
  summary.best_epoch = 0;
  double best_f1 = summary.best_dev.macro_f1;

  std::vector<size_t> order(train_data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int64_t global_step = 0;
  bool budget_hit = opt.epochs == 0;
  for (int epoch = 1; epoch <= opt.epochs && !budget_hit; ++epoch) {
    // seeded Fisher-Yates so runs are reproducible
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(
          shuffle_rng.uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    int steps_this_epoch = 0;
    for (size_t start = 0; start < order.size(); start += opt.batch_size) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(opt.batch_size));
      params.zero_grad();
      Tensor<T> batch_loss;
      for (size_t k = start; k < end; ++k) {
        const auto& ex = train_data[order[k]];
        Tensor<T> logits = model.logits_from_features(ex.spectrogram,
                                                      ex.tokens, true,
                                                      &dropout_rng);
        Tensor<T> loss = cross_entropy(logits, ex.label, weights[ex.label]);
        batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
      }
      batch_loss =
          scale(batch_loss, T(1) / static_cast<T>(end - start));
      batch_loss.backward();
      if (opt.clip_norm > 0.0) clip_global_norm(params, opt.clip_norm);
      ++global_step;
      optimizer.step(params, schedule.rate(global_step));

      loss_sum += static_cast<double>(batch_loss.item());
      ++steps_this_epoch;
      if (opt.max_steps > 0 && global_step >= opt.max_steps) {
        budget_hit = true;
        break;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.steps = steps_this_epoch;
    record.avg_train_loss =
        steps_this_epoch > 0 ? loss_sum / steps_this_epoch : 0.0;
    record.dev = evaluate_dataset(model, dev_data);
    if (record.dev.macro_f1 > best_f1) {
      best_f1 = record.dev.macro_f1;
      best = snapshot();
      summary.best_epoch = epoch;
      summary.best_dev = record.dev;
    }
    summary.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  restore(best);
  summary.total_steps = global_step;
  summary.train_metrics = evaluate_dataset(model, train_data);
  return summary;
}

}  // namespace attfuse

#endif  // ATTFUSE_TRAINER_HPP_
