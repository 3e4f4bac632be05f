// tests/test_mel.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "attfuse/mel.hpp"
#include "attfuse/rng.hpp"
#include "oracles.hpp"

using namespace attfuse;

namespace {

MelConfig one_second_config() {
  MelConfig cfg;
  cfg.chunk_length_s = 1;
  return cfg;
}

AudioWave noise(int samples, uint64_t seed, double amp = 0.2) {
  Rng rng(seed);
  AudioWave w;
  w.sample_rate = 16000;
  w.samples.resize(samples);
  for (double& s : w.samples) s = amp * rng.uniform(-1.0, 1.0);
  return w;
}

AudioWave sine(double freq, int samples, int rate = 16000, double amp = 0.5) {
  AudioWave w;
  w.sample_rate = rate;
  w.samples.resize(samples);
  for (int i = 0; i < samples; ++i) {
    w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
  }
  return w;
}

}  // namespace

TEST_CASE("filterbank has shape 80 x 201 for the default config") {
  MelConfig cfg;
  auto fb = mel_filterbank(cfg);
  REQUIRE(cfg.n_bins() == 201);
  REQUIRE(fb.size() == 80u * 201u);
}

TEST_CASE("every filterbank row sums to a strictly positive value") {
  MelConfig cfg;
  auto fb = mel_filterbank(cfg);
  for (int m = 0; m < cfg.n_mels; ++m) {
    double sum = 0.0;
    for (int k = 0; k < cfg.n_bins(); ++k) {
      const double w = fb[static_cast<size_t>(m) * cfg.n_bins() + k];
      REQUIRE(w >= 0.0);
      sum += w;
    }
    REQUIRE(sum > 0.0);
  }
}

TEST_CASE("filter center frequencies increase monotonically") {
  MelConfig cfg;
  auto centers = mel_center_frequencies(cfg);
  REQUIRE(centers.size() == 80u);
  for (size_t i = 1; i < centers.size(); ++i) {
    REQUIRE(centers[i] > centers[i - 1]);
  }
  REQUIRE(centers.back() < cfg.sample_rate / 2.0);
}

TEST_CASE("every bin between the first and last centers is covered") {
  MelConfig cfg;
  auto fb = mel_filterbank(cfg);
  auto centers = mel_center_frequencies(cfg);
  for (int k = 0; k < cfg.n_bins(); ++k) {
    const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
    if (f < centers.front() || f > centers.back()) continue;
    double col = 0.0;
    for (int m = 0; m < cfg.n_mels; ++m) {
      col += fb[static_cast<size_t>(m) * cfg.n_bins() + k];
    }
    REQUIRE(col > 0.0);
  }
}

TEST_CASE("a full 30 s chunk produces exactly 3000 frames") {
  MelConfig cfg;
  REQUIRE(cfg.n_samples() == 480000);
  REQUIRE(cfg.n_frames() == 3000);
  AudioWave w = sine(440.0, cfg.n_samples());
  auto spec = log_mel_spectrogram<float>(w, cfg);
  REQUIRE(spec.n_mels == 80);
  REQUIRE(spec.n_frames == 3000);
  // frame-count law and frame duration
  REQUIRE(cfg.n_frames() == cfg.n_samples() / cfg.hop_length);
  REQUIRE(cfg.frame_duration_s() == Catch::Approx(0.010));
}

TEST_CASE("silence maps to a constant floor matrix") {
  MelConfig cfg = one_second_config();
  AudioWave w;
  w.sample_rate = 16000;
  w.samples.assign(cfg.n_samples(), 0.0);

  auto spec = log_mel_spectrogram<double>(w, cfg);
  const double normalized_floor = (cfg.log_floor() + 4.0) / 4.0;
  for (double v : spec.values) REQUIRE(v == normalized_floor);

  cfg.normalize = false;
  auto raw = log_mel_spectrogram<double>(w, cfg);
  for (double v : raw.values) REQUIRE(v == cfg.log_floor());
}

TEST_CASE("all values stay at or above the dynamic floor") {
  MelConfig cfg = one_second_config();
  auto spec = log_mel_spectrogram<float>(noise(cfg.n_samples(), 11), cfg);
  float max_v = spec.values[0];
  for (float v : spec.values) max_v = std::max(max_v, v);
  const float floor = (max_v * 4.0f - 4.0f - 8.0f + 4.0f) / 4.0f;  // (max-8+4)/4
  for (float v : spec.values) {
    REQUIRE(std::isfinite(v));
    REQUIRE(v >= floor - 1e-6f);
  }
}

TEST_CASE("wrong sample count raises ShapeError") {
  MelConfig cfg = one_second_config();
  AudioWave w = sine(440.0, cfg.n_samples() - 1);
  REQUIRE_THROWS_AS(log_mel_spectrogram<float>(w, cfg), ShapeError);
}

TEST_CASE("pure tone lands in the mel row nearest its frequency") {
  MelConfig cfg = one_second_config();
  AudioWave w = sine(1000.0, cfg.n_samples());
  auto spec = log_mel_spectrogram<double>(w, cfg);

  // time-averaged energy per row
  int best_row = 0;
  double best_energy = -1e300;
  for (int m = 0; m < spec.n_mels; ++m) {
    double acc = 0.0;
    for (int t = 0; t < spec.n_frames; ++t) acc += spec.at(m, t);
    if (acc > best_energy) {
      best_energy = acc;
      best_row = m;
    }
  }

  auto centers = mel_center_frequencies(cfg);
  int nearest = 0;
  for (int m = 1; m < cfg.n_mels; ++m) {
    if (std::abs(centers[m] - 1000.0) < std::abs(centers[nearest] - 1000.0)) {
      nearest = m;
    }
  }
  REQUIRE(best_row == nearest);

  // cross-check against the independent DFT + filterbank oracle
  oracle::LogMelParams p;
  int frames = 0;
  auto ref = oracle::log_mel(w.samples, p, &frames);
  int oracle_row = 0;
  double oracle_energy = -1e300;
  for (int m = 0; m < p.n_mels; ++m) {
    double acc = 0.0;
    for (int t = 0; t < frames; ++t) acc += ref[static_cast<size_t>(m) * frames + t];
    if (acc > oracle_energy) {
      oracle_energy = acc;
      oracle_row = m;
    }
  }
  REQUIRE(best_row == oracle_row);
}

TEST_CASE("pipeline matches the naive DFT+filterbank+log oracle") {
  MelConfig cfg = one_second_config();
  AudioWave w = noise(cfg.n_samples(), 42);
  auto spec = log_mel_spectrogram<float>(w, cfg);

  oracle::LogMelParams p;
  int frames = 0;
  auto ref = oracle::log_mel(w.samples, p, &frames);
  REQUIRE(frames == spec.n_frames);

  double max_diff = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    max_diff = std::max(max_diff,
                        std::abs(ref[i] - static_cast<double>(spec.values[i])));
  }
  REQUIRE(max_diff < 1e-3);
}

TEST_CASE("identical wave and config give bit-identical spectrograms") {
  MelConfig cfg = one_second_config();
  AudioWave w = noise(cfg.n_samples(), 7);
  auto a = log_mel_spectrogram<float>(w, cfg);
  auto b = log_mel_spectrogram<float>(w, cfg);
  REQUIRE(a.values == b.values);
}

TEST_CASE("scaling the wave by 10 lifts unclamped log energies by 2") {
  MelConfig cfg = one_second_config();
  cfg.normalize = false;
  AudioWave w = noise(cfg.n_samples(), 5, 0.05);
  AudioWave scaled = w;
  for (double& s : scaled.samples) s *= 10.0;

  auto base = log_mel_spectrogram<double>(w, cfg);
  auto lifted = log_mel_spectrogram<double>(scaled, cfg);
  for (size_t i = 0; i < base.values.size(); ++i) {
    if (base.values[i] <= cfg.log_floor() + 1e-9) continue;  // clamped cell
    REQUIRE(lifted.values[i] - base.values[i] == Catch::Approx(2.0).margin(1e-9));
  }
}

TEST_CASE("spectrogram container round trip") {
  MelConfig cfg = one_second_config();
  auto spec = log_mel_spectrogram<float>(noise(cfg.n_samples(), 3), cfg);
  const auto path =
      std::filesystem::temp_directory_path() / "attfuse_test_spec.bin";
  write_spectrogram(path.string(), spec);
  auto back = read_spectrogram(path.string());
  REQUIRE(back.n_mels == spec.n_mels);
  REQUIRE(back.n_frames == spec.n_frames);
  REQUIRE(back.values == spec.values);
  std::filesystem::remove(path);
}

TEST_CASE("container rejects bad magic") {
  const auto path =
      std::filesystem::temp_directory_path() / "attfuse_test_badspec.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXXGARBAGEGARBAGEGARBAGE";
  }
  REQUIRE_THROWS_AS(read_spectrogram(path.string()), Error);
  std::filesystem::remove(path);
}
