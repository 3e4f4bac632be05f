// attfuse/mel.hpp

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

#ifndef ATTFUSE_MEL_HPP_
#define ATTFUSE_MEL_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "attfuse/audio.hpp"
#include "attfuse/errors.hpp"

namespace attfuse {

// Log-mel extraction parameters. Defaults: 16 kHz input, 400-point FFT with
// periodic Hann window, 80 mel channels, 160-sample hop, 30 s chunks; a full
// chunk therefore spans 480,000 samples and 3,000 frames.
struct MelConfig {
  int sample_rate = 16000;
  int n_fft = 400;
  int n_mels = 80;
  int hop_length = 160;
  int chunk_length_s = 30;

  // Power floor before log10, dynamic-range window below the running max,
  // and the (x + 4) / 4 affine remap. `normalize` switches the last two off
  // so tests can inspect raw log energies.
  double power_floor = 1e-10;
  double dynamic_range = 8.0;
  bool normalize = true;

  int n_samples() const { return sample_rate * chunk_length_s; }
  int n_frames() const { return n_samples() / hop_length; }
  int n_bins() const { return n_fft / 2 + 1; }
  double frame_duration_s() const {
    return static_cast<double>(hop_length) / sample_rate;
  }
  double log_floor() const { return std::log10(power_floor); }

  void validate() const {
    if (sample_rate <= 0 || n_fft <= 1 || n_mels <= 0 || hop_length <= 0 ||
        chunk_length_s <= 0) {
      throw ShapeError("MelConfig: all sizes must be positive");
    }
    if (n_samples() % hop_length != 0) {
      throw ShapeError("MelConfig: chunk sample count not divisible by hop");
    }
    if (power_floor <= 0.0) {
      throw ShapeError("MelConfig: power floor must be positive");
    }
  }
};

// n_mels x n_frames matrix of log-compressed mel energies, row-major.
template <typename T = float>
struct LogMelSpectrogram {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<T> values;  // values[m * n_frames + t]
  MelConfig config;

  T& at(int m, int t) { return values[static_cast<size_t>(m) * n_frames + t]; }
  T at(int m, int t) const {
    return values[static_cast<size_t>(m) * n_frames + t];
  }
};

// HTK mel scale.
inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Center frequencies (Hz) of the n_mels triangular filters, evenly spaced on
// the mel scale between 0 Hz and Nyquist.
inline std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> centers(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    centers[m] = mel_to_hz(mel_max * (m + 1) / (cfg.n_mels + 1));
  }
  return centers;
}

// Triangular mel filterbank, n_mels x (n_fft/2 + 1), peak weight 1.
inline std::vector<double> mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const int n_bins = cfg.n_bins();
  const double mel_max = hz_to_mel(cfg.sample_rate / 2.0);

  // n_mels + 2 edge points on the mel scale, converted back to Hz.
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_max * i / (cfg.n_mels + 1));
  }

  std::vector<double> fb(static_cast<size_t>(cfg.n_mels) * n_bins, 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      const double rising = (f - lo) / (center - lo);
      const double falling = (hi - f) / (hi - center);
      fb[static_cast<size_t>(m) * n_bins + k] =
          std::max(0.0, std::min(rising, falling));
    }
  }
  return fb;
}

// Periodic Hann window of length n.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  }
  return w;
}

namespace mel_detail {

// Reflect-pads by n_fft/2 on both sides so frame count is exactly
// n_samples / hop_length.
inline std::vector<double> reflect_pad(const std::vector<double>& x, int pad) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(static_cast<size_t>(n) + 2 * pad);
  for (int i = 0; i < pad; ++i) out[i] = x[std::min(pad - i, n - 1)];
  std::copy(x.begin(), x.end(), out.begin() + pad);
  for (int i = 0; i < pad; ++i) {
    out[static_cast<size_t>(pad) + n + i] = x[std::max(0, n - 2 - i)];
  }
  return out;
}

}  // namespace mel_detail

// Windowed STFT -> power spectrum -> mel filterbank -> clamped log10 ->
// optional dynamic-range clamp and affine remap. Input must already be
// padded/trimmed to cfg.n_samples().
template <typename T = float>
LogMelSpectrogram<T> log_mel_spectrogram(const AudioWave& wave,
                                         const MelConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(wave.samples.size()) != cfg.n_samples()) {
    throw ShapeError("log_mel_spectrogram: expected " +
                     std::to_string(cfg.n_samples()) + " samples, got " +
                     std::to_string(wave.samples.size()));
  }

  const int n_frames = cfg.n_frames();
  const int n_bins = cfg.n_bins();
  const int n_fft = cfg.n_fft;

  const std::vector<double> padded =
      mel_detail::reflect_pad(wave.samples, n_fft / 2);
  const std::vector<double> window = hann_window(n_fft);

  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Windowed frames, one per row.
  Mat frames(n_frames, n_fft);
  for (int t = 0; t < n_frames; ++t) {
    const double* src = padded.data() + static_cast<size_t>(t) * cfg.hop_length;
    for (int i = 0; i < n_fft; ++i) {
      frames(t, i) = static_cast<T>(src[i] * window[i]);
    }
  }

  // DFT as two matrix products against the cos/sin basis.
  Mat basis_cos(n_fft, n_bins), basis_sin(n_fft, n_bins);
  for (int i = 0; i < n_fft; ++i) {
    for (int k = 0; k < n_bins; ++k) {
      const double angle = 2.0 * M_PI * k * i / n_fft;
      basis_cos(i, k) = static_cast<T>(std::cos(angle));
      basis_sin(i, k) = static_cast<T>(-std::sin(angle));
    }
  }
  Mat re = frames * basis_cos;  // [n_frames, n_bins]
  Mat im = frames * basis_sin;
  Mat power = re.cwiseProduct(re) + im.cwiseProduct(im);

  const std::vector<double> fb = mel_filterbank(cfg);
  Mat fb_t(n_bins, cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    for (int k = 0; k < n_bins; ++k) {
      fb_t(k, m) = static_cast<T>(fb[static_cast<size_t>(m) * n_bins + k]);
    }
  }
  Mat mel = power * fb_t;  // [n_frames, n_mels]

  LogMelSpectrogram<T> spec;
  spec.n_mels = cfg.n_mels;
  spec.n_frames = n_frames;
  spec.config = cfg;
  spec.values.resize(static_cast<size_t>(cfg.n_mels) * n_frames);

  const T floor = static_cast<T>(cfg.power_floor);
  T max_val = std::numeric_limits<T>::lowest();
  for (int m = 0; m < cfg.n_mels; ++m) {
    for (int t = 0; t < n_frames; ++t) {
      const T v = std::log10(std::max(mel(t, m), floor));
      spec.at(m, t) = v;
      max_val = std::max(max_val, v);
    }
  }

  if (cfg.normalize) {
    const T lo = max_val - static_cast<T>(cfg.dynamic_range);
    for (T& v : spec.values) {
      v = (std::max(v, lo) + static_cast<T>(4)) / static_cast<T>(4);
    }
  }
  return spec;
}

// ─── Flat binary container ──────────────────────────────────────────────────
//
// Header {magic "AFSP", version, n_mels, n_frames} followed by row-major
// 32-bit floats.

inline constexpr uint32_t kSpectrogramMagic = 0x50534641;  // "AFSP"
inline constexpr uint32_t kSpectrogramVersion = 1;

inline void write_spectrogram(const std::string& path,
                              const LogMelSpectrogram<float>& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  const uint32_t header[4] = {kSpectrogramMagic, kSpectrogramVersion,
                              static_cast<uint32_t>(spec.n_mels),
                              static_cast<uint32_t>(spec.n_frames)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(spec.values.data()),
            static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
}

inline LogMelSpectrogram<float> read_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open spectrogram file: " + path);
  uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] != kSpectrogramMagic) {
    throw Error("bad spectrogram magic in: " + path);
  }
  if (header[1] != kSpectrogramVersion) {
    throw Error("unsupported spectrogram version in: " + path);
  }
  LogMelSpectrogram<float> spec;
  spec.n_mels = static_cast<int>(header[2]);
  spec.n_frames = static_cast<int>(header[3]);
  spec.values.resize(static_cast<size_t>(spec.n_mels) * spec.n_frames);
  in.read(reinterpret_cast<char*>(spec.values.data()),
          static_cast<std::streamsize>(spec.values.size() * sizeof(float)));
  if (!in) throw Error("truncated spectrogram file: " + path);
  return spec;
}

}  // namespace attfuse

#endif  // ATTFUSE_MEL_HPP_
