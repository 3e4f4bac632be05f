// attfuse/audio.hpp

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

#ifndef ATTFUSE_AUDIO_HPP_
#define ATTFUSE_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "attfuse/errors.hpp"

namespace attfuse {

// Mono PCM signal with amplitudes in [-1, 1].
struct AudioWave {
  std::vector<double> samples;
  int sample_rate = 16000;

  size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Resamples to target_rate by linear interpolation. Duration is preserved
// within one sample period; identical rates return the input unchanged.
inline AudioWave resample(const AudioWave& wave, int target_rate) {
  if (wave.samples.empty()) {
    throw InvalidAudio("resample: empty input signal");
  }
  if (target_rate <= 0) {
    throw InvalidAudio("resample: target rate must be positive");
  }
  if (wave.sample_rate == target_rate) return wave;

  const size_t n_in = wave.samples.size();
  const double ratio =
      static_cast<double>(target_rate) / static_cast<double>(wave.sample_rate);
  const size_t n_out = std::max<size_t>(
      1, static_cast<size_t>(std::llround(static_cast<double>(n_in) * ratio)));

  AudioWave out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (size_t i = 0; i < n_out; ++i) {
    const double src = static_cast<double>(i) / ratio;
    const size_t lo = std::min(static_cast<size_t>(src), n_in - 1);
    const size_t hi = std::min(lo + 1, n_in - 1);
    const double frac = src - static_cast<double>(lo);
    out.samples[i] = wave.samples[lo] * (1.0 - frac) + wave.samples[hi] * frac;
  }
  return out;
}

// Forces the signal to exactly n_samples: zero-pads short input at the end,
// truncates long input to the first n_samples.
inline AudioWave pad_or_trim(const AudioWave& wave, size_t n_samples) {
  AudioWave out = wave;
  out.samples.resize(n_samples, 0.0);
  return out;
}

// ─── WAV container ──────────────────────────────────────────────────────────
//
// Reads PCM16 and IEEE float32 RIFF/WAVE files; stereo is downmixed to mono
// by averaging. Anything else raises InvalidAudio.

namespace wav_detail {

inline uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

inline uint16_t read_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

}  // namespace wav_detail

inline AudioWave read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidAudio("cannot open audio file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InvalidAudio("not a RIFF/WAVE file: " + path);
  }

  using wav_detail::read_u16;
  using wav_detail::read_u32;

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  bool have_fmt = false;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) {
      throw InvalidAudio("truncated WAV chunk in: " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw InvalidAudio("malformed fmt chunk: " + path);
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_len == 0) {
    throw InvalidAudio("WAV missing fmt or data chunk: " + path);
  }
  if (channels < 1 || channels > 2) {
    throw InvalidAudio("unsupported channel count in: " + path);
  }

  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw InvalidAudio("unsupported WAV encoding (want PCM16 or float32): " +
                       path);
  }

  const size_t bytes_per_sample = bits / 8;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n_frames = data_len / frame_bytes;

  AudioWave wave;
  wave.sample_rate = static_cast<int>(rate);
  wave.samples.resize(n_frames);
  const uint8_t* d = bytes.data() + data_off;
  for (size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const uint8_t* s = d + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        int16_t v;
        std::memcpy(&v, s, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, s, 4);
        acc += static_cast<double>(v);
      }
    }
    wave.samples[i] = acc / channels;
  }
  return wave;
}

// Writes a mono PCM16 WAV; used by the tooling and tests.
inline void write_wav(const std::string& path, const AudioWave& wave) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidAudio("cannot open for writing: " + path);

  const uint32_t n = static_cast<uint32_t>(wave.samples.size());
  const uint32_t data_size = n * 2;
  const uint32_t riff_size = 36 + data_size;
  const uint32_t rate = static_cast<uint32_t>(wave.sample_rate);
  const uint32_t byte_rate = rate * 2;
  const uint16_t block_align = 2, bits = 16, fmt = 1, channels = 1;
  const uint32_t fmt_size = 16;

  auto put = [&out](const void* p, size_t len) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(len));
  };
  put("RIFF", 4);
  put(&riff_size, 4);
  put("WAVE", 4);
  put("fmt ", 4);
  put(&fmt_size, 4);
  put(&fmt, 2);
  put(&channels, 2);
  put(&rate, 4);
  put(&byte_rate, 4);
  put(&block_align, 2);
  put(&bits, 2);
  put("data", 4);
  put(&data_size, 4);
  for (uint32_t i = 0; i < n; ++i) {
    const double clamped = std::clamp(wave.samples[i], -1.0, 1.0);
    const int16_t v = static_cast<int16_t>(std::lround(clamped * 32767.0));
    put(&v, 2);
  }
}

}  // namespace attfuse

#endif  // ATTFUSE_AUDIO_HPP_
