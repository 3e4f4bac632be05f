// tests/test_audio.cpp

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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "attfuse/audio.hpp"
#include "oracles.hpp"

using namespace attfuse;

namespace {

AudioWave sine(double freq, double seconds, int rate, double amp = 0.5) {
  AudioWave w;
  w.sample_rate = rate;
  const int n = static_cast<int>(seconds * rate);
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
  }
  return w;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("resample at identical rate returns identical samples") {
  AudioWave w = sine(440.0, 0.1, 16000);
  AudioWave out = resample(w, 16000);
  REQUIRE(out.sample_rate == 16000);
  REQUIRE(out.samples == w.samples);
}

TEST_CASE("resample keeps a constant signal constant") {
  AudioWave w;
  w.sample_rate = 32000;
  w.samples.assign(32000, 0.5);
  AudioWave out = resample(w, 16000);
  REQUIRE(out.sample_rate == 16000);
  REQUIRE(out.samples.size() == 16000);
  for (double s : out.samples) REQUIRE(s == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("resample preserves duration within one sample period") {
  AudioWave w = sine(100.0, 0.73, 22050);
  AudioWave out = resample(w, 16000);
  const double in_dur = w.duration_s();
  const double out_dur = out.duration_s();
  REQUIRE(std::abs(in_dur - out_dur) <= 1.0 / 16000.0);
}

TEST_CASE("resampled sine keeps its dominant frequency (DFT oracle)") {
  // 1 kHz at 8 kHz input; after resampling to 16 kHz the strongest DFT bin
  // must still sit at 1 kHz.
  AudioWave w = sine(1000.0, 0.5, 8000);
  AudioWave out = resample(w, 16000);
  REQUIRE(out.samples.size() == 8000);
  const int bin = oracle::dominant_bin(out.samples);
  const double freq = bin * 16000.0 / static_cast<double>(out.samples.size());
  REQUIRE(freq == Catch::Approx(1000.0).margin(16000.0 / out.samples.size()));
}

TEST_CASE("resample rejects empty input") {
  AudioWave w;
  w.sample_rate = 16000;
  REQUIRE_THROWS_AS(resample(w, 8000), InvalidAudio);
}

TEST_CASE("pad_or_trim leaves exact-length input unchanged") {
  AudioWave w = sine(440.0, 1.0, 16000);
  w.samples.resize(480000, 0.25);
  AudioWave out = pad_or_trim(w, 480000);
  REQUIRE(out.samples == w.samples);
}

TEST_CASE("pad_or_trim zero-pads short input at the end") {
  AudioWave w;
  w.sample_rate = 16000;
  w.samples.assign(10, 1.0);
  AudioWave out = pad_or_trim(w, 480000);
  REQUIRE(out.samples.size() == 480000);
  for (int i = 0; i < 10; ++i) REQUIRE(out.samples[i] == 1.0);
  for (size_t i = 10; i < 480000; ++i) REQUIRE(out.samples[i] == 0.0);
}

TEST_CASE("pad_or_trim truncates long input") {
  AudioWave w;
  w.sample_rate = 16000;
  w.samples.resize(500000);
  for (size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = std::sin(0.001 * static_cast<double>(i));
  }
  AudioWave out = pad_or_trim(w, 480000);
  REQUIRE(out.samples.size() == 480000);
  for (size_t i = 0; i < 480000; i += 9973) {
    REQUIRE(out.samples[i] == w.samples[i]);
  }
}

TEST_CASE("PCM16 WAV round trip") {
  AudioWave w = sine(440.0, 0.05, 16000);
  const auto path = temp_file("attfuse_test_rt.wav");
  write_wav(path.string(), w);
  AudioWave back = read_wav(path.string());
  REQUIRE(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i) {
    REQUIRE(back.samples[i] == Catch::Approx(w.samples[i]).margin(1.0 / 32000.0));
  }
  std::filesystem::remove(path);
}

TEST_CASE("stereo float32 WAV is downmixed to mono") {
  // hand-built two-channel IEEE-float WAV with L = 0.5, R = -0.5
  const auto path = temp_file("attfuse_test_stereo.wav");
  {
    std::ofstream out(path, std::ios::binary);
    auto put = [&out](const void* p, size_t len) {
      out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(len));
    };
    const uint32_t n_frames = 100, rate = 16000;
    const uint32_t data_size = n_frames * 2 * 4;
    const uint32_t riff = 36 + data_size, fmt_size = 16;
    const uint16_t fmt = 3, channels = 2, bits = 32, block = 8;
    const uint32_t byte_rate = rate * block;
    put("RIFF", 4); put(&riff, 4); put("WAVE", 4);
    put("fmt ", 4); put(&fmt_size, 4); put(&fmt, 2); put(&channels, 2);
    put(&rate, 4); put(&byte_rate, 4); put(&block, 2); put(&bits, 2);
    put("data", 4); put(&data_size, 4);
    const float left = 0.5f, right = -0.5f;
    for (uint32_t i = 0; i < n_frames; ++i) {
      put(&left, 4);
      put(&right, 4);
    }
  }
  AudioWave w = read_wav(path.string());
  REQUIRE(w.sample_rate == 16000);
  REQUIRE(w.samples.size() == 100);
  for (double s : w.samples) REQUIRE(s == Catch::Approx(0.0).margin(1e-7));
  std::filesystem::remove(path);
}

TEST_CASE("corrupt WAV raises InvalidAudio") {
  const auto path = temp_file("attfuse_test_bad.wav");
  {
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a wav file";
  }
  REQUIRE_THROWS_AS(read_wav(path.string()), InvalidAudio);
  REQUIRE_THROWS_AS(read_wav("/nonexistent/missing.wav"), InvalidAudio);
  std::filesystem::remove(path);
}
