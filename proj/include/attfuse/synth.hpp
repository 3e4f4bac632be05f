// attfuse/synth.hpp

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

#ifndef ATTFUSE_SYNTH_HPP_
#define ATTFUSE_SYNTH_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "attfuse/audio.hpp"
#include "attfuse/errors.hpp"
#include "attfuse/rng.hpp"

namespace attfuse {

// A dataset record before featurization: raw audio plus transcript.
struct RawExample {
  AudioWave audio;
  std::string transcript;
  int label = 0;  // 0 = NotHate, 1 = Hate
  std::string split = "train";
  std::string source;
};

struct SynthOptions {
  double duration_s = 1.0;
  int sample_rate = 16000;
  double hate_tone_hz = 4000.0;
  double neutral_tone_hz = 200.0;
  double noise_stddev = 0.005;
};

// Deterministic, exactly class-balanced toy task: the positive class is a
// high-frequency tone burst paired with a fixed marker word in the
// transcript, the negative class a low tone with a neutral marker. The two
// cues make the task separable through either modality.
inline std::vector<RawExample> synth_task(int n, uint64_t seed,
                                          const SynthOptions& opt = {}) {
  if (n < 2 || n % 2 != 0) {
    throw Error("synth_task: n must be even and at least 2");
  }
  static const char* kFiller[] = {"the",    "crowd", "gathers", "near",
                                  "river",  "every", "evening", "voices",
                                  "carry",  "over",  "water",   "tonight"};
  constexpr int kFillerCount = sizeof(kFiller) / sizeof(kFiller[0]);

  Rng rng(seed);
  const int samples = static_cast<int>(opt.duration_s * opt.sample_rate);
  const int burst_start = samples / 4;
  const int burst_end = samples * 3 / 4;

  std::vector<RawExample> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    RawExample ex;
    ex.label = i % 2;
    ex.source = "synthetic";
    ex.split = "train";

    const double freq = ex.label ? opt.hate_tone_hz : opt.neutral_tone_hz;
    const double amp = rng.uniform(0.4, 0.7);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    ex.audio.sample_rate = opt.sample_rate;
    ex.audio.samples.resize(static_cast<size_t>(samples));
    for (int s = 0; s < samples; ++s) {
      double v = opt.noise_stddev * rng.normal();
      if (s >= burst_start && s < burst_end) {
        v += amp * std::sin(2.0 * M_PI * freq * s / opt.sample_rate + phase);
      }
      ex.audio.samples[static_cast<size_t>(s)] = std::clamp(v, -1.0, 1.0);
    }

    const int n_words = static_cast<int>(rng.uniform_int(3, 6));
    std::vector<std::string> words;
    for (int w = 0; w < n_words; ++w) {
      words.push_back(kFiller[rng.uniform_int(0, kFillerCount - 1)]);
    }
    const int marker_pos = static_cast<int>(rng.uniform_int(0, n_words));
    words.insert(words.begin() + marker_pos, ex.label ? "venom" : "meadow");
    for (size_t w = 0; w < words.size(); ++w) {
      if (w) ex.transcript += ' ';
      ex.transcript += words[w];
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace attfuse

#endif  // ATTFUSE_SYNTH_HPP_
