// tests/oracles.hpp

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

// Slow, straight-line reference implementations the tests check the library
// against. Everything here is written independently of the library code
// paths: plain loops, O(n^2) transforms, no Eigen.

#ifndef ATTFUSE_TESTS_ORACLES_HPP_
#define ATTFUSE_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Power spectrum |X_k|^2 of a real signal at bins 0..n/2 via the textbook
// DFT sum.
inline std::vector<double> dft_power(const std::vector<double>& x, int n_fft) {
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> power(static_cast<size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k) {
    double re = 0.0, im = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double angle = 2.0 * M_PI * k * static_cast<double>(i) / n_fft;
      re += x[i] * std::cos(angle);
      im -= x[i] * std::sin(angle);
    }
    power[static_cast<size_t>(k)] = re * re + im * im;
  }
  return power;
}

// Bin index with the largest power, ignoring DC.
inline int dominant_bin(const std::vector<double>& signal) {
  const int n = static_cast<int>(signal.size());
  std::vector<double> power = dft_power(signal, n);
  int best = 1;
  for (int k = 2; k < static_cast<int>(power.size()); ++k) {
    if (power[static_cast<size_t>(k)] > power[static_cast<size_t>(best)]) {
      best = k;
    }
  }
  return best;
}

struct LogMelParams {
  int sample_rate = 16000;
  int n_fft = 400;
  int n_mels = 80;
  int hop = 160;
  double power_floor = 1e-10;
  double dynamic_range = 8.0;
  bool normalize = true;
};

// Full log-mel reference: reflect pad, periodic Hann, per-frame DFT power,
// triangular filters on 2595*log10(1 + f/700), clamped log10, optional
// dynamic-range clamp and (x + 4) / 4 remap. Row-major [n_mels][frames].
inline std::vector<double> log_mel(const std::vector<double>& wave,
                                   const LogMelParams& p, int* out_frames) {
  const int n = static_cast<int>(wave.size());
  const int pad = p.n_fft / 2;
  std::vector<double> padded(static_cast<size_t>(n) + 2 * pad);
  for (int i = 0; i < pad; ++i) padded[static_cast<size_t>(i)] = wave[static_cast<size_t>(pad - i)];
  for (int i = 0; i < n; ++i) padded[static_cast<size_t>(pad + i)] = wave[static_cast<size_t>(i)];
  for (int i = 0; i < pad; ++i) {
    padded[static_cast<size_t>(pad + n + i)] = wave[static_cast<size_t>(n - 2 - i)];
  }

  std::vector<double> window(static_cast<size_t>(p.n_fft));
  for (int i = 0; i < p.n_fft; ++i) {
    window[static_cast<size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / p.n_fft);
  }

  const int frames = n / p.hop;
  const int n_bins = p.n_fft / 2 + 1;

  // independently-built triangular filterbank
  auto to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto to_hz = [](double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  };
  const double mel_top = to_mel(p.sample_rate / 2.0);
  std::vector<double> edge(static_cast<size_t>(p.n_mels) + 2);
  for (int i = 0; i < p.n_mels + 2; ++i) {
    edge[static_cast<size_t>(i)] = to_hz(mel_top * i / (p.n_mels + 1));
  }

  std::vector<double> out(static_cast<size_t>(p.n_mels) * frames);
  double global_max = -1e300;
  for (int t = 0; t < frames; ++t) {
    std::vector<double> frame(static_cast<size_t>(p.n_fft));
    for (int i = 0; i < p.n_fft; ++i) {
      frame[static_cast<size_t>(i)] =
          padded[static_cast<size_t>(t) * p.hop + i] * window[static_cast<size_t>(i)];
    }
    const std::vector<double> power = dft_power(frame, p.n_fft);
    for (int m = 0; m < p.n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * p.sample_rate / p.n_fft;
        const double up = (f - edge[m]) / (edge[m + 1] - edge[m]);
        const double down = (edge[m + 2] - f) / (edge[m + 2] - edge[m + 1]);
        const double w = std::max(0.0, std::min(up, down));
        acc += w * power[static_cast<size_t>(k)];
      }
      const double v = std::log10(std::max(acc, p.power_floor));
      out[static_cast<size_t>(m) * frames + t] = v;
      global_max = std::max(global_max, v);
    }
  }
  if (p.normalize) {
    for (double& v : out) {
      v = (std::max(v, global_max - p.dynamic_range) + 4.0) / 4.0;
    }
  }
  *out_frames = frames;
  return out;
}

// Triple-loop matmul, [m,k] x [k,n] row-major.
inline std::vector<double> matmul(const std::vector<double>& a,
                                  const std::vector<double>& b, int m, int k,
                                  int n) {
  std::vector<double> y(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < k; ++l) {
        acc += a[static_cast<size_t>(i) * k + l] * b[static_cast<size_t>(l) * n + j];
      }
      y[static_cast<size_t>(i) * n + j] = acc;
    }
  }
  return y;
}

// Nested-loop cross-correlation matching the library's conv contract.
inline std::vector<double> conv1d(const std::vector<double>& x, int c_in,
                                  int t_in, const std::vector<double>& w,
                                  int c_out, int kernel,
                                  const std::vector<double>& bias, int stride,
                                  int padding, int* out_t) {
  const int t_out = (t_in + 2 * padding - kernel) / stride + 1;
  std::vector<double> y(static_cast<size_t>(c_out) * t_out, 0.0);
  for (int co = 0; co < c_out; ++co) {
    for (int t = 0; t < t_out; ++t) {
      double acc = bias[static_cast<size_t>(co)];
      for (int ci = 0; ci < c_in; ++ci) {
        for (int k = 0; k < kernel; ++k) {
          const int src = t * stride + k - padding;
          if (src < 0 || src >= t_in) continue;
          acc += w[(static_cast<size_t>(co) * c_in + ci) * kernel + k] *
                 x[static_cast<size_t>(ci) * t_in + src];
        }
      }
      y[static_cast<size_t>(co) * t_out + t] = acc;
    }
  }
  *out_t = t_out;
  return y;
}

// One AdamW step on a scalar, written straight from the update equations.
struct AdamWScalarState {
  double m = 0.0;
  double v = 0.0;
  long t = 0;
};

inline double adamw_scalar_step(double p, double g, double lr,
                                AdamWScalarState& s, double beta1 = 0.9,
                                double beta2 = 0.98, double eps = 1e-6,
                                double decay = 0.1) {
  ++s.t;
  p -= lr * decay * p;
  s.m = beta1 * s.m + (1.0 - beta1) * g;
  s.v = beta2 * s.v + (1.0 - beta2) * g * g;
  const double mhat = s.m / (1.0 - std::pow(beta1, static_cast<double>(s.t)));
  const double vhat = s.v / (1.0 - std::pow(beta2, static_cast<double>(s.t)));
  return p - lr * mhat / (std::sqrt(vhat) + eps);
}

// Straight-line attentive fusion given the two linear maps, for checking
// the graph-built version.
inline std::vector<double> attentive_fusion(
    const std::vector<double>& x1, const std::vector<double>& x2,
    const std::vector<double>& w1, const std::vector<double>& b1,
    const std::vector<double>& w2, const std::vector<double>& b2, int in_dim,
    int out_dim, double eps) {
  std::vector<double> l1(static_cast<size_t>(out_dim), 0.0);
  std::vector<double> l2(static_cast<size_t>(out_dim), 0.0);
  for (int o = 0; o < out_dim; ++o) {
    l1[static_cast<size_t>(o)] = b1[static_cast<size_t>(o)];
    l2[static_cast<size_t>(o)] = b2[static_cast<size_t>(o)];
    for (int i = 0; i < in_dim; ++i) {
      l1[static_cast<size_t>(o)] += x1[static_cast<size_t>(i)] * w1[static_cast<size_t>(i) * out_dim + o];
      l2[static_cast<size_t>(o)] += x2[static_cast<size_t>(i)] * w2[static_cast<size_t>(i) * out_dim + o];
    }
  }
  std::vector<double> w(static_cast<size_t>(out_dim));
  double total = 0.0;
  for (int o = 0; o < out_dim; ++o) {
    w[static_cast<size_t>(o)] = std::exp(std::tanh(l1[static_cast<size_t>(o)] * l2[static_cast<size_t>(o)]));
    total += w[static_cast<size_t>(o)];
  }
  std::vector<double> out(static_cast<size_t>(out_dim));
  for (int o = 0; o < out_dim; ++o) {
    out[static_cast<size_t>(o)] = w[static_cast<size_t>(o)] / (total + eps) * w[static_cast<size_t>(o)];
  }
  return out;
}

// Row-wise layer norm with unit gain and zero bias.
inline std::vector<double> layer_norm_rows(const std::vector<double>& x,
                                           int rows, int cols,
                                           double eps = 1e-5) {
  std::vector<double> y(x.size());
  for (int r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (int c = 0; c < cols; ++c) mu += x[static_cast<size_t>(r) * cols + c];
    mu /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double d = x[static_cast<size_t>(r) * cols + c] - mu;
      var += d * d;
    }
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < cols; ++c) {
      y[static_cast<size_t>(r) * cols + c] =
          (x[static_cast<size_t>(r) * cols + c] - mu) * inv;
    }
  }
  return y;
}

}  // namespace oracle

#endif  // ATTFUSE_TESTS_ORACLES_HPP_
