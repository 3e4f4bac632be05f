// attfuse/layers.hpp

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

#ifndef ATTFUSE_LAYERS_HPP_
#define ATTFUSE_LAYERS_HPP_

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "attfuse/errors.hpp"
#include "attfuse/rng.hpp"
#include "attfuse/tensor.hpp"

namespace attfuse {

// Ordered name -> parameter map. Iteration order is registration order, so
// optimizers and checkpoints see a stable layout.
template <typename T>
struct ParamMap {
  std::vector<std::pair<std::string, Tensor<T>>> entries;

  void add(std::string name, Tensor<T> t) {
    entries.emplace_back(std::move(name), std::move(t));
  }

  Tensor<T>* find(const std::string& name) {
    for (auto& [n, t] : entries) {
      if (n == name) return &t;
    }
    return nullptr;
  }

  size_t size() const { return entries.size(); }

  int64_t total_values() const {
    int64_t n = 0;
    for (const auto& [name, t] : entries) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : entries) t.zero_grad();
  }
};

// ─── Initializers ────────────────────────────────────────────────────────────

template <typename T>
Tensor<T> xavier_uniform(std::vector<int> shape, int fan_in, int fan_out,
                         Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<T> v(static_cast<size_t>(n));
  for (T& x : v) x = static_cast<T>(rng.uniform(-limit, limit));
  return Tensor<T>::from(std::move(shape), std::move(v), true);
}

template <typename T>
Tensor<T> normal_init(std::vector<int> shape, double stddev, Rng& rng) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<T> v(static_cast<size_t>(n));
  for (T& x : v) x = static_cast<T>(rng.normal(0.0, stddev));
  return Tensor<T>::from(std::move(shape), std::move(v), true);
}

// Square orthogonal matrix via modified Gram-Schmidt on a random normal
// draw, in doubles regardless of T.
template <typename T>
std::vector<T> orthogonal_square(int n, Rng& rng) {
  std::vector<double> m(static_cast<size_t>(n) * n);
  for (double& x : m) x = rng.normal();
  for (int j = 0; j < n; ++j) {
    for (int prev = 0; prev < j; ++prev) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) {
        dot += m[static_cast<size_t>(i) * n + j] * m[static_cast<size_t>(i) * n + prev];
      }
      for (int i = 0; i < n; ++i) {
        m[static_cast<size_t>(i) * n + j] -= dot * m[static_cast<size_t>(i) * n + prev];
      }
    }
    double norm = 0.0;
    for (int i = 0; i < n; ++i) {
      norm += m[static_cast<size_t>(i) * n + j] * m[static_cast<size_t>(i) * n + j];
    }
    norm = std::sqrt(std::max(norm, 1e-30));
    for (int i = 0; i < n; ++i) m[static_cast<size_t>(i) * n + j] /= norm;
  }
  std::vector<T> out(m.size());
  for (size_t i = 0; i < m.size(); ++i) out[i] = static_cast<T>(m[i]);
  return out;
}

// ─── Basic layers ────────────────────────────────────────────────────────────

template <typename T>
struct Linear {
  int in = 0, out = 0;
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  Linear() = default;
  Linear(int in_dim, int out_dim, Rng& rng)
      : in(in_dim),
        out(out_dim),
        weight(xavier_uniform<T>({in_dim, out_dim}, in_dim, out_dim, rng)),
        bias(Tensor<T>::zeros({out_dim}, true)) {}

  // x: [R, in] or [in]
  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.ndim() == 1) {
      auto y = add_row_broadcast(matmul(reshape(x, {1, in}), weight), bias);
      return reshape(y, {out});
    }
    return add_row_broadcast(matmul(x, weight), bias);
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    params.add(prefix + ".weight", weight);
    params.add(prefix + ".bias", bias);
  }
};

template <typename T>
struct Conv1dLayer {
  int c_in = 0, c_out = 0, kernel = 3, stride = 1, padding = 1;
  Tensor<T> weight;  // [C_out, C_in, K]
  Tensor<T> bias;    // [C_out]

  Conv1dLayer() = default;
  Conv1dLayer(int in_ch, int out_ch, int k, int s, int pad, Rng& rng)
      : c_in(in_ch),
        c_out(out_ch),
        kernel(k),
        stride(s),
        padding(pad),
        weight(xavier_uniform<T>({out_ch, in_ch, k}, in_ch * k, out_ch * k, rng)),
        bias(Tensor<T>::zeros({out_ch}, true)) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    return conv1d(x, weight, bias, stride, padding);
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    params.add(prefix + ".weight", weight);
    params.add(prefix + ".bias", bias);
  }
};

template <typename T>
struct EmbeddingLayer {
  int vocab = 0, dim = 0;
  Tensor<T> table;  // [vocab, dim]

  EmbeddingLayer() = default;
  EmbeddingLayer(int vocab_size, int d, Rng& rng)
      : vocab(vocab_size),
        dim(d),
        table(normal_init<T>({vocab_size, d}, 1.0 / std::sqrt(double(d)), rng)) {}

  Tensor<T> forward(const std::vector<int>& ids,
                    const std::vector<int>& mask) const {
    return embedding(table, ids, mask);
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    params.add(prefix + ".table", table);
  }
};

// Sinusoidal positional encoding, [t_len, d_model], values in [-1, 1]:
// PE(t, 2i) = sin(t / 10000^(2i/d)), PE(t, 2i+1) = cos of the same angle.
template <typename T>
Tensor<T> positional_encoding(int t_len, int d_model) {
  if (t_len < 1 || d_model < 1) {
    throw ShapeError("positional_encoding: sizes must be positive");
  }
  std::vector<T> v(static_cast<size_t>(t_len) * d_model);
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < d_model; i += 2) {
      const double angle = t / std::pow(10000.0, double(i) / d_model);
      v[static_cast<size_t>(t) * d_model + i] = static_cast<T>(std::sin(angle));
      if (i + 1 < d_model) {
        v[static_cast<size_t>(t) * d_model + i + 1] =
            static_cast<T>(std::cos(angle));
      }
    }
  }
  return Tensor<T>::from({t_len, d_model}, std::move(v), false);
}

template <typename T>
struct LayerNormParams {
  Tensor<T> gain;
  Tensor<T> bias;

  LayerNormParams() = default;
  explicit LayerNormParams(int d)
      : gain(Tensor<T>::full({d}, T(1), true)),
        bias(Tensor<T>::zeros({d}, true)) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    return layer_norm(x, gain, bias, T(1e-5));
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    params.add(prefix + ".gain", gain);
    params.add(prefix + ".bias", bias);
  }
};

// ─── LSTM ────────────────────────────────────────────────────────────────────

// Single-layer LSTM returning the full hidden sequence. Gate order i, f, g,
// o; tanh cell activation, sigmoid gate activation, forget bias started at
// one. Input dropout uses one mask shared across timesteps.
template <typename T>
struct Lstm {
  int input_dim = 0, units = 0;
  double dropout_rate = 0.0;
  Tensor<T> w_input;  // [input_dim, 4 * units]
  Tensor<T> w_recur;  // [units, 4 * units]
  Tensor<T> bias;     // [4 * units]

  Lstm() = default;
  Lstm(int in_dim, int n_units, double dropout, Rng& rng)
      : input_dim(in_dim), units(n_units), dropout_rate(dropout) {
    w_input = xavier_uniform<T>({in_dim, 4 * n_units}, in_dim, n_units, rng);
    std::vector<T> recur(static_cast<size_t>(n_units) * 4 * n_units);
    for (int gate = 0; gate < 4; ++gate) {
      const auto block = orthogonal_square<T>(n_units, rng);
      for (int i = 0; i < n_units; ++i) {
        for (int j = 0; j < n_units; ++j) {
          recur[static_cast<size_t>(i) * 4 * n_units + gate * n_units + j] =
              block[static_cast<size_t>(i) * n_units + j];
        }
      }
    }
    w_recur = Tensor<T>::from({n_units, 4 * n_units}, std::move(recur), true);
    std::vector<T> b(static_cast<size_t>(4) * n_units, T(0));
    for (int j = 0; j < n_units; ++j) b[static_cast<size_t>(units) + j] = T(1);
    bias = Tensor<T>::from({4 * n_units}, std::move(b), true);
  }

  // x: [T, input_dim] -> [T, units]
  Tensor<T> forward(const Tensor<T>& x, bool training = false,
                    Rng* dropout_rng = nullptr) const {
    if (x.ndim() != 2 || x.dim(1) != input_dim) {
      throw ShapeError("lstm: expected [T, " + std::to_string(input_dim) +
                       "], got " + shape_str(x.shape()));
    }
    const int t_len = x.dim(0);

    Tensor<T> seq = x;
    if (training && dropout_rate > 0.0 && dropout_rng != nullptr) {
      // one feature mask broadcast over every timestep
      const T keep = static_cast<T>(1.0 / (1.0 - dropout_rate));
      std::vector<T> mask_vals(static_cast<size_t>(t_len) * input_dim);
      for (int j = 0; j < input_dim; ++j) {
        const T m = dropout_rng->uniform() < dropout_rate ? T(0) : keep;
        for (int t = 0; t < t_len; ++t) {
          mask_vals[static_cast<size_t>(t) * input_dim + j] = m;
        }
      }
      seq = mul(seq, Tensor<T>::from({t_len, input_dim}, std::move(mask_vals)));
    }

    // input contributions for all timesteps in one product
    Tensor<T> gates_x = add_row_broadcast(matmul(seq, w_input), bias);

    Tensor<T> h = Tensor<T>::zeros({1, units});
    Tensor<T> c = Tensor<T>::zeros({1, units});
    std::vector<Tensor<T>> outputs;
    outputs.reserve(t_len);
    for (int t = 0; t < t_len; ++t) {
      Tensor<T> g = add(slice(gates_x, 0, t, 1), matmul(h, w_recur));
      Tensor<T> i_gate = sigmoid(slice(g, 1, 0, units));
      Tensor<T> f_gate = sigmoid(slice(g, 1, units, units));
      Tensor<T> g_cand = tanh_op(slice(g, 1, 2 * units, units));
      Tensor<T> o_gate = sigmoid(slice(g, 1, 3 * units, units));
      c = add(mul(f_gate, c), mul(i_gate, g_cand));
      h = mul(o_gate, tanh_op(c));
      outputs.push_back(h);
    }
    return concat(outputs, 0);
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    params.add(prefix + ".w_input", w_input);
    params.add(prefix + ".w_recur", w_recur);
    params.add(prefix + ".bias", bias);
  }
};

// ─── Attention and Transformer stacks ────────────────────────────────────────

// Additive attention mask, [t_q, t_k]: 0 where attention is allowed, -1e9
// where it is blocked. Returns an undefined tensor when nothing is blocked.
template <typename T>
Tensor<T> attention_mask(int t_q, int t_k, bool causal,
                         const std::vector<int>* key_mask) {
  const bool have_pad =
      key_mask != nullptr &&
      std::any_of(key_mask->begin(), key_mask->end(), [](int m) { return m == 0; });
  if (!causal && !have_pad) return Tensor<T>();
  if (key_mask != nullptr && static_cast<int>(key_mask->size()) != t_k) {
    throw ShapeError("attention_mask: key mask length mismatch");
  }
  const T blocked = T(-1e9);
  std::vector<T> v(static_cast<size_t>(t_q) * t_k, T(0));
  for (int q = 0; q < t_q; ++q) {
    for (int k = 0; k < t_k; ++k) {
      const bool block_causal = causal && k > q;
      const bool block_pad = key_mask != nullptr && (*key_mask)[k] == 0;
      if (block_causal || block_pad) {
        v[static_cast<size_t>(q) * t_k + k] = blocked;
      }
    }
  }
  return Tensor<T>::from({t_q, t_k}, std::move(v), false);
}

template <typename T>
struct MultiHeadAttention {
  int d_model = 0, n_heads = 0;
  Linear<T> wq, wk, wv, wo;

  MultiHeadAttention() = default;
  MultiHeadAttention(int d, int heads, Rng& rng)
      : d_model(d),
        n_heads(heads),
        wq(d, d, rng),
        wk(d, d, rng),
        wv(d, d, rng),
        wo(d, d, rng) {
    if (d % heads != 0) {
      throw ShapeError("attention: d_model must divide by n_heads");
    }
  }

  // q: [Tq, d], k/v: [Tk, d], mask: additive [Tq, Tk] or undefined.
  Tensor<T> forward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    const Tensor<T>& mask) const {
    if (q.dim(1) != d_model || k.dim(1) != d_model || v.dim(1) != d_model ||
        k.dim(0) != v.dim(0)) {
      throw ShapeError("attention: input shape mismatch");
    }
    const int d_head = d_model / n_heads;
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(double(d_head)));

    Tensor<T> Q = wq.forward(q);
    Tensor<T> K = wk.forward(k);
    Tensor<T> V = wv.forward(v);

    std::vector<Tensor<T>> heads;
    heads.reserve(n_heads);
    for (int h = 0; h < n_heads; ++h) {
      Tensor<T> qh = slice(Q, 1, h * d_head, d_head);
      Tensor<T> kh = slice(K, 1, h * d_head, d_head);
      Tensor<T> vh = slice(V, 1, h * d_head, d_head);
      Tensor<T> scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
      if (mask.defined()) scores = add(scores, mask);
      heads.push_back(matmul(softmax(scores), vh));
    }
    return wo.forward(concat(heads, 1));
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    wq.collect(params, prefix + ".wq");
    wk.collect(params, prefix + ".wk");
    wv.collect(params, prefix + ".wv");
    wo.collect(params, prefix + ".wo");
  }
};

template <typename T>
struct FeedForward {
  Linear<T> expand, contract;

  FeedForward() = default;
  FeedForward(int d_model, int hidden, Rng& rng)
      : expand(d_model, hidden, rng), contract(hidden, d_model, rng) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    return contract.forward(relu(expand.forward(x)));
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    expand.collect(params, prefix + ".expand");
    contract.collect(params, prefix + ".contract");
  }
};

// Drops out only when a training pass supplies a random stream.
template <typename T>
Tensor<T> maybe_dropout(Tensor<T> t, double rate, bool training, Rng* rng) {
  if (!training || rate <= 0.0 || rng == nullptr) return t;
  return dropout(t, rate, true, *rng);
}

template <typename T>
struct EncoderLayer {
  MultiHeadAttention<T> self_attn;
  FeedForward<T> ffn;
  LayerNormParams<T> ln1, ln2;
  double dropout_rate = 0.0;

  EncoderLayer() = default;
  EncoderLayer(int d_model, int heads, int ffn_dim, double dropout, Rng& rng)
      : self_attn(d_model, heads, rng),
        ffn(d_model, ffn_dim, rng),
        ln1(d_model),
        ln2(d_model),
        dropout_rate(dropout) {}

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& mask, bool training,
                    Rng* rng) const {
    Tensor<T> a = maybe_dropout(self_attn.forward(x, x, x, mask), dropout_rate,
                                training, rng);
    Tensor<T> h = ln1.forward(add(x, a));
    Tensor<T> f = maybe_dropout(ffn.forward(h), dropout_rate, training, rng);
    return ln2.forward(add(h, f));
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    self_attn.collect(params, prefix + ".self_attn");
    ffn.collect(params, prefix + ".ffn");
    ln1.collect(params, prefix + ".ln1");
    ln2.collect(params, prefix + ".ln2");
  }
};

template <typename T>
struct DecoderLayer {
  MultiHeadAttention<T> self_attn, cross_attn;
  FeedForward<T> ffn;
  LayerNormParams<T> ln1, ln2, ln3;
  double dropout_rate = 0.0;

  DecoderLayer() = default;
  DecoderLayer(int d_model, int heads, int ffn_dim, double dropout, Rng& rng)
      : self_attn(d_model, heads, rng),
        cross_attn(d_model, heads, rng),
        ffn(d_model, ffn_dim, rng),
        ln1(d_model),
        ln2(d_model),
        ln3(d_model),
        dropout_rate(dropout) {}

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& memory,
                    const Tensor<T>& self_mask, const Tensor<T>& memory_mask,
                    bool training, Rng* rng) const {
    Tensor<T> a = maybe_dropout(self_attn.forward(x, x, x, self_mask),
                                dropout_rate, training, rng);
    Tensor<T> h1 = ln1.forward(add(x, a));
    Tensor<T> c =
        maybe_dropout(cross_attn.forward(h1, memory, memory, memory_mask),
                      dropout_rate, training, rng);
    Tensor<T> h2 = ln2.forward(add(h1, c));
    Tensor<T> f = maybe_dropout(ffn.forward(h2), dropout_rate, training, rng);
    return ln3.forward(add(h2, f));
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    self_attn.collect(params, prefix + ".self_attn");
    cross_attn.collect(params, prefix + ".cross_attn");
    ffn.collect(params, prefix + ".ffn");
    ln1.collect(params, prefix + ".ln1");
    ln2.collect(params, prefix + ".ln2");
    ln3.collect(params, prefix + ".ln3");
  }
};

// Self-attention encoder stack. `key_mask` marks real (1) vs pad (0) input
// positions; pad keys are blocked for every query.
template <typename T>
struct TransformerEncoder {
  std::vector<EncoderLayer<T>> layers;

  TransformerEncoder() = default;
  TransformerEncoder(int n_layers, int d_model, int heads, int ffn_dim,
                     double dropout, Rng& rng) {
    layers.reserve(n_layers);
    for (int i = 0; i < n_layers; ++i) {
      layers.emplace_back(d_model, heads, ffn_dim, dropout, rng);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, const std::vector<int>* key_mask,
                    bool training, Rng* rng) const {
    Tensor<T> mask = attention_mask<T>(x.dim(0), x.dim(0), false, key_mask);
    Tensor<T> h = x;
    for (const auto& layer : layers) h = layer.forward(h, mask, training, rng);
    return h;
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    for (size_t i = 0; i < layers.size(); ++i) {
      layers[i].collect(params, prefix + ".layer" + std::to_string(i));
    }
  }
};

// Decoder stack: causal self-attention over the target plus cross-attention
// into the encoder memory.
template <typename T>
struct TransformerDecoder {
  std::vector<DecoderLayer<T>> layers;

  TransformerDecoder() = default;
  TransformerDecoder(int n_layers, int d_model, int heads, int ffn_dim,
                     double dropout, Rng& rng) {
    layers.reserve(n_layers);
    for (int i = 0; i < n_layers; ++i) {
      layers.emplace_back(d_model, heads, ffn_dim, dropout, rng);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& memory,
                    const std::vector<int>* self_key_mask,
                    const std::vector<int>* memory_key_mask, bool training,
                    Rng* rng) const {
    Tensor<T> self_mask =
        attention_mask<T>(x.dim(0), x.dim(0), true, self_key_mask);
    Tensor<T> mem_mask =
        attention_mask<T>(x.dim(0), memory.dim(0), false, memory_key_mask);
    Tensor<T> h = x;
    for (const auto& layer : layers) {
      h = layer.forward(h, memory, self_mask, mem_mask, training, rng);
    }
    return h;
  }

  void collect(ParamMap<T>& params, const std::string& prefix) {
    for (size_t i = 0; i < layers.size(); ++i) {
      layers[i].collect(params, prefix + ".layer" + std::to_string(i));
    }
  }
};

}  // namespace attfuse

#endif  // ATTFUSE_LAYERS_HPP_
