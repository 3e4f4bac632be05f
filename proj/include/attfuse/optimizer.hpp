// attfuse/optimizer.hpp

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

#ifndef ATTFUSE_OPTIMIZER_HPP_
#define ATTFUSE_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "attfuse/errors.hpp"
#include "attfuse/layers.hpp"

namespace attfuse {

// ─── Learning-rate schedule ──────────────────────────────────────────────────

enum class ScheduleMode { kLiteral, kNoam };

inline const char* schedule_name(ScheduleMode m) {
  return m == ScheduleMode::kLiteral ? "literal" : "noam";
}

inline ScheduleMode schedule_from_name(const std::string& name) {
  if (name == "literal") return ScheduleMode::kLiteral;
  if (name == "noam") return ScheduleMode::kNoam;
  throw Error("unknown schedule: " + name + " (expected literal|noam)");
}

// Warmup schedule. Literal mode follows the formula as printed:
//   lr = sqrt(d_model) * min(sqrt(cs), cs * ws^-1.5), capped at `cap`,
// which saturates at the cap from step 2 onward under the default
// constants. Noam mode is the conventional inverse-square-root variant
//   d_model^-0.5 * min(cs^-0.5, cs * ws^-1.5), uncapped.
struct LrSchedule {
  ScheduleMode mode = ScheduleMode::kLiteral;
  int warmup_steps = 2048;
  int d_model = 512;
  double cap = 4e-4;

  double rate(int64_t current_step) const {
    if (current_step < 1) {
      throw ScheduleError("lrate: step counter must be >= 1");
    }
    const double cs = static_cast<double>(current_step);
    const double arg2 = cs * std::pow(static_cast<double>(warmup_steps), -1.5);
    if (mode == ScheduleMode::kLiteral) {
      const double arg1 = std::sqrt(cs);
      const double lr =
          std::sqrt(static_cast<double>(d_model)) * std::min(arg1, arg2);
      return std::min(lr, cap);
    }
    const double arg1 = 1.0 / std::sqrt(cs);
    return std::pow(static_cast<double>(d_model), -0.5) * std::min(arg1, arg2);
  }
};

// ─── AdamW ───────────────────────────────────────────────────────────────────

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.1;

  void validate() const {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw Error("OptimizerConfig: betas must lie in [0, 1)");
    }
    if (eps <= 0.0) throw Error("OptimizerConfig: eps must be positive");
    if (weight_decay < 0.0) {
      throw Error("OptimizerConfig: weight decay must be nonnegative");
    }
  }
};

// Biases and layer-norm gains are excluded from weight decay.
inline bool decays(const std::string& param_name) {
  auto ends_with = [&param_name](const char* suffix) {
    const std::string s(suffix);
    return param_name.size() >= s.size() &&
           param_name.compare(param_name.size() - s.size(), s.size(), s) == 0;
  };
  return !ends_with(".bias") && !ends_with(".gain");
}

// Decoupled-weight-decay Adam with bias-corrected moments. Decay scales the
// parameters directly; it never touches the gradient path.
template <typename T>
class AdamW {
 public:
  explicit AdamW(const OptimizerConfig& cfg = OptimizerConfig()) : cfg_(cfg) {
    cfg_.validate();
  }

  int64_t step_count() const { return t_; }

  void step(ParamMap<T>& params, double lr) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params.entries[i].second.size(), T(0));
        v_[i].assign(params.entries[i].second.size(), T(0));
      }
    }
    if (m_.size() != params.size()) {
      throw ShapeError("adamw: parameter set changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    for (size_t i = 0; i < params.size(); ++i) {
      auto& [name, p] = params.entries[i];
      if (m_[i].size() != p.grad().size()) {
        throw ShapeError("adamw: gradient shape changed for " + name);
      }
      const bool apply_decay = cfg_.weight_decay > 0.0 && decays(name);
      auto& values = p.mutable_values();
      const auto& grads = p.grad();
      for (size_t j = 0; j < values.size(); ++j) {
        const double g = static_cast<double>(grads[j]);
        if (!std::isfinite(g)) {
          throw NumericalError("adamw: non-finite gradient in " + name);
        }
        if (apply_decay) {
          values[j] -= static_cast<T>(lr * cfg_.weight_decay) * values[j];
        }
        double m = cfg_.beta1 * static_cast<double>(m_[i][j]) +
                   (1.0 - cfg_.beta1) * g;
        double v = cfg_.beta2 * static_cast<double>(v_[i][j]) +
                   (1.0 - cfg_.beta2) * g * g;
        m_[i][j] = static_cast<T>(m);
        v_[i][j] = static_cast<T>(v);
        const double update = (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
        values[j] -= static_cast<T>(lr * update);
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename T>
double clip_global_norm(ParamMap<T>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, p] : params.entries) {
    for (const T g : p.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& [name, p] : params.entries) {
      for (T& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

}  // namespace attfuse

#endif  // ATTFUSE_OPTIMIZER_HPP_
