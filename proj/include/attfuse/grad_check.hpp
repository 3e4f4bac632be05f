// attfuse/grad_check.hpp

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

#ifndef ATTFUSE_GRAD_CHECK_HPP_
#define ATTFUSE_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "attfuse/errors.hpp"
#include "attfuse/layers.hpp"
#include "attfuse/rng.hpp"
#include "attfuse/tensor.hpp"

namespace attfuse {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  int64_t coords_checked = 0;
};

// Compares reverse-mode gradients of a scalar-valued forward pass against
// central finite differences. The forward must be deterministic (dropout
// off) and is re-evaluated twice per probed coordinate; run with T = double.
//
// `make_loss` rebuilds the forward from the current parameter values and
// returns the scalar loss tensor. Relative error per coordinate is
// |a - n| / max(|a|, |n|, guard); the guard keeps roundoff noise on
// genuinely-zero gradients from registering as disagreement.
template <typename T, typename MakeLoss>
GradCheckReport grad_check(MakeLoss&& make_loss, ParamMap<T>& params,
                           int max_coords_per_tensor, uint64_t seed,
                           T step = T(1e-5), double guard = 1e-6) {
  params.zero_grad();
  Tensor<T> loss = make_loss();
  loss.backward();

  std::vector<std::vector<T>> analytic;
  analytic.reserve(params.size());
  for (auto& [name, p] : params.entries) {
    for (const T g : p.grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("grad_check: non-finite gradient in " + name);
      }
    }
    analytic.push_back(p.grad());
  }

  Rng rng(seed);
  GradCheckReport report;
  NoGradGuard no_grad;  // finite differences need values only

  for (size_t pi = 0; pi < params.entries.size(); ++pi) {
    auto& [name, p] = params.entries[pi];
    const int64_t n = p.size();

    std::vector<int64_t> coords;
    if (n <= max_coords_per_tensor) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int c = 0; c < max_coords_per_tensor; ++c) {
        coords.push_back(rng.uniform_int(0, n - 1));
      }
    }

    for (const int64_t idx : coords) {
      T& slot = p.mutable_values()[static_cast<size_t>(idx)];
      const T original = slot;
      slot = original + step;
      const double plus = static_cast<double>(make_loss().item());
      slot = original - step;
      const double minus = static_cast<double>(make_loss().item());
      slot = original;

      const double numeric = (plus - minus) / (2.0 * static_cast<double>(step));
      const double a = static_cast<double>(analytic[pi][static_cast<size_t>(idx)]);
      const double denom = std::max({std::abs(a), std::abs(numeric), guard});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = idx;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace attfuse

#endif  // ATTFUSE_GRAD_CHECK_HPP_
