// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "paca/layers.hpp"
#include "paca/matrix.hpp"

namespace paca {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  /// Throws ArgumentError naming the offending field.
  void validate() const;
};

/// AdamW moment buffers, shaped like the trainable parameter. For a PaCA
/// layer that is the compact d_out x r block, never the full weight.
template <typename T>
struct OptimState {
  BasicMatrix<T> m;
  BasicMatrix<T> v;
  std::size_t step = 0;

  static OptimState zeros_like(const BasicMatrix<T>& param) {
    return {BasicMatrix<T>(param.rows(), param.cols()), BasicMatrix<T>(param.rows(), param.cols()),
            0};
  }
  std::size_t bytes() const noexcept { return m.bytes() + v.bytes(); }
};

/// param -= lr * grad.
template <typename T>
void sgd_step(BasicMatrix<T>& param, const BasicMatrix<T>& grad, double lr);

/// -lr * grad, the SGD step as an additive update.
template <typename T>
BasicMatrix<T> sgd_update(const BasicMatrix<T>& grad, double lr);

/// Advances the moments and returns the additive AdamW update
/// -lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * param) without
/// applying it.
template <typename T>
BasicMatrix<T> adamw_update(OptimState<T>& state, const BasicMatrix<T>& param,
                            const BasicMatrix<T>& grad, const AdamWConfig& cfg);

/// adamw_update followed by param += update.
template <typename T>
void adamw_step(OptimState<T>& state, BasicMatrix<T>& param, const BasicMatrix<T>& grad,
                const AdamWConfig& cfg);

/// Adds a d_out x r update to the selected columns of the weight; all other
/// columns stay bitwise unchanged.
template <typename T>
void paca_apply_update(PaCAParams<T>& pp, const BasicMatrix<T>& update);

enum class ScheduleKind { constant, linear, cosine };

std::string_view to_string(ScheduleKind k) noexcept;
ScheduleKind parse_schedule(std::string_view name);

/// Step-indexed learning-rate multiplier: linear warmup from 0 over
/// `warmup_steps`, then constant, linear decay to 0, or half-cosine decay to 0
/// at `total_steps`.
struct LrSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;

  double multiplier(std::size_t step) const noexcept;
};

}  // namespace paca
