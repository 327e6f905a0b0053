// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "paca/config.hpp"
#include "paca/method.hpp"

namespace paca {

/// Matrix-multiply FLOPs of one training step, with one multiply-accumulate
/// counted as two FLOPs. Elementwise work (scaling, bias-free adds,
/// activations) is not counted.
struct FlopCount {
  std::uint64_t forward = 0;
  std::uint64_t backward_input = 0;   // gradients flowing to the layer input
  std::uint64_t backward_weight = 0;  // gradients of trainable parameters

  std::uint64_t backward() const noexcept { return backward_input + backward_weight; }
  std::uint64_t total() const noexcept { return forward + backward(); }

  FlopCount& operator+=(const FlopCount& o) noexcept {
    forward += o.forward;
    backward_input += o.backward_input;
    backward_weight += o.backward_weight;
    return *this;
  }
  friend bool operator==(const FlopCount&, const FlopCount&) = default;
};

/// FLOPs of one linear layer over a batch of n columns.
///   full:  fwd 2*do*di*n, bwd 2*do*di*n (input) + 2*do*di*n (weight)
///   lora:  fwd adds 2*r*(di+do)*n; bwd input adds 2*r*(di+do)*n, bwd weight
///          is 2*r*(di+do)*n in place of the full weight gradient
///   paca:  fwd as full; bwd input as full, bwd weight 2*do*r*n
/// `r` is ignored for full and must be >= 1 otherwise.
FlopCount flop_linear(std::size_t d_in, std::size_t d_out, std::size_t n, Method method,
                      std::size_t r);

/// FLOPs of one optimizer step of the whole model (all micro-batches).
FlopCount model_step_flops(const ExperimentConfig& cfg);

struct MemoryBreakdown {
  std::size_t weights = 0;
  std::size_t grads = 0;
  std::size_t optim_state = 0;
  std::size_t activations = 0;  // linear-layer caches of one micro-batch

  std::size_t total() const noexcept { return weights + grads + optim_state + activations; }
  friend bool operator==(const MemoryBreakdown&, const MemoryBreakdown&) = default;
};

/// Analytical bytes for cfg.method on `model`, with the batch size, rank,
/// dtype and optimizer of `cfg`.
MemoryBreakdown memory_report(const ModelSpec& model, const ExperimentConfig& cfg);

/// Trainable parameter count per layer for cfg.method.
std::vector<std::size_t> trainable_params(const ModelSpec& model, const ExperimentConfig& cfg);

}  // namespace paca
