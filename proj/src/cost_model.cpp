// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/cost_model.hpp"

#include <string>

#include "paca/layers.hpp"
#include "paca/quant.hpp"

namespace paca {

FlopCount flop_linear(std::size_t d_in, std::size_t d_out, std::size_t n, Method method,
                      std::size_t r) {
  using u64 = std::uint64_t;
  const u64 dense = 2 * static_cast<u64>(d_out) * d_in * n;
  if (method == Method::full) return {dense, dense, dense};
  if (r < 1) throw ArgumentError("rank must be at least 1 for " + std::string(to_string(method)));
  if (method == Method::lora) {
    const u64 adapter = 2 * static_cast<u64>(r) * (d_in + d_out) * n;
    return {dense + adapter, dense + adapter, adapter};
  }
  if (r > d_in) throw ArgumentError("PaCA rank exceeds d_in");
  return {dense, dense, 2 * static_cast<u64>(d_out) * r * n};
}

FlopCount model_step_flops(const ExperimentConfig& cfg) {
  FlopCount total;
  for (const auto& [d_in, d_out] : cfg.model.layers) {
    total += flop_linear(d_in, d_out, cfg.batch_size, cfg.method, cfg.rank);
  }
  const auto k = static_cast<std::uint64_t>(cfg.optimizer.grad_accum);
  return {total.forward * k, total.backward_input * k, total.backward_weight * k};
}

std::vector<std::size_t> trainable_params(const ModelSpec& model, const ExperimentConfig& cfg) {
  std::vector<std::size_t> out;
  for (const auto& [d_in, d_out] : model.layers) {
    switch (cfg.method) {
      case Method::full: out.push_back(d_in * d_out); break;
      case Method::lora: out.push_back(cfg.rank * (d_in + d_out)); break;
      case Method::paca:
      case Method::qpaca: out.push_back(d_out * cfg.rank); break;
    }
  }
  return out;
}

MemoryBreakdown memory_report(const ModelSpec& model, const ExperimentConfig& cfg) {
  const std::size_t s = dtype_size(cfg.dtype);
  MemoryBreakdown m;
  const auto trainable = trainable_params(model, cfg);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto [d_in, d_out] = model.layers[l];
    if (cfg.method == Method::qpaca) {
      m.weights += qpaca_weight_bytes(d_out, d_in, cfg.rank, cfg.block_size, s);
    } else {
      m.weights += d_in * d_out * s;
      if (cfg.method == Method::lora) m.weights += trainable[l] * s;
    }
    m.grads += trainable[l] * s;
    if (cfg.optimizer.kind == OptimizerKind::adamw) m.optim_state += 2 * trainable[l] * s;
    m.activations += expected_cache_bytes(cfg.method, d_in, cfg.rank, cfg.batch_size, s);
  }
  return m;
}

}  // namespace paca
