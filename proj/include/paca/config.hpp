// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "paca/method.hpp"
#include "paca/optim.hpp"
#include "paca/quant.hpp"
#include "paca/selection.hpp"

namespace paca {

enum class LossKind { mse, cross_entropy };
enum class Nonlinearity { relu, identity };
enum class TaskKind { clusters, regression };
enum class OptimizerKind { adamw, sgd };
enum class Dtype { f32, f64 };

std::string_view to_string(LossKind k) noexcept;
std::string_view to_string(Nonlinearity k) noexcept;
std::string_view to_string(TaskKind k) noexcept;
std::string_view to_string(OptimizerKind k) noexcept;
std::string_view to_string(Dtype k) noexcept;
std::size_t dtype_size(Dtype d) noexcept;

/// Stack of linear layers with a nonlinearity between consecutive layers.
struct ModelSpec {
  std::vector<std::pair<std::size_t, std::size_t>> layers;  // (d_in, d_out)
  Nonlinearity nonlinearity = Nonlinearity::relu;
  LossKind loss = LossKind::cross_entropy;

  std::size_t input_dim() const { return layers.front().first; }
  std::size_t output_dim() const { return layers.back().second; }
};

/// Synthetic data stream. `clusters`: one Gaussian cluster per class, centres
/// of norm `separation`, isotropic noise of std `noise`. `regression`: targets
/// from a fixed random linear teacher plus noise of std `noise`.
///
/// With `pretrain_steps` > 0 the base model is first trained in full on a
/// source task for that many steps (AdamW, constant `pretrain_lr`), and the
/// experiment then fine-tunes it on the target task, whose centres (or
/// teacher) are moved away from the source by `shift` in [0, 1]:
/// target = sqrt(1 - shift^2) * source + shift * independent draw.
struct TaskConfig {
  TaskKind kind = TaskKind::clusters;
  double separation = 3.0;
  double noise = 1.0;
  std::size_t eval_samples = 1024;
  double shift = 0.0;
  std::size_t pretrain_steps = 0;
  double pretrain_lr = 1e-3;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adamw;
  AdamWConfig adamw;
  ScheduleKind schedule = ScheduleKind::constant;
  std::size_t warmup_steps = 0;
  std::size_t grad_accum = 1;  // micro-batches summed per step
  double paca_alpha = 1.0;     // multiplier on PaCA partial gradients
};

struct ExperimentConfig {
  Method method = Method::paca;
  std::size_t rank = 8;
  ModelSpec model{{{64, 64}, {64, 64}, {64, 2}}, Nonlinearity::relu, LossKind::cross_entropy};
  SelectionConfig selection;
  OptimizerConfig optimizer;
  double lora_alpha = 32.0;
  std::size_t block_size = kDefaultBlockSize;
  TaskConfig task;
  std::size_t batch_size = 32;
  std::size_t steps = 100;
  std::uint64_t data_seed = 0;
  std::uint64_t model_seed = 0;
  Dtype dtype = Dtype::f64;

  /// Throws ConfigError with a dotted field path on the first violation.
  void validate() const;
  LrSchedule lr_schedule() const {
    return {optimizer.schedule, optimizer.warmup_steps, steps};
  }
};

/// Parses a JSON experiment config. Unknown fields are rejected; missing
/// optional fields take the defaults above. The result is validated.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form with every field present.
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

}  // namespace paca
