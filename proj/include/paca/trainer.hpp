// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "paca/config.hpp"
#include "paca/cost_model.hpp"
#include "paca/layers.hpp"
#include "paca/optim.hpp"
#include "paca/quant.hpp"

namespace paca {

struct StepRecord {
  std::size_t step = 0;
  double loss = 0.0;  // mean over the step's micro-batches
  double lr = 0.0;
  std::vector<std::size_t> activation_bytes;  // per layer, one micro-batch
  FlopCount flops;                            // analytical, equal to the instrumented count

  std::size_t activation_bytes_total() const noexcept;
};

struct TrainLog {
  ExperimentConfig config;
  std::vector<StepRecord> steps;
  std::vector<std::vector<std::size_t>> selected_columns;  // per layer (PaCA/QPaCA only)
  std::vector<std::string> frozen_digest_before;           // per layer (PaCA/QPaCA only)
  std::vector<std::string> frozen_digest_after;
  std::vector<std::string> payload_digest_before;  // per layer (QPaCA only)
  std::vector<std::string> payload_digest_after;
  MemoryBreakdown measured;    // from the live model and caches
  MemoryBreakdown analytical;  // memory_report for the same config
  FlopCount warmup_flops;      // gradient-based selection warmup
  std::size_t warmup_steps = 0;
  double initial_eval_loss = 0.0;
  double final_eval_loss = 0.0;
  double wall_seconds = 0.0;

  double final_train_loss() const { return steps.empty() ? 0.0 : steps.back().loss; }
  std::size_t peak_activation_bytes() const noexcept;
  FlopCount total_flops() const noexcept;
};

/// Batch of samples stored as columns.
template <typename T>
struct Batch {
  BasicMatrix<T> x;                 // d_in x n
  std::vector<std::size_t> labels;  // clusters task
  BasicMatrix<T> y;                 // regression task, d_out x n
};

/// Deterministic synthetic data for a task. The task itself (cluster centres
/// or teacher) and the sample stream are derived from the data seed.
template <typename T>
class DataStream {
 public:
  /// `source_domain` selects the pretraining distribution instead of the
  /// (possibly shifted) target distribution.
  DataStream(const TaskConfig& task, const ModelSpec& model, std::uint64_t data_seed,
             bool source_domain = false);

  Batch<T> next(std::size_t n);
  /// Restarts the sample stream from its first batch.
  void reset();
  /// Fixed held-out set, independent of the training stream.
  Batch<T> eval_set(std::size_t n) const;

 private:
  Batch<T> draw(std::size_t n, Rng& rng) const;

  TaskConfig task_;
  std::size_t d_in_;
  std::size_t d_out_;
  std::uint64_t data_seed_;
  bool source_domain_;
  std::vector<std::vector<double>> centres_;
  BasicMatrix<double> teacher_;
  Rng rng_;
};

/// One linear layer of the model in whichever regime the config selects.
template <typename T>
struct TrainableLayer {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  LinearParams<T> base;  // full: trained; lora: frozen
  std::optional<LoRAParams<T>> lora;
  std::optional<PaCAParams<T>> paca;     // paca/qpaca: working weight and columns
  std::optional<QPaCAWeights<T>> packed;  // qpaca only
  OptimState<T> state;    // W, A, or the selected block
  OptimState<T> state_b;  // LoRA B

  /// Weight used by the forward pass (base W for LoRA, without adapters).
  const BasicMatrix<T>& weights() const noexcept { return paca ? paca->w : base.w; }
};

/// Multi-layer perceptron trainer for one experiment config.
template <typename T>
class Trainer {
 public:
  explicit Trainer(ExperimentConfig cfg) : Trainer(std::move(cfg), false) {}

  /// One optimizer step over `grad_accum` micro-batches. Throws
  /// InvariantError if cache bytes or matmul FLOPs deviate from the models.
  StepRecord step();

  /// Runs all remaining steps and checks the end-of-run invariants.
  TrainLog run();

  double eval_loss() const;
  std::size_t steps_done() const noexcept { return step_; }
  const ExperimentConfig& config() const noexcept { return cfg_; }
  const std::vector<TrainableLayer<T>>& layers() const noexcept { return layers_; }

  /// Input columns of layer l that are not trained (PaCA/QPaCA), ascending.
  std::vector<std::size_t> frozen_columns(std::size_t l) const;

  MemoryBreakdown measured_memory() const;

 private:
  Trainer(ExperimentConfig cfg, bool source_domain);

  void pretrain();
  void select_columns();
  double loss_and_grad(const BasicMatrix<T>& out, const Batch<T>& batch,
                       BasicMatrix<T>* grad) const;

  ExperimentConfig cfg_;
  DataStream<T> data_;
  Batch<T> eval_;
  std::vector<TrainableLayer<T>> layers_;
  std::size_t step_ = 0;
  std::size_t last_activation_total_ = 0;
  FlopCount warmup_flops_;
  std::size_t warmup_steps_ = 0;
  TrainLog log_;
};

/// Runs an experiment in the config's dtype.
TrainLog run_experiment(const ExperimentConfig& cfg);

/// steps.csv: one row per step; contains no timing so reruns are identical.
std::string steps_csv(const TrainLog& log);
/// summary.json: config, final losses, totals, byte breakdowns, digests.
std::string summary_json(const TrainLog& log);
/// Writes steps.csv and summary.json into `dir` (created if needed).
void write_reports(const TrainLog& log, const std::filesystem::path& dir);

struct ComparisonRow {
  Method method = Method::full;
  std::size_t rank = 0;
  SelectionStrategy strategy = SelectionStrategy::random;
  double final_train_loss = 0.0;
  double final_eval_loss = 0.0;
  std::uint64_t total_flops = 0;
  std::size_t peak_activation_bytes = 0;
  std::size_t optim_state_bytes = 0;
  std::size_t weight_bytes = 0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Runs every config and tabulates the results. All configs must share the
/// data and model seeds (ConfigError otherwise).
ComparisonReport compare_methods(const std::vector<ExperimentConfig>& configs);

/// Shortest round-trip decimal form of a double.
std::string format_real(double v);

}  // namespace paca
