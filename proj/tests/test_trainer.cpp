// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "paca/errors.hpp"
#include "paca/hash.hpp"
#include "paca/trainer.hpp"

using namespace paca;

namespace {

ExperimentConfig small(Method m) {
  ExperimentConfig cfg;
  cfg.method = m;
  cfg.rank = 4;
  cfg.selection.rank = 4;
  cfg.model.layers = {{16, 12}, {12, 3}};
  cfg.batch_size = 8;
  cfg.steps = 30;
  cfg.data_seed = 1;
  cfg.model_seed = 2;
  cfg.task.eval_samples = 64;
  return cfg;
}

std::vector<double> losses(const TrainLog& log) {
  std::vector<double> out;
  for (const auto& s : log.steps) out.push_back(s.loss);
  return out;
}

}  // namespace

TEST_CASE("same config gives identical logs") {
  for (Method m : {Method::full, Method::lora, Method::paca, Method::qpaca}) {
    const auto a = run_experiment(small(m));
    const auto b = run_experiment(small(m));
    CHECK(losses(a) == losses(b));
    CHECK(steps_csv(a) == steps_csv(b));
    CHECK(a.final_eval_loss == b.final_eval_loss);
  }
}

TEST_CASE("paca at full rank reproduces full fine-tuning") {
  auto full = small(Method::full);
  auto paca = small(Method::paca);
  paca.model.layers = {{16, 16}, {16, 3}};
  full.model.layers = paca.model.layers;
  paca.rank = paca.selection.rank = 16;
  paca.optimizer.schedule = full.optimizer.schedule = ScheduleKind::cosine;
  CHECK(losses(run_experiment(paca)) == losses(run_experiment(full)));
}

TEST_CASE("frozen columns and payloads survive training") {
  auto cfg = small(Method::qpaca);
  cfg.steps = 50;
  cfg.block_size = 8;
  Trainer<double> t(cfg);
  std::vector<std::string> before;
  for (std::size_t l = 0; l < t.layers().size(); ++l) {
    const auto cols = t.frozen_columns(l);
    before.push_back(columns_digest(t.layers()[l].weights(), std::span<const std::size_t>(cols)));
  }
  const auto payload = payload_digest(t.layers()[0].packed->quantized);
  const auto log = t.run();
  for (std::size_t l = 0; l < t.layers().size(); ++l) {
    const auto cols = t.frozen_columns(l);
    CHECK(columns_digest(t.layers()[l].weights(), std::span<const std::size_t>(cols)) ==
          before[l]);
  }
  CHECK(payload_digest(t.layers()[0].packed->quantized) == payload);
  CHECK(log.frozen_digest_before == log.frozen_digest_after);
  CHECK(log.payload_digest_before == log.payload_digest_after);
}

TEST_CASE("measured memory equals the report") {
  for (Method m : {Method::full, Method::lora, Method::paca, Method::qpaca}) {
    ExperimentConfig cfg;
    cfg.method = m;
    cfg.model = {{{256, 256}, {256, 256}, {256, 256}}, Nonlinearity::relu, LossKind::mse};
    cfg.task.kind = TaskKind::regression;
    cfg.task.eval_samples = 16;
    cfg.batch_size = 8;
    cfg.rank = cfg.selection.rank = 16;
    cfg.steps = 2;
    const auto log = run_experiment(cfg);
    CHECK(log.measured == log.analytical);
    CHECK(log.measured == memory_report(cfg.model, cfg));
    for (const auto& s : log.steps)
      for (std::size_t b : s.activation_bytes)
        CHECK(b == expected_cache_bytes(m, 256, 16, 8, 8));
  }
}

TEST_CASE("per-step flops follow the model") {
  auto cfg = small(Method::lora);
  cfg.optimizer.grad_accum = 2;
  const auto log = run_experiment(cfg);
  for (const auto& s : log.steps) CHECK(s.flops == model_step_flops(cfg));
  auto g = small(Method::paca);
  g.selection.strategy = SelectionStrategy::gradient;
  g.selection.warmup_steps = 5;
  const auto gl = run_experiment(g);
  CHECK(gl.warmup_steps == 5);
  auto dense = g;
  dense.method = Method::full;
  CHECK(gl.warmup_flops.total() == 5 * model_step_flops(dense).total());
}

TEST_CASE("paca learns a separable task from scratch") {
  ExperimentConfig cfg;
  cfg.method = Method::full;
  cfg.model.layers = {{64, 64}, {64, 2}};
  cfg.rank = cfg.selection.rank = 8;
  cfg.steps = 2000;
  cfg.task.separation = 6.0;
  cfg.task.eval_samples = 512;
  cfg.optimizer.adamw.lr = 1e-3;
  cfg.data_seed = 4;
  cfg.model_seed = 8;
  const auto full = run_experiment(cfg);
  cfg.method = Method::paca;
  const auto paca = run_experiment(cfg);
  CHECK(full.final_eval_loss < 0.1 * full.initial_eval_loss);
  CHECK(paca.final_eval_loss < 0.1 * paca.initial_eval_loss);
}

TEST_CASE("single precision runs") {
  auto cfg = small(Method::paca);
  cfg.dtype = Dtype::f32;
  const auto log = run_experiment(cfg);
  CHECK(log.steps.size() == 30);
  CHECK(log.measured == log.analytical);
  CHECK(log.steps[0].activation_bytes[0] == 4 * 8 * 4);
}

TEST_CASE("reports") {
  const auto log = run_experiment(small(Method::paca));
  const auto csv = steps_csv(log);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "step,loss,lr,flops_forward,flops_backward_input,flops_backward_weight,"
        "activation_bytes,activation_bytes_l0,activation_bytes_l1");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == 30);
  const auto summary = summary_json(log);
  CHECK(summary.find("\"final_eval_loss\"") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "paca_report_test";
  std::filesystem::remove_all(dir);
  write_reports(log, dir);
  CHECK(std::filesystem::exists(dir / "steps.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("compare methods") {
  std::vector<ExperimentConfig> cfgs = {small(Method::full), small(Method::lora),
                                        small(Method::paca), small(Method::qpaca)};
  const auto report = compare_methods(cfgs);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.rows[2].peak_activation_bytes < report.rows[1].peak_activation_bytes);
  CHECK(report.rows[3].weight_bytes == qpaca_weight_bytes(12, 16, 4, 64, 8) +
                                           qpaca_weight_bytes(3, 12, 4, 64, 8));
  CHECK(report.rows[2].optim_state_bytes < report.rows[0].optim_state_bytes);
  CHECK(report.to_csv().rfind("method,", 0) == 0);

  cfgs[1].data_seed = 99;
  CHECK_THROWS_AS(compare_methods(cfgs), ConfigError);
}

TEST_CASE("format_real is shortest round trip") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1.0) == "1");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}
