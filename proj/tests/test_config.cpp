// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "doctest.h"
#include "paca/config.hpp"
#include "paca/errors.hpp"

using namespace paca;

namespace {

std::string field_of(const std::string& json) {
  try {
    parse_config(json);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto cfg = parse_config(R"({"method": "lora"})");
  CHECK(cfg.method == Method::lora);
  CHECK(cfg.rank == 8);
  CHECK(cfg.model.layers.size() == 3);
  CHECK(cfg.optimizer.adamw.beta2 == 0.999);
  CHECK(cfg.dtype == Dtype::f64);
}

TEST_CASE("full config parses every section") {
  const auto cfg = parse_config(R"({
    "method": "qpaca", "rank": 4, "dtype": "f32", "batch_size": 16, "steps": 7,
    "data_seed": 3, "model_seed": 4,
    "model": {"layers": [[8, 6], [6, 3]], "nonlinearity": "identity", "loss": "cross_entropy"},
    "selection": {"strategy": "gradient", "seed": 5, "warmup_steps": 2},
    "optimizer": {"kind": "sgd", "lr": 0.5, "schedule": "linear", "warmup_steps": 1,
                  "grad_accum": 2, "paca_alpha": 2},
    "lora": {"alpha": 8},
    "qpaca": {"block_size": 16},
    "task": {"kind": "clusters", "separation": 2.5, "noise": 0.5, "eval_samples": 10,
             "shift": 0.2, "pretrain_steps": 3, "pretrain_lr": 0.01}
  })");
  CHECK(cfg.method == Method::qpaca);
  CHECK(cfg.dtype == Dtype::f32);
  CHECK(cfg.model.layers[1] == std::pair<std::size_t, std::size_t>{6, 3});
  CHECK(cfg.model.nonlinearity == Nonlinearity::identity);
  CHECK(cfg.selection.strategy == SelectionStrategy::gradient);
  CHECK(cfg.selection.rank == 4);
  CHECK(cfg.optimizer.kind == OptimizerKind::sgd);
  CHECK(cfg.optimizer.grad_accum == 2);
  CHECK(cfg.lora_alpha == 8.0);
  CHECK(cfg.block_size == 16);
  CHECK(cfg.task.shift == 0.2);
  CHECK(cfg.lr_schedule().kind == ScheduleKind::linear);
}

TEST_CASE("canonical json round trips") {
  const auto cfg = parse_config(R"({"method": "paca", "rank": 3, "steps": 9,
                                    "selection": {"strategy": "weight_norm"}})");
  const auto again = parse_config(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
  CHECK(again.selection.strategy == SelectionStrategy::weight_norm);
}

TEST_CASE("validation reports the offending field") {
  CHECK(field_of(R"({})") == "method");
  CHECK(field_of(R"({"method": "adapter"})") == "method");
  CHECK(field_of(R"({"method": "paca", "extra": 1})") == "extra");
  CHECK(field_of(R"({"method": "paca", "optimizer": {"momentum": 0.9}})") ==
        "optimizer.momentum");
  CHECK(field_of(R"({"method": "paca", "rank": 65})") == "rank");
  CHECK(field_of(R"({"method": "paca", "rank": 0})") == "rank");
  CHECK(field_of(R"({"method": "paca", "model": {"layers": [[4, 3], [4, 2]]}})") ==
        "model.layers[1]");
  CHECK(field_of(R"({"method": "paca", "steps": "ten"})") == "steps");
  CHECK(field_of(R"({"method": "paca", "batch_size": -1})") == "batch_size");
  CHECK(field_of(R"({"method": "paca", "task": {"shift": 1.5}})") == "task.shift");
  CHECK(field_of(R"({"method": "paca", "dtype": "f16"})") == "dtype");
  CHECK(field_of(R"({"method": "paca", "model": {"loss": "mse"}})") == "model.loss");
  CHECK(field_of("not json") == "<root>");
  CHECK(field_of(R"({"method": "full", "rank": 500})") == "<accepted>");
}
