// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "paca/trainer.hpp"

namespace paca {
namespace {

using nlohmann::json;

json flops_json(const FlopCount& f) {
  return {{"forward", f.forward},
          {"backward_input", f.backward_input},
          {"backward_weight", f.backward_weight},
          {"total", f.total()}};
}

json memory_json(const MemoryBreakdown& m) {
  return {{"weights", m.weights},
          {"grads", m.grads},
          {"optim_state", m.optim_state},
          {"activations", m.activations},
          {"total", m.total()}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string steps_csv(const TrainLog& log) {
  std::ostringstream out;
  const std::size_t layers = log.config.model.layers.size();
  out << "step,loss,lr,flops_forward,flops_backward_input,flops_backward_weight,"
         "activation_bytes";
  for (std::size_t l = 0; l < layers; ++l) out << ",activation_bytes_l" << l;
  out << '\n';
  for (const auto& s : log.steps) {
    out << s.step << ',' << format_real(s.loss) << ',' << format_real(s.lr) << ','
        << s.flops.forward << ',' << s.flops.backward_input << ',' << s.flops.backward_weight
        << ',' << s.activation_bytes_total();
    for (std::size_t b : s.activation_bytes) out << ',' << b;
    out << '\n';
  }
  return out.str();
}

std::string summary_json(const TrainLog& log) {
  json doc = {
      {"config", json::parse(config_to_json(log.config))},
      {"steps", log.steps.size()},
      {"final_train_loss", log.final_train_loss()},
      {"initial_eval_loss", log.initial_eval_loss},
      {"final_eval_loss", log.final_eval_loss},
      {"total_flops", flops_json(log.total_flops())},
      {"warmup", {{"steps", log.warmup_steps}, {"flops", flops_json(log.warmup_flops)}}},
      {"peak_activation_bytes", log.peak_activation_bytes()},
      {"memory", {{"measured", memory_json(log.measured)},
                  {"analytical", memory_json(log.analytical)}}},
      {"selected_columns", log.selected_columns},
      {"frozen_column_sha256", {{"before", log.frozen_digest_before},
                                {"after", log.frozen_digest_after}}},
      {"quantized_payload_sha256", {{"before", log.payload_digest_before},
                                    {"after", log.payload_digest_after}}},
      {"wall_seconds", log.wall_seconds},
  };
  return doc.dump(2) + "\n";
}

void write_reports(const TrainLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "steps.csv", steps_csv(log));
  write_file(dir / "summary.json", summary_json(log));
}

std::string ComparisonReport::to_csv() const {
  std::ostringstream out;
  out << "method,rank,selection,final_train_loss,final_eval_loss,total_flops,"
         "peak_activation_bytes,optim_state_bytes,weight_bytes\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.rank << ',' << to_string(r.strategy) << ','
        << format_real(r.final_train_loss) << ',' << format_real(r.final_eval_loss) << ','
        << r.total_flops << ',' << r.peak_activation_bytes << ',' << r.optim_state_bytes << ','
        << r.weight_bytes << '\n';
  }
  return out.str();
}

std::string ComparisonReport::to_json() const {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"method", std::string(to_string(r.method))},
                   {"rank", r.rank},
                   {"selection", std::string(to_string(r.strategy))},
                   {"final_train_loss", r.final_train_loss},
                   {"final_eval_loss", r.final_eval_loss},
                   {"total_flops", r.total_flops},
                   {"peak_activation_bytes", r.peak_activation_bytes},
                   {"optim_state_bytes", r.optim_state_bytes},
                   {"weight_bytes", r.weight_bytes}});
  }
  return json{{"rows", arr}}.dump(2) + "\n";
}

ComparisonReport compare_methods(const std::vector<ExperimentConfig>& configs) {
  ComparisonReport report;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& cfg = configs[i];
    if (cfg.data_seed != configs.front().data_seed) {
      throw ConfigError("configs[" + std::to_string(i) + "].data_seed",
                        "compared configs must share the data seed");
    }
    if (cfg.model_seed != configs.front().model_seed) {
      throw ConfigError("configs[" + std::to_string(i) + "].model_seed",
                        "compared configs must share the model seed");
    }
  }
  for (const auto& cfg : configs) {
    const TrainLog log = run_experiment(cfg);
    ComparisonRow row;
    row.method = cfg.method;
    row.rank = cfg.method == Method::full ? 0 : cfg.rank;
    row.strategy = cfg.selection.strategy;
    row.final_train_loss = log.final_train_loss();
    row.final_eval_loss = log.final_eval_loss;
    row.total_flops = log.total_flops().total();
    row.peak_activation_bytes = log.peak_activation_bytes();
    row.optim_state_bytes = log.measured.optim_state;
    row.weight_bytes = log.measured.weights;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace paca
