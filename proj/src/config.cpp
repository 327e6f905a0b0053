// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace paca {
namespace {

using nlohmann::json;

// Reads fields of one JSON object, remembering which keys were consumed so
// that leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(display(), "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(raw(key), field(key));
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "required field missing");
    return convert<T>(raw(key), field(key));
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown field");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError(where, "must be finite");
      return d;
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.get<std::int64_t>() < 0)) {
        throw ConfigError(where, "expected a non-negative integer");
      }
      return static_cast<T>(v.get<std::uint64_t>());
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename E, typename Parse>
E parse_enum(ObjectReader& r, const std::string& key, E fallback, Parse parse) {
  if (!r.has(key)) return fallback;
  const auto text = r.get<std::string>(key, "");
  try {
    return parse(text);
  } catch (const ArgumentError& e) {
    throw ConfigError(r.field(key), e.what());
  }
}

template <typename E>
E lookup(std::string_view text, std::initializer_list<std::pair<std::string_view, E>> table,
         const char* what) {
  for (const auto& [name, value] : table) {
    if (name == text) return value;
  }
  throw ArgumentError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

LossKind parse_loss(std::string_view s) {
  return lookup<LossKind>(s, {{"mse", LossKind::mse}, {"cross_entropy", LossKind::cross_entropy}},
                          "loss");
}
Nonlinearity parse_nonlinearity(std::string_view s) {
  return lookup<Nonlinearity>(
      s, {{"relu", Nonlinearity::relu}, {"identity", Nonlinearity::identity}}, "nonlinearity");
}
TaskKind parse_task(std::string_view s) {
  return lookup<TaskKind>(s, {{"clusters", TaskKind::clusters}, {"regression", TaskKind::regression}},
                          "task");
}
OptimizerKind parse_optimizer(std::string_view s) {
  return lookup<OptimizerKind>(s, {{"adamw", OptimizerKind::adamw}, {"sgd", OptimizerKind::sgd}},
                               "optimizer");
}
Dtype parse_dtype(std::string_view s) {
  return lookup<Dtype>(s, {{"f32", Dtype::f32}, {"f64", Dtype::f64}}, "dtype");
}

ModelSpec read_model(ObjectReader& r, const ModelSpec& fallback) {
  ModelSpec m = fallback;
  if (r.has("layers")) {
    const json& layers = r.raw("layers");
    const std::string where = r.field("layers");
    if (!layers.is_array() || layers.empty()) throw ConfigError(where, "expected a non-empty array");
    m.layers.clear();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string item = where + "[" + std::to_string(i) + "]";
      if (!layers[i].is_array() || layers[i].size() != 2) {
        throw ConfigError(item, "expected [d_in, d_out]");
      }
      m.layers.emplace_back(ObjectReader::convert<std::size_t>(layers[i][0], item + "[0]"),
                            ObjectReader::convert<std::size_t>(layers[i][1], item + "[1]"));
    }
  }
  m.nonlinearity = parse_enum(r, "nonlinearity", m.nonlinearity, parse_nonlinearity);
  m.loss = parse_enum(r, "loss", m.loss, parse_loss);
  r.finish();
  return m;
}

}  // namespace

std::string_view to_string(LossKind k) noexcept {
  return k == LossKind::mse ? "mse" : "cross_entropy";
}
std::string_view to_string(Nonlinearity k) noexcept {
  return k == Nonlinearity::relu ? "relu" : "identity";
}
std::string_view to_string(TaskKind k) noexcept {
  return k == TaskKind::clusters ? "clusters" : "regression";
}
std::string_view to_string(OptimizerKind k) noexcept {
  return k == OptimizerKind::adamw ? "adamw" : "sgd";
}
std::string_view to_string(Dtype k) noexcept { return k == Dtype::f32 ? "f32" : "f64"; }
std::size_t dtype_size(Dtype d) noexcept { return d == Dtype::f32 ? 4 : 8; }

void ExperimentConfig::validate() const {
  const auto& layers = model.layers;
  if (layers.empty()) throw ConfigError("model.layers", "at least one layer required");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "model.layers[" + std::to_string(i) + "]";
    if (layers[i].first == 0 || layers[i].second == 0) {
      throw ConfigError(where, "dimensions must be positive");
    }
    if (i > 0 && layers[i].first != layers[i - 1].second) {
      throw ConfigError(where, "d_in " + std::to_string(layers[i].first) +
                                   " does not match previous d_out " +
                                   std::to_string(layers[i - 1].second));
    }
  }
  if (method != Method::full) {
    if (rank < 1) throw ConfigError("rank", "must be at least 1");
    if (method == Method::paca || method == Method::qpaca) {
      for (std::size_t i = 0; i < layers.size(); ++i) {
        if (rank > layers[i].first) {
          throw ConfigError("rank", "exceeds d_in " + std::to_string(layers[i].first) +
                                        " of layer " + std::to_string(i));
        }
      }
    }
  }
  if (selection.rank != rank) throw ConfigError("selection", "rank out of sync with config rank");
  if (selection.warmup_steps < 1) throw ConfigError("selection.warmup_steps", "must be >= 1");
  try {
    optimizer.adamw.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError("optimizer", e.what());
  }
  if (optimizer.grad_accum < 1) throw ConfigError("optimizer.grad_accum", "must be >= 1");
  if (!(optimizer.paca_alpha > 0.0)) throw ConfigError("optimizer.paca_alpha", "must be > 0");
  if (!(lora_alpha > 0.0)) throw ConfigError("lora.alpha", "must be > 0");
  if (block_size < 1) throw ConfigError("qpaca.block_size", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (steps < 1) throw ConfigError("steps", "must be >= 1");
  if (!(task.noise >= 0.0)) throw ConfigError("task.noise", "must be >= 0");
  if (!(task.separation >= 0.0)) throw ConfigError("task.separation", "must be >= 0");
  if (task.eval_samples < 1) throw ConfigError("task.eval_samples", "must be >= 1");
  if (!(task.shift >= 0.0 && task.shift <= 1.0)) throw ConfigError("task.shift", "must lie in [0, 1]");
  if (!(task.pretrain_lr > 0.0)) throw ConfigError("task.pretrain_lr", "must be > 0");
  if (task.kind == TaskKind::clusters) {
    if (model.loss != LossKind::cross_entropy) {
      throw ConfigError("model.loss", "the clusters task requires cross_entropy");
    }
    if (model.output_dim() < 2) throw ConfigError("model.layers", "need at least two classes");
  } else if (model.loss != LossKind::mse) {
    throw ConfigError("model.loss", "the regression task requires mse");
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  ObjectReader root(doc, "");
  const auto parse_method_checked = [](std::string_view s) { return parse_method(s); };
  if (!root.has("method")) throw ConfigError("method", "required field missing");
  cfg.method = parse_enum(root, "method", cfg.method, parse_method_checked);
  cfg.rank = root.get<std::size_t>("rank", cfg.rank);
  cfg.dtype = parse_enum(root, "dtype", cfg.dtype, parse_dtype);
  cfg.batch_size = root.get<std::size_t>("batch_size", cfg.batch_size);
  cfg.steps = root.get<std::size_t>("steps", cfg.steps);
  cfg.data_seed = root.get<std::uint64_t>("data_seed", cfg.data_seed);
  cfg.model_seed = root.get<std::uint64_t>("model_seed", cfg.model_seed);

  if (root.has("model")) {
    ObjectReader r(root.raw("model"), "model");
    cfg.model = read_model(r, cfg.model);
  }
  if (root.has("selection")) {
    ObjectReader r(root.raw("selection"), "selection");
    cfg.selection.strategy =
        parse_enum(r, "strategy", cfg.selection.strategy,
                   [](std::string_view s) { return parse_selection_strategy(s); });
    cfg.selection.seed = r.get<std::uint64_t>("seed", cfg.selection.seed);
    cfg.selection.warmup_steps = r.get<std::size_t>("warmup_steps", cfg.selection.warmup_steps);
    r.finish();
  }
  cfg.selection.rank = cfg.rank;
  if (root.has("optimizer")) {
    ObjectReader r(root.raw("optimizer"), "optimizer");
    auto& o = cfg.optimizer;
    o.kind = parse_enum(r, "kind", o.kind, parse_optimizer);
    o.adamw.lr = r.get<double>("lr", o.adamw.lr);
    o.adamw.beta1 = r.get<double>("beta1", o.adamw.beta1);
    o.adamw.beta2 = r.get<double>("beta2", o.adamw.beta2);
    o.adamw.eps = r.get<double>("eps", o.adamw.eps);
    o.adamw.weight_decay = r.get<double>("weight_decay", o.adamw.weight_decay);
    o.schedule = parse_enum(r, "schedule", o.schedule,
                            [](std::string_view s) { return parse_schedule(s); });
    o.warmup_steps = r.get<std::size_t>("warmup_steps", o.warmup_steps);
    o.grad_accum = r.get<std::size_t>("grad_accum", o.grad_accum);
    o.paca_alpha = r.get<double>("paca_alpha", o.paca_alpha);
    r.finish();
  }
  if (root.has("lora")) {
    ObjectReader r(root.raw("lora"), "lora");
    cfg.lora_alpha = r.get<double>("alpha", cfg.lora_alpha);
    r.finish();
  }
  if (root.has("qpaca")) {
    ObjectReader r(root.raw("qpaca"), "qpaca");
    cfg.block_size = r.get<std::size_t>("block_size", cfg.block_size);
    r.finish();
  }
  if (root.has("task")) {
    ObjectReader r(root.raw("task"), "task");
    cfg.task.kind = parse_enum(r, "kind", cfg.task.kind, parse_task);
    cfg.task.separation = r.get<double>("separation", cfg.task.separation);
    cfg.task.noise = r.get<double>("noise", cfg.task.noise);
    cfg.task.eval_samples = r.get<std::size_t>("eval_samples", cfg.task.eval_samples);
    cfg.task.shift = r.get<double>("shift", cfg.task.shift);
    cfg.task.pretrain_steps = r.get<std::size_t>("pretrain_steps", cfg.task.pretrain_steps);
    cfg.task.pretrain_lr = r.get<double>("pretrain_lr", cfg.task.pretrain_lr);
    r.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  json layers = json::array();
  for (const auto& [d_in, d_out] : cfg.model.layers) layers.push_back({d_in, d_out});
  const auto& o = cfg.optimizer;
  json doc = {
      {"method", to_string(cfg.method)},
      {"rank", cfg.rank},
      {"dtype", to_string(cfg.dtype)},
      {"batch_size", cfg.batch_size},
      {"steps", cfg.steps},
      {"data_seed", cfg.data_seed},
      {"model_seed", cfg.model_seed},
      {"model",
       {{"layers", layers},
        {"nonlinearity", to_string(cfg.model.nonlinearity)},
        {"loss", to_string(cfg.model.loss)}}},
      {"selection",
       {{"strategy", to_string(cfg.selection.strategy)},
        {"seed", cfg.selection.seed},
        {"warmup_steps", cfg.selection.warmup_steps}}},
      {"optimizer",
       {{"kind", to_string(o.kind)},
        {"lr", o.adamw.lr},
        {"beta1", o.adamw.beta1},
        {"beta2", o.adamw.beta2},
        {"eps", o.adamw.eps},
        {"weight_decay", o.adamw.weight_decay},
        {"schedule", to_string(o.schedule)},
        {"warmup_steps", o.warmup_steps},
        {"grad_accum", o.grad_accum},
        {"paca_alpha", o.paca_alpha}}},
      {"lora", {{"alpha", cfg.lora_alpha}}},
      {"qpaca", {{"block_size", cfg.block_size}}},
      {"task",
       {{"kind", to_string(cfg.task.kind)},
        {"separation", cfg.task.separation},
        {"noise", cfg.task.noise},
        {"eval_samples", cfg.task.eval_samples},
        {"shift", cfg.task.shift},
        {"pretrain_steps", cfg.task.pretrain_steps},
        {"pretrain_lr", cfg.task.pretrain_lr}}},
  };
  return doc.dump(indent);
}

}  // namespace paca
