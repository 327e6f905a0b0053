// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "paca/hash.hpp"
#include "paca/kernels.hpp"
#include "paca/selection.hpp"

namespace paca {
namespace {

// Seed ordinals that keep the independent streams of one experiment apart.
constexpr std::uint64_t kTaskStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kSourceSampleStream = 3;
constexpr std::uint64_t kShiftStream = 4;
constexpr std::uint64_t kLoraStream = 1000;

template <typename T>
BasicMatrix<T> he_uniform(std::size_t d_out, std::size_t d_in, Rng& rng) {
  BasicMatrix<T> w(d_out, d_in);
  const double bound = std::sqrt(6.0 / static_cast<double>(d_in));
  for (T& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return w;
}

template <typename T>
void add_into(BasicMatrix<T>& acc, const BasicMatrix<T>& g) {
  auto a = acc.data();
  auto b = g.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <typename T>
void accumulate(std::optional<BasicMatrix<T>>& acc, BasicMatrix<T>&& g) {
  if (acc) {
    add_into(*acc, g);
  } else {
    acc = std::move(g);
  }
}

template <typename T>
void apply_update(OptimState<T>& state, BasicMatrix<T>& param, const BasicMatrix<T>& grad,
                  const OptimizerConfig& opt, double lr) {
  if (opt.kind == OptimizerKind::sgd) {
    sgd_step(param, grad, lr);
    return;
  }
  AdamWConfig c = opt.adamw;
  c.lr = lr;
  adamw_step(state, param, grad, c);
}

template <typename T>
BasicMatrix<T> compute_update(OptimState<T>& state, const BasicMatrix<T>& param,
                              const BasicMatrix<T>& grad, const OptimizerConfig& opt, double lr) {
  if (opt.kind == OptimizerKind::sgd) return sgd_update(grad, lr);
  AdamWConfig c = opt.adamw;
  c.lr = lr;
  return adamw_update(state, param, grad, c);
}

}  // namespace

std::size_t StepRecord::activation_bytes_total() const noexcept {
  std::size_t s = 0;
  for (std::size_t b : activation_bytes) s += b;
  return s;
}

std::size_t TrainLog::peak_activation_bytes() const noexcept {
  std::size_t peak = 0;
  for (const auto& s : steps) peak = std::max(peak, s.activation_bytes_total());
  return peak;
}

FlopCount TrainLog::total_flops() const noexcept {
  FlopCount f;
  for (const auto& s : steps) f += s.flops;
  return f;
}

// ---------------------------------------------------------------------------
// DataStream

template <typename T>
DataStream<T>::DataStream(const TaskConfig& task, const ModelSpec& model, std::uint64_t data_seed,
                          bool source_domain)
    : task_(task),
      d_in_(model.input_dim()),
      d_out_(model.output_dim()),
      data_seed_(data_seed),
      source_domain_(source_domain),
      rng_(derive_seed(data_seed, source_domain ? kSourceSampleStream : kSampleStream)) {
  Rng rng(derive_seed(data_seed, kTaskStream));
  Rng shift_rng(derive_seed(data_seed, kShiftStream));
  const bool shifted = !source_domain && task_.shift > 0.0;
  const double keep = std::sqrt(1.0 - task_.shift * task_.shift);
  if (task_.kind == TaskKind::clusters) {
    centres_.resize(d_out_);
    for (auto& c : centres_) {
      c.resize(d_in_);
      for (double& v : c) v = rng.normal();
      if (shifted) {
        for (double& v : c) v = keep * v + task_.shift * shift_rng.normal();
      }
      double norm = 0.0;
      for (double v : c) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : c) v *= task_.separation / norm;
    }
  } else {
    teacher_ = BasicMatrix<double>(d_out_, d_in_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_in_));
    for (double& v : teacher_.data()) {
      v = rng.normal();
      if (shifted) v = keep * v + task_.shift * shift_rng.normal();
      v *= scale;
    }
  }
}

template <typename T>
Batch<T> DataStream<T>::draw(std::size_t n, Rng& rng) const {
  Batch<T> b;
  b.x = BasicMatrix<T>(d_in_, n);
  if (task_.kind == TaskKind::clusters) {
    b.labels.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t label = static_cast<std::size_t>(rng.below(d_out_));
      b.labels[j] = label;
      for (std::size_t i = 0; i < d_in_; ++i) {
        b.x(i, j) = static_cast<T>(centres_[label][i] + task_.noise * rng.normal());
      }
    }
  } else {
    b.y = BasicMatrix<T>(d_out_, n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < d_in_; ++i) b.x(i, j) = static_cast<T>(rng.normal());
      for (std::size_t o = 0; o < d_out_; ++o) {
        double t = 0.0;
        for (std::size_t i = 0; i < d_in_; ++i) t += teacher_(o, i) * static_cast<double>(b.x(i, j));
        b.y(o, j) = static_cast<T>(t + task_.noise * rng.normal());
      }
    }
  }
  return b;
}

template <typename T>
Batch<T> DataStream<T>::next(std::size_t n) {
  return draw(n, rng_);
}

template <typename T>
void DataStream<T>::reset() {
  rng_ = Rng(derive_seed(data_seed_, source_domain_ ? kSourceSampleStream : kSampleStream));
}

template <typename T>
Batch<T> DataStream<T>::eval_set(std::size_t n) const {
  Rng rng(derive_seed(data_seed_, kEvalStream));
  return draw(n, rng);
}

// ---------------------------------------------------------------------------
// Trainer

template <typename T>
Trainer<T>::Trainer(ExperimentConfig cfg, bool source_domain)
    : cfg_(std::move(cfg)), data_(cfg_.task, cfg_.model, cfg_.data_seed, source_domain) {
  cfg_.validate();
  if (dtype_size(cfg_.dtype) != sizeof(T)) {
    throw ConfigError("dtype", "trainer instantiated for a different dtype");
  }
  eval_ = data_.eval_set(cfg_.task.eval_samples);

  for (std::size_t l = 0; l < cfg_.model.layers.size(); ++l) {
    const auto [d_in, d_out] = cfg_.model.layers[l];
    Rng rng(derive_seed(cfg_.model_seed, l));
    TrainableLayer<T> layer;
    layer.d_in = d_in;
    layer.d_out = d_out;
    layer.base.w = he_uniform<T>(d_out, d_in, rng);
    if (cfg_.method == Method::full) {
      layer.state = OptimState<T>::zeros_like(layer.base.w);
    } else if (cfg_.method == Method::lora) {
      Rng lora_rng(derive_seed(cfg_.model_seed, kLoraStream + l));
      layer.lora = LoRAParams<T>::init(d_in, d_out, cfg_.rank, cfg_.lora_alpha, lora_rng);
      layer.state = OptimState<T>::zeros_like(layer.lora->a);
      layer.state_b = OptimState<T>::zeros_like(layer.lora->b);
    }
    layers_.push_back(std::move(layer));
  }
  if (cfg_.task.pretrain_steps > 0) pretrain();
  if (cfg_.method == Method::paca || cfg_.method == Method::qpaca) select_columns();

  log_.config = cfg_;
  log_.warmup_flops = warmup_flops_;
  log_.warmup_steps = warmup_steps_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (!layer.paca) continue;
    log_.selected_columns.emplace_back(layer.paca->idx.begin(), layer.paca->idx.end());
    log_.frozen_digest_before.push_back(columns_digest(layer.paca->w, frozen_columns(l)));
    if (layer.packed) log_.payload_digest_before.push_back(payload_digest(layer.packed->quantized));
  }
  log_.initial_eval_loss = eval_loss();
}

template <typename T>
void Trainer<T>::pretrain() {
  ExperimentConfig src = cfg_;
  src.method = Method::full;
  src.steps = cfg_.task.pretrain_steps;
  src.task.pretrain_steps = 0;
  src.optimizer.kind = OptimizerKind::adamw;
  src.optimizer.adamw.lr = cfg_.task.pretrain_lr;
  src.optimizer.schedule = ScheduleKind::constant;
  src.optimizer.warmup_steps = 0;
  src.optimizer.grad_accum = 1;
  Trainer<T> source(std::move(src), true);
  while (source.steps_done() < source.config().steps) source.step();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].base.w = source.layers_[l].base.w;
  }
}

template <typename T>
void Trainer<T>::select_columns() {
  const auto& sel = cfg_.selection;
  std::vector<IndexSet> chosen;
  if (sel.strategy == SelectionStrategy::gradient) {
    // Full weight gradients over the warmup batches, no updates; the data
    // stream restarts afterwards.
    std::vector<GradStats> stats;
    for (const auto& layer : layers_) stats.push_back(GradStats::zeros(layer.d_in));
    MatmulCounter counter;
    for (std::size_t t = 0; t < sel.warmup_steps; ++t) {
      const Batch<T> batch = data_.next(cfg_.batch_size);
      std::vector<ActivationCache<T>> caches;
      std::vector<std::vector<std::uint8_t>> masks;
      BasicMatrix<T> h = batch.x;
      for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto fwd = linear_forward(layers_[l].base, h, true);
        caches.push_back(std::move(fwd.cache));
        h = std::move(fwd.out);
        if (l + 1 < layers_.size() && cfg_.model.nonlinearity == Nonlinearity::relu) {
          std::vector<std::uint8_t> mask(h.size());
          auto d = h.data();
          for (std::size_t i = 0; i < d.size(); ++i) {
            mask[i] = d[i] > T{0};
            if (!mask[i]) d[i] = T{0};
          }
          masks.push_back(std::move(mask));
        }
      }
      BasicMatrix<T> g;
      loss_and_grad(h, batch, &g);
      for (std::size_t l = layers_.size(); l-- > 0;) {
        auto grads = linear_backward(layers_[l].base, g, caches[l]);
        stats[l] = accumulate_grad_stats(std::move(stats[l]), grads.g_w);
        g = std::move(grads.g_in);
        if (l > 0 && cfg_.model.nonlinearity == Nonlinearity::relu) {
          auto d = g.data();
          const auto& mask = masks[l - 1];
          for (std::size_t i = 0; i < d.size(); ++i)
            if (!mask[i]) d[i] = T{0};
        }
      }
    }
    warmup_steps_ = sel.warmup_steps;
    ExperimentConfig full = cfg_;
    full.method = Method::full;
    full.optimizer.grad_accum = 1;
    const FlopCount per_step = model_step_flops(full);
    const auto k = static_cast<std::uint64_t>(sel.warmup_steps);
    warmup_flops_ = {per_step.forward * k, per_step.backward_input * k,
                     per_step.backward_weight * k};
    if (counter.flops() != warmup_flops_.total()) {
      throw InvariantError("warmup matmul FLOPs disagree with the cost model");
    }
    for (const auto& s : stats) chosen.push_back(select_by_grad(s, sel.rank));
    data_.reset();
  } else {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (sel.strategy == SelectionStrategy::random) {
        chosen.push_back(select_random(layers_[l].d_in, sel.rank, derive_seed(sel.seed, l)));
      } else {
        chosen.push_back(select_by_weight_norm(layers_[l].base.w, sel.rank));
      }
    }
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    BasicMatrix<T> w = std::move(layer.base.w);
    layer.base.w = BasicMatrix<T>();
    if (cfg_.method == Method::qpaca) {
      layer.packed = qpaca_pack(w, chosen[l], cfg_.block_size);
      w = qpaca_materialize(*layer.packed);
    }
    layer.paca.emplace(std::move(w), chosen[l]);
    layer.state = OptimState<T>::zeros_like(gather_cols(layer.paca->w, layer.paca->idx));
  }
}

template <typename T>
double Trainer<T>::loss_and_grad(const BasicMatrix<T>& out, const Batch<T>& batch,
                                 BasicMatrix<T>* grad) const {
  const std::size_t n = out.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad) *grad = BasicMatrix<T>(out.rows(), n);
  double total = 0.0;
  if (cfg_.model.loss == LossKind::cross_entropy) {
    std::vector<double> p(out.rows());
    for (std::size_t j = 0; j < n; ++j) {
      double top = -INFINITY;
      for (std::size_t c = 0; c < out.rows(); ++c) top = std::max(top, double(out(c, j)));
      double z = 0.0;
      for (std::size_t c = 0; c < out.rows(); ++c) {
        p[c] = std::exp(double(out(c, j)) - top);
        z += p[c];
      }
      const std::size_t y = batch.labels[j];
      total += top + std::log(z) - double(out(y, j));
      if (grad) {
        for (std::size_t c = 0; c < out.rows(); ++c) {
          const double target = c == y ? 1.0 : 0.0;
          (*grad)(c, j) = static_cast<T>((p[c] / z - target) * inv_n);
        }
      }
    }
  } else {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t o = 0; o < out.rows(); ++o) {
        const double e = double(out(o, j)) - double(batch.y(o, j));
        total += 0.5 * e * e;
        if (grad) (*grad)(o, j) = static_cast<T>(e * inv_n);
      }
  }
  return total * inv_n;
}

template <typename T>
StepRecord Trainer<T>::step() {
  const std::size_t L = layers_.size();
  const bool relu = cfg_.model.nonlinearity == Nonlinearity::relu;
  const std::size_t s = sizeof(T);

  StepRecord rec;
  rec.step = step_;
  rec.lr = cfg_.optimizer.adamw.lr * cfg_.lr_schedule().multiplier(step_);

  // Gradient sums over micro-batches: main parameter (W, A or P) and LoRA B.
  std::vector<std::optional<BasicMatrix<T>>> g_main(L), g_b(L);

  MatmulCounter counter;
  double loss_sum = 0.0;
  for (std::size_t micro = 0; micro < cfg_.optimizer.grad_accum; ++micro) {
    const Batch<T> batch = data_.next(cfg_.batch_size);
    std::vector<ActivationCache<T>> caches(L);
    std::vector<std::vector<std::uint8_t>> masks(L);
    BasicMatrix<T> h = batch.x;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& layer = layers_[l];
      ForwardResult<T> fwd;
      switch (cfg_.method) {
        case Method::full: fwd = linear_forward(layer.base, h, true); break;
        case Method::lora: fwd = lora_forward(layer.base, *layer.lora, h, true); break;
        case Method::paca:
        case Method::qpaca: fwd = paca_forward(*layer.paca, h, true); break;
      }
      const std::size_t expected =
          expected_cache_bytes(cfg_.method, layer.d_in, cfg_.rank, cfg_.batch_size, s);
      if (activation_bytes(fwd.cache) != expected) {
        throw InvariantError("layer " + std::to_string(l) + " cached " +
                             std::to_string(fwd.cache.bytes()) + " bytes, expected " +
                             std::to_string(expected));
      }
      if (micro == 0) rec.activation_bytes.push_back(fwd.cache.bytes());
      caches[l] = std::move(fwd.cache);
      h = std::move(fwd.out);
      if (l + 1 < L && relu) {
        auto& mask = masks[l];
        mask.resize(h.size());
        auto d = h.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
          mask[i] = d[i] > T{0};
          if (!mask[i]) d[i] = T{0};
        }
      }
    }

    BasicMatrix<T> g;
    const double loss = loss_and_grad(h, batch, &g);
    if (!std::isfinite(loss)) throw InvariantError("non-finite loss at step " + std::to_string(step_));
    loss_sum += loss;

    for (std::size_t l = L; l-- > 0;) {
      const auto& layer = layers_[l];
      switch (cfg_.method) {
        case Method::full: {
          auto grads = linear_backward(layer.base, g, caches[l]);
          accumulate(g_main[l], std::move(grads.g_w));
          g = std::move(grads.g_in);
          break;
        }
        case Method::lora: {
          auto grads = lora_backward(layer.base, *layer.lora, g, caches[l]);
          accumulate(g_main[l], std::move(grads.g_a));
          accumulate(g_b[l], std::move(grads.g_b));
          g = std::move(grads.g_in);
          break;
        }
        case Method::paca:
        case Method::qpaca: {
          auto grads = paca_backward(*layer.paca, g, caches[l]);
          accumulate(g_main[l], std::move(grads.g_p));
          g = std::move(grads.g_in);
          break;
        }
      }
      if (l > 0 && relu) {
        auto d = g.data();
        const auto& mask = masks[l - 1];
        for (std::size_t i = 0; i < d.size(); ++i)
          if (!mask[i]) d[i] = T{0};
      }
    }
  }

  rec.flops = model_step_flops(cfg_);
  if (counter.flops() != rec.flops.total()) {
    throw InvariantError("instrumented matmul FLOPs " + std::to_string(counter.flops()) +
                         " differ from the cost model " + std::to_string(rec.flops.total()));
  }
  rec.loss = loss_sum / static_cast<double>(cfg_.optimizer.grad_accum);

  const auto& opt = cfg_.optimizer;
  for (std::size_t l = 0; l < L; ++l) {
    auto& layer = layers_[l];
    switch (cfg_.method) {
      case Method::full:
        apply_update(layer.state, layer.base.w, *g_main[l], opt, rec.lr);
        break;
      case Method::lora:
        apply_update(layer.state, layer.lora->a, *g_main[l], opt, rec.lr);
        apply_update(layer.state_b, layer.lora->b, *g_b[l], opt, rec.lr);
        break;
      case Method::paca:
      case Method::qpaca: {
        BasicMatrix<T>& g_p = *g_main[l];
        if (opt.paca_alpha != 1.0) {
          for (T& v : g_p.data()) v *= static_cast<T>(opt.paca_alpha);
        }
        const BasicMatrix<T> p = gather_cols(layer.paca->w, layer.paca->idx);
        const BasicMatrix<T> update = compute_update(layer.state, p, g_p, opt, rec.lr);
        paca_apply_update(*layer.paca, update);
        if (layer.packed) add_into(layer.packed->selected, update);
        break;
      }
    }
  }
  last_activation_total_ = rec.activation_bytes_total();
  ++step_;
  return rec;
}

template <typename T>
double Trainer<T>::eval_loss() const {
  const bool relu = cfg_.model.nonlinearity == Nonlinearity::relu;
  BasicMatrix<T> h = eval_.x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.lora) {
      h = lora_forward(layer.base, *layer.lora, h, false).out;
    } else if (layer.paca) {
      h = paca_forward(*layer.paca, h, false).out;
    } else {
      h = linear_forward(layer.base, h, false).out;
    }
    if (l + 1 < layers_.size() && relu) {
      for (T& v : h.data()) v = std::max(v, T{0});
    }
  }
  return loss_and_grad(h, eval_, nullptr);
}

template <typename T>
std::vector<std::size_t> Trainer<T>::frozen_columns(std::size_t l) const {
  const auto& layer = layers_.at(l);
  if (!layer.paca) return {};
  return layer.paca->idx.complement();
}

template <typename T>
MemoryBreakdown Trainer<T>::measured_memory() const {
  MemoryBreakdown m;
  for (const auto& layer : layers_) {
    if (layer.packed) {
      m.weights += layer.packed->weight_bytes();
    } else {
      m.weights += layer.weights().bytes();
      if (layer.lora) m.weights += layer.lora->a.bytes() + layer.lora->b.bytes();
    }
    std::size_t trainable = 0;
    if (layer.lora) {
      trainable = layer.lora->a.bytes() + layer.lora->b.bytes();
    } else if (layer.paca) {
      trainable = layer.paca->w.rows() * layer.paca->idx.size() * sizeof(T);
    } else {
      trainable = layer.base.w.bytes();
    }
    m.grads += trainable;
    if (cfg_.optimizer.kind == OptimizerKind::adamw) {
      m.optim_state += layer.state.bytes() + layer.state_b.bytes();
    }
  }
  m.activations = last_activation_total_;
  return m;
}

template <typename T>
TrainLog Trainer<T>::run() {
  const auto start = std::chrono::steady_clock::now();
  while (step_ < cfg_.steps) log_.steps.push_back(step());
  log_.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log_.final_eval_loss = eval_loss();

  log_.frozen_digest_after.clear();
  log_.payload_digest_after.clear();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (!layer.paca) continue;
    log_.frozen_digest_after.push_back(columns_digest(layer.paca->w, frozen_columns(l)));
    if (layer.packed) log_.payload_digest_after.push_back(payload_digest(layer.packed->quantized));
  }
  if (log_.frozen_digest_after != log_.frozen_digest_before) {
    throw InvariantError("unselected weight columns changed during training");
  }
  if (log_.payload_digest_after != log_.payload_digest_before) {
    throw InvariantError("quantized payload changed during training");
  }

  log_.measured = measured_memory();
  log_.analytical = memory_report(cfg_.model, cfg_);
  if (!(log_.measured == log_.analytical)) {
    throw InvariantError("measured memory disagrees with the analytical report");
  }
  return log_;
}

TrainLog run_experiment(const ExperimentConfig& cfg) {
  if (cfg.dtype == Dtype::f32) return Trainer<float>(cfg).run();
  return Trainer<double>(cfg).run();
}

template class DataStream<float>;
template class DataStream<double>;
template class Trainer<float>;
template class Trainer<double>;

}  // namespace paca
