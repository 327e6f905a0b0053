// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "paca/kernels.hpp"

namespace paca {
namespace {

template <typename T>
void check_same_shape(const BasicMatrix<T>& a, const BasicMatrix<T>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + shape_string(a) + " vs " + shape_string(b));
  }
}

}  // namespace

void AdamWConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ArgumentError("lr must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ArgumentError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ArgumentError("eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be >= 0");
}

template <typename T>
void sgd_step(BasicMatrix<T>& param, const BasicMatrix<T>& grad, double lr) {
  check_same_shape(param, grad, "sgd_step");
  const T eta = static_cast<T>(lr);
  auto p = param.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= eta * g[i];
}

template <typename T>
BasicMatrix<T> sgd_update(const BasicMatrix<T>& grad, double lr) {
  BasicMatrix<T> u = grad;
  const T eta = static_cast<T>(lr);
  for (T& v : u.data()) v = -(eta * v);
  return u;
}

template <typename T>
BasicMatrix<T> adamw_update(OptimState<T>& state, const BasicMatrix<T>& param,
                            const BasicMatrix<T>& grad, const AdamWConfig& cfg) {
  check_same_shape(param, grad, "adamw_update");
  check_same_shape(state.m, param, "adamw_update state");
  check_same_shape(state.v, param, "adamw_update state");
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.eps);
  const T wd = static_cast<T>(cfg.weight_decay);

  BasicMatrix<T> update(param.rows(), param.cols());
  auto m = state.m.data();
  auto v = state.v.data();
  auto g = grad.data();
  auto p = param.data();
  auto u = update.data();
  for (std::size_t i = 0; i < u.size(); ++i) {
    m[i] = b1 * m[i] + (T{1} - b1) * g[i];
    v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
    const T m_hat = m[i] / corr1;
    const T v_hat = v[i] / corr2;
    u[i] = -(lr * (m_hat / (std::sqrt(v_hat) + eps) + wd * p[i]));
  }
  return update;
}

template <typename T>
void adamw_step(OptimState<T>& state, BasicMatrix<T>& param, const BasicMatrix<T>& grad,
                const AdamWConfig& cfg) {
  const auto update = adamw_update(state, param, grad, cfg);
  auto p = param.data();
  auto u = update.data();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += u[i];
}

template <typename T>
void paca_apply_update(PaCAParams<T>& pp, const BasicMatrix<T>& update) {
  scatter_cols_add(pp.w, pp.idx, update, T{1});
}

std::string_view to_string(ScheduleKind k) noexcept {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::cosine: return "cosine";
  }
  return "unknown";
}

ScheduleKind parse_schedule(std::string_view name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "linear") return ScheduleKind::linear;
  if (name == "cosine") return ScheduleKind::cosine;
  throw ArgumentError("unknown schedule '" + std::string(name) + "'");
}

double LrSchedule::multiplier(std::size_t step) const noexcept {
  if (step < warmup_steps) {
    return static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  if (kind == ScheduleKind::constant || total_steps <= warmup_steps) return 1.0;
  const double progress = std::min(
      1.0, static_cast<double>(step - warmup_steps) /
               static_cast<double>(total_steps - warmup_steps));
  if (kind == ScheduleKind::linear) return 1.0 - progress;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

#define PACA_INSTANTIATE(T)                                                                 \
  template void sgd_step(BasicMatrix<T>&, const BasicMatrix<T>&, double);                   \
  template BasicMatrix<T> sgd_update(const BasicMatrix<T>&, double);                        \
  template BasicMatrix<T> adamw_update(OptimState<T>&, const BasicMatrix<T>&,               \
                                       const BasicMatrix<T>&, const AdamWConfig&);          \
  template void adamw_step(OptimState<T>&, BasicMatrix<T>&, const BasicMatrix<T>&,          \
                           const AdamWConfig&);                                             \
  template void paca_apply_update(PaCAParams<T>&, const BasicMatrix<T>&);

PACA_INSTANTIATE(float)
PACA_INSTANTIATE(double)

#undef PACA_INSTANTIATE

}  // namespace paca
