// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/layers.hpp"

#include <cmath>

#include "paca/kernels.hpp"

namespace paca {
namespace {

constexpr std::string_view kXIn = "x_in";
constexpr std::string_view kXMid = "x_mid";
constexpr std::string_view kPartialXIn = "p_x_in";

template <typename T>
const BasicMatrix<T>& require(const ActivationCache<T>& cache, std::string_view name,
                              Method expected) {
  if (!cache.engaged()) throw StateError("backward without train-mode forward");
  if (cache.tag() != expected) {
    throw StateError("activation cache was produced by " + std::string(to_string(cache.tag())) +
                     ", expected " + std::string(to_string(expected)));
  }
  const BasicMatrix<T>* t = cache.find(name);
  if (t == nullptr) throw StateError("activation cache is missing " + std::string(name));
  return *t;
}

template <typename T>
void check_grad_batch(const BasicMatrix<T>& g_out, std::size_t d_out, std::size_t n) {
  if (g_out.rows() != d_out || g_out.cols() != n) {
    throw ShapeError("output gradient " + shape_string(g_out) + " does not match " +
                     std::to_string(d_out) + "x" + std::to_string(n));
  }
}

// out = lhs + scale * rhs, elementwise.
template <typename T>
BasicMatrix<T> add_scaled(BasicMatrix<T> lhs, const BasicMatrix<T>& rhs, T scale) {
  auto l = lhs.data();
  auto r = rhs.data();
  for (std::size_t i = 0; i < l.size(); ++i) l[i] += scale * r[i];
  return lhs;
}

template <typename T>
BasicMatrix<T> scaled(BasicMatrix<T> m, T scale) {
  for (T& v : m.data()) v *= scale;
  return m;
}

}  // namespace

std::size_t expected_cache_bytes(Method method, std::size_t d_in, std::size_t r, std::size_t n,
                                 std::size_t dtype_size) noexcept {
  switch (method) {
    case Method::full: return d_in * n * dtype_size;
    case Method::lora: return (d_in + r) * n * dtype_size;
    case Method::paca:
    case Method::qpaca: return r * n * dtype_size;
  }
  return 0;
}

template <typename T>
LoRAParams<T> LoRAParams<T>::init(std::size_t d_in, std::size_t d_out, std::size_t r,
                                  double alpha, Rng& rng) {
  if (r == 0) throw ArgumentError("LoRA rank must be at least 1");
  if (!(alpha > 0.0)) throw ArgumentError("LoRA alpha must be positive");
  LoRAParams p;
  p.a = BasicMatrix<T>(r, d_in);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  for (T& v : p.a.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  p.b = BasicMatrix<T>(d_out, r);
  p.scale = static_cast<T>(alpha / static_cast<double>(r));
  return p;
}

template <typename T>
void LoRAParams<T>::validate() const {
  if (a.rows() == 0) throw ArgumentError("LoRA rank must be at least 1");
  if (a.rows() != b.cols()) {
    throw ShapeError("LoRA A is " + shape_string(a) + " but B is " + shape_string(b));
  }
  if (!(scale > T{0})) throw ArgumentError("LoRA scale must be positive");
}

template <typename T>
PaCAParams<T>::PaCAParams(BasicMatrix<T> weights, IndexSet selected)
    : w(std::move(weights)), idx(std::move(selected)) {
  if (idx.domain() != w.cols()) {
    throw ShapeError("index domain " + std::to_string(idx.domain()) +
                     " does not match weight width " + std::to_string(w.cols()));
  }
}

template <typename T>
void ActivationCache<T>::store(std::string name, BasicMatrix<T> tensor) {
  engaged_ = true;
  bytes_ += tensor.bytes();
  tensors_.emplace_back(std::move(name), std::move(tensor));
}

template <typename T>
const BasicMatrix<T>* ActivationCache<T>::find(std::string_view name) const noexcept {
  for (const auto& [key, tensor] : tensors_) {
    if (key == name) return &tensor;
  }
  return nullptr;
}

template <typename T>
ForwardResult<T> linear_forward(const LinearParams<T>& p, const BasicMatrix<T>& x_in, bool train) {
  ForwardResult<T> r{matmul(p.w, x_in), {}};
  if (train) {
    r.cache = ActivationCache<T>(Method::full);
    r.cache.store(std::string(kXIn), x_in);
  }
  return r;
}

template <typename T>
LinearGrads<T> linear_backward(const LinearParams<T>& p, const BasicMatrix<T>& g_out,
                               const ActivationCache<T>& cache) {
  const auto& x_in = require(cache, kXIn, Method::full);
  check_grad_batch(g_out, p.w.rows(), x_in.cols());
  return {matmul(transpose(p.w), g_out), matmul(g_out, transpose(x_in))};
}

template <typename T>
ForwardResult<T> lora_forward(const LinearParams<T>& base, const LoRAParams<T>& lp,
                              const BasicMatrix<T>& x_in, bool train) {
  lp.validate();
  if (lp.a.cols() != base.w.cols() || lp.b.rows() != base.w.rows()) {
    throw ShapeError("LoRA adapters " + shape_string(lp.b) + " x " + shape_string(lp.a) +
                     " do not fit base weight " + shape_string(base.w));
  }
  auto x_mid = matmul(lp.a, x_in);
  ForwardResult<T> r{add_scaled(matmul(base.w, x_in), matmul(lp.b, x_mid), lp.scale), {}};
  if (train) {
    r.cache = ActivationCache<T>(Method::lora);
    r.cache.store(std::string(kXIn), x_in);
    r.cache.store(std::string(kXMid), std::move(x_mid));
  }
  return r;
}

template <typename T>
LoRAGrads<T> lora_backward(const LinearParams<T>& base, const LoRAParams<T>& lp,
                           const BasicMatrix<T>& g_out, const ActivationCache<T>& cache) {
  const auto& x_in = require(cache, kXIn, Method::lora);
  const auto& x_mid = require(cache, kXMid, Method::lora);
  check_grad_batch(g_out, base.w.rows(), x_in.cols());
  auto g_mid = matmul(transpose(lp.b), g_out);  // B^T g_out, r x n
  LoRAGrads<T> g;
  g.g_in = add_scaled(matmul(transpose(base.w), g_out), matmul(transpose(lp.a), g_mid), lp.scale);
  g.g_a = scaled(matmul(g_mid, transpose(x_in)), lp.scale);
  g.g_b = scaled(matmul(g_out, transpose(x_mid)), lp.scale);
  return g;
}

template <typename T>
LinearParams<T> lora_merge(const LinearParams<T>& base, const LoRAParams<T>& lp) {
  lp.validate();
  if (lp.a.cols() != base.w.cols() || lp.b.rows() != base.w.rows()) {
    throw ShapeError("LoRA adapters do not fit base weight " + shape_string(base.w));
  }
  return {add_scaled(base.w, matmul(lp.b, lp.a), lp.scale)};
}

template <typename T>
ForwardResult<T> paca_forward(const PaCAParams<T>& pp, const BasicMatrix<T>& x_in, bool train) {
  if (pp.idx.domain() != pp.w.cols() || x_in.rows() != pp.w.cols()) {
    throw ShapeError("paca_forward: weight " + shape_string(pp.w) + ", input " +
                     shape_string(x_in));
  }
  ForwardResult<T> r{matmul(pp.w, x_in), {}};
  if (train) {
    r.cache = ActivationCache<T>(Method::paca);
    r.cache.store(std::string(kPartialXIn), gather_rows(x_in, pp.idx));
  }
  return r;
}

template <typename T>
PaCAGrads<T> paca_backward(const PaCAParams<T>& pp, const BasicMatrix<T>& g_out,
                           const ActivationCache<T>& cache) {
  const auto& px_in = require(cache, kPartialXIn, Method::paca);
  check_grad_batch(g_out, pp.w.rows(), px_in.cols());
  return {matmul(transpose(pp.w), g_out), matmul(g_out, transpose(px_in))};
}

#define PACA_INSTANTIATE(T)                                                                   \
  template struct LoRAParams<T>;                                                              \
  template struct PaCAParams<T>;                                                              \
  template class ActivationCache<T>;                                                          \
  template ForwardResult<T> linear_forward(const LinearParams<T>&, const BasicMatrix<T>&, bool); \
  template LinearGrads<T> linear_backward(const LinearParams<T>&, const BasicMatrix<T>&,      \
                                          const ActivationCache<T>&);                         \
  template ForwardResult<T> lora_forward(const LinearParams<T>&, const LoRAParams<T>&,        \
                                         const BasicMatrix<T>&, bool);                        \
  template LoRAGrads<T> lora_backward(const LinearParams<T>&, const LoRAParams<T>&,           \
                                      const BasicMatrix<T>&, const ActivationCache<T>&);      \
  template LinearParams<T> lora_merge(const LinearParams<T>&, const LoRAParams<T>&);          \
  template ForwardResult<T> paca_forward(const PaCAParams<T>&, const BasicMatrix<T>&, bool);  \
  template PaCAGrads<T> paca_backward(const PaCAParams<T>&, const BasicMatrix<T>&,            \
                                      const ActivationCache<T>&);

PACA_INSTANTIATE(float)
PACA_INSTANTIATE(double)

#undef PACA_INSTANTIATE

}  // namespace paca
