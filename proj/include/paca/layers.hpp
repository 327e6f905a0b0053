// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "paca/matrix.hpp"
#include "paca/method.hpp"
#include "paca/rng.hpp"

namespace paca {

template <typename T>
struct LinearParams {
  BasicMatrix<T> w;  // d_out x d_in
};

/// Low-rank adapter x_out = W x + scale * B (A x). B starts at zero so the
/// adapted layer initially equals the base layer.
template <typename T>
struct LoRAParams {
  BasicMatrix<T> a;  // r x d_in
  BasicMatrix<T> b;  // d_out x r
  T scale{1};

  std::size_t rank() const noexcept { return a.rows(); }

  /// A drawn from U(-1/sqrt(d_in), 1/sqrt(d_in)), B = 0, scale = alpha / r.
  static LoRAParams init(std::size_t d_in, std::size_t d_out, std::size_t r, double alpha,
                         Rng& rng);

  /// Throws ShapeError/ArgumentError when a, b and scale are inconsistent.
  void validate() const;
};

/// Weight matrix with a fixed set of trainable input columns.
template <typename T>
struct PaCAParams {
  PaCAParams(BasicMatrix<T> weights, IndexSet selected);

  BasicMatrix<T> w;  // d_out x d_in
  IndexSet idx;      // over d_in, fixed for the lifetime of training
};

/// Tensors retained by a train-mode forward for the matching backward.
template <typename T>
class ActivationCache {
 public:
  ActivationCache() = default;
  explicit ActivationCache(Method tag) : tag_(tag), engaged_(true) {}

  void store(std::string name, BasicMatrix<T> tensor);

  /// Stored tensor by name, or nullptr.
  const BasicMatrix<T>* find(std::string_view name) const noexcept;

  bool empty() const noexcept { return tensors_.empty(); }
  bool engaged() const noexcept { return engaged_; }
  Method tag() const noexcept { return tag_; }
  std::size_t bytes() const noexcept { return bytes_; }
  const std::vector<std::pair<std::string, BasicMatrix<T>>>& tensors() const noexcept {
    return tensors_;
  }

 private:
  Method tag_ = Method::full;
  bool engaged_ = false;
  std::vector<std::pair<std::string, BasicMatrix<T>>> tensors_;
  std::size_t bytes_ = 0;
};

template <typename T>
struct ForwardResult {
  BasicMatrix<T> out;
  ActivationCache<T> cache;
};

template <typename T>
struct LinearGrads {
  BasicMatrix<T> g_in;
  BasicMatrix<T> g_w;
};

template <typename T>
struct LoRAGrads {
  BasicMatrix<T> g_in;
  BasicMatrix<T> g_a;
  BasicMatrix<T> g_b;
};

template <typename T>
struct PaCAGrads {
  BasicMatrix<T> g_in;
  BasicMatrix<T> g_p;  // d_out x r
};

// Full fine-tuning: x_out = W x; caches x_in.
template <typename T>
ForwardResult<T> linear_forward(const LinearParams<T>& p, const BasicMatrix<T>& x_in, bool train);
template <typename T>
LinearGrads<T> linear_backward(const LinearParams<T>& p, const BasicMatrix<T>& g_out,
                               const ActivationCache<T>& cache);

// LoRA: caches x_in and x_mid = A x_in. W receives no gradient.
template <typename T>
ForwardResult<T> lora_forward(const LinearParams<T>& base, const LoRAParams<T>& lp,
                              const BasicMatrix<T>& x_in, bool train);
template <typename T>
LoRAGrads<T> lora_backward(const LinearParams<T>& base, const LoRAParams<T>& lp,
                           const BasicMatrix<T>& g_out, const ActivationCache<T>& cache);

/// W + scale * B A.
template <typename T>
LinearParams<T> lora_merge(const LinearParams<T>& base, const LoRAParams<T>& lp);

// PaCA: the forward is the plain W x; only the selected rows of x_in are
// cached, and only the selected columns of W receive a gradient.
template <typename T>
ForwardResult<T> paca_forward(const PaCAParams<T>& pp, const BasicMatrix<T>& x_in, bool train);
template <typename T>
PaCAGrads<T> paca_backward(const PaCAParams<T>& pp, const BasicMatrix<T>& g_out,
                           const ActivationCache<T>& cache);

template <typename T>
std::size_t activation_bytes(const ActivationCache<T>& cache) noexcept {
  return cache.bytes();
}

/// Bytes a train-mode forward of `method` caches for one layer.
std::size_t expected_cache_bytes(Method method, std::size_t d_in, std::size_t r, std::size_t n,
                                 std::size_t dtype_size) noexcept;

}  // namespace paca
