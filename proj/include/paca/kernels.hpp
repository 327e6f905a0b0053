// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "paca/matrix.hpp"

namespace paca {

/// c = a * b. Each output entry accumulates its products with the inner index
/// ascending, starting from zero, so results are reproducible bit for bit.
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a);

/// Rows of `x` at the positions in `idx` (the partial activations of a batch).
template <typename T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& x, const IndexSet& idx);

/// Columns of `w` at the positions in `idx` (the partial connections).
template <typename T>
BasicMatrix<T> gather_cols(const BasicMatrix<T>& w, const IndexSet& idx);

/// w[:, idx[j]] += coeff * delta[:, j]. Columns outside `idx` are not touched.
template <typename T>
void scatter_cols_add(BasicMatrix<T>& w, const IndexSet& idx, const BasicMatrix<T>& delta,
                      T coeff);

/// Counts multiply-accumulate operations issued by `matmul` on the calling
/// thread while the counter is alive. Counters may nest.
class MatmulCounter {
 public:
  MatmulCounter() noexcept;
  MatmulCounter(const MatmulCounter&) = delete;
  MatmulCounter& operator=(const MatmulCounter&) = delete;

  std::uint64_t macs() const noexcept;
  /// One multiply-accumulate counts as two FLOPs.
  std::uint64_t flops() const noexcept { return 2 * macs(); }

 private:
  std::uint64_t start_;
};

}  // namespace paca
