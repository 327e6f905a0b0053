// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/kernels.hpp"

namespace paca {
namespace {

thread_local std::uint64_t tl_macs = 0;

void check_domain(const IndexSet& idx, std::size_t extent, const char* what) {
  if (idx.domain() != extent) {
    throw IndexError(std::string(what) + ": index domain " + std::to_string(idx.domain()) +
                     " does not match extent " + std::to_string(extent));
  }
}

}  // namespace

MatmulCounter::MatmulCounter() noexcept : start_(tl_macs) {}

std::uint64_t MatmulCounter::macs() const noexcept { return tl_macs - start_; }

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_string(a) + " times " + shape_string(b));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  BasicMatrix<T> c(m, n);
  // i-t-j order keeps the per-entry accumulation order at t ascending.
  for (std::size_t i = 0; i < m; ++i) {
    auto crow = c.row(i);
    for (std::size_t t = 0; t < k; ++t) {
      const T ait = a(i, t);
      auto brow = b.row(t);
      for (std::size_t j = 0; j < n; ++j) crow[j] += ait * brow[j];
    }
  }
  tl_macs += static_cast<std::uint64_t>(m) * k * n;
  return c;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& x, const IndexSet& idx) {
  check_domain(idx, x.rows(), "gather_rows");
  BasicMatrix<T> out(idx.size(), x.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    auto src = x.row(idx[j]);
    std::copy(src.begin(), src.end(), out.row(j).begin());
  }
  return out;
}

template <typename T>
BasicMatrix<T> gather_cols(const BasicMatrix<T>& w, const IndexSet& idx) {
  check_domain(idx, w.cols(), "gather_cols");
  BasicMatrix<T> out(w.rows(), idx.size());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = w(i, idx[j]);
  return out;
}

template <typename T>
void scatter_cols_add(BasicMatrix<T>& w, const IndexSet& idx, const BasicMatrix<T>& delta,
                      T coeff) {
  if (idx.domain() != w.cols() || delta.cols() != idx.size() || delta.rows() != w.rows()) {
    throw ShapeError("scatter_cols_add: target " + shape_string(w) + ", delta " +
                     shape_string(delta) + ", " + std::to_string(idx.size()) +
                     " indices over domain " + std::to_string(idx.domain()));
  }
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) w(i, idx[j]) += coeff * delta(i, j);
}

#define PACA_INSTANTIATE(T)                                                            \
  template BasicMatrix<T> matmul(const BasicMatrix<T>&, const BasicMatrix<T>&);        \
  template BasicMatrix<T> transpose(const BasicMatrix<T>&);                            \
  template BasicMatrix<T> gather_rows(const BasicMatrix<T>&, const IndexSet&);         \
  template BasicMatrix<T> gather_cols(const BasicMatrix<T>&, const IndexSet&);         \
  template void scatter_cols_add(BasicMatrix<T>&, const IndexSet&, const BasicMatrix<T>&, \
                                 T);

PACA_INSTANTIATE(float)
PACA_INSTANTIATE(double)

#undef PACA_INSTANTIATE

}  // namespace paca
