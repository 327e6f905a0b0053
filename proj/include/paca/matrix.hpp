// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "paca/errors.hpp"

namespace paca {

/// Dense row-major matrix. Batches are stored as extra columns, so a layer
/// input of width d_in and batch n is a d_in x n matrix.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;

  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  /// Builds a matrix from nested row lists; all rows must have equal length.
  static BasicMatrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged row list");
      data.insert(data.end(), row.begin(), row.end());
    }
    return BasicMatrix(r, c, std::move(data));
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Payload size in bytes.
  std::size_t bytes() const noexcept { return data_.size() * sizeof(T); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using MatrixF = BasicMatrix<float>;

template <typename T>
bool all_finite(const BasicMatrix<T>& m) {
  return std::all_of(m.data().begin(), m.data().end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
std::string shape_string(const BasicMatrix<T>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// Sorted, duplicate-free set of column positions into a domain of size
/// `domain`. Holds at least one index.
class IndexSet {
 public:
  IndexSet(std::vector<std::size_t> indices, std::size_t domain);

  /// {0, 1, ..., domain - 1}.
  static IndexSet full(std::size_t domain);

  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t domain() const noexcept { return domain_; }
  std::size_t operator[](std::size_t j) const noexcept { return indices_[j]; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  bool contains(std::size_t i) const;
  bool is_full() const noexcept { return indices_.size() == domain_; }

  /// Positions of the domain not in the set, ascending. May be empty.
  std::vector<std::size_t> complement() const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t domain_ = 0;
};

}  // namespace paca
