// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "paca/matrix.hpp"

namespace paca {

enum class SelectionStrategy { random, weight_norm, gradient };

std::string_view to_string(SelectionStrategy s) noexcept;
SelectionStrategy parse_selection_strategy(std::string_view name);

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::random;
  std::size_t rank = 8;
  std::uint64_t seed = 0;
  std::size_t warmup_steps = 100;  // gradient strategy only
};

/// Per-column squared gradient norms summed over warmup steps.
struct GradStats {
  std::vector<double> column_sq_norms;
  std::size_t steps_accumulated = 0;

  static GradStats zeros(std::size_t d_in) { return {std::vector<double>(d_in, 0.0), 0}; }
};

/// r distinct columns drawn uniformly without replacement (partial
/// Fisher-Yates over Rng(seed)), returned sorted.
IndexSet select_random(std::size_t d_in, std::size_t r, std::uint64_t seed);

/// The r columns of largest L2 norm; ties go to the lower index.
template <typename T>
IndexSet select_by_weight_norm(const BasicMatrix<T>& w, std::size_t r);

template <typename T>
GradStats accumulate_grad_stats(GradStats stats, const BasicMatrix<T>& g_w);

/// The r columns with the largest accumulated gradient; ties go to the lower
/// index.
IndexSet select_by_grad(const GradStats& stats, std::size_t r);

}  // namespace paca
