// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/selection.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "paca/rng.hpp"

namespace paca {
namespace {

void check_rank(std::size_t r, std::size_t domain) {
  if (r < 1 || r > domain) {
    throw ArgumentError("rank " + std::to_string(r) + " outside [1, " + std::to_string(domain) +
                        "]");
  }
}

IndexSet top_r(std::span<const double> scores, std::size_t r) {
  check_rank(r, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(r);
  std::sort(order.begin(), order.end());
  return IndexSet(std::move(order), scores.size());
}

}  // namespace

std::string_view to_string(SelectionStrategy s) noexcept {
  switch (s) {
    case SelectionStrategy::random: return "random";
    case SelectionStrategy::weight_norm: return "weight_norm";
    case SelectionStrategy::gradient: return "gradient";
  }
  return "unknown";
}

SelectionStrategy parse_selection_strategy(std::string_view name) {
  if (name == "random") return SelectionStrategy::random;
  if (name == "weight_norm") return SelectionStrategy::weight_norm;
  if (name == "gradient") return SelectionStrategy::gradient;
  throw ArgumentError("unknown selection strategy '" + std::string(name) + "'");
}

IndexSet select_random(std::size_t d_in, std::size_t r, std::uint64_t seed) {
  check_rank(r, d_in);
  std::vector<std::size_t> pool(d_in);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t j = 0; j < r; ++j) {
    const std::size_t k = j + static_cast<std::size_t>(rng.below(d_in - j));
    std::swap(pool[j], pool[k]);
  }
  pool.resize(r);
  std::sort(pool.begin(), pool.end());
  return IndexSet(std::move(pool), d_in);
}

template <typename T>
IndexSet select_by_weight_norm(const BasicMatrix<T>& w, std::size_t r) {
  std::vector<double> norms(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double v = static_cast<double>(w(i, j));
      norms[j] += v * v;
    }
  // Ranking by squared norm is the same as ranking by norm.
  return top_r(norms, r);
}

template <typename T>
GradStats accumulate_grad_stats(GradStats stats, const BasicMatrix<T>& g_w) {
  if (g_w.cols() != stats.column_sq_norms.size()) {
    throw ShapeError("gradient has " + std::to_string(g_w.cols()) + " columns, stats track " +
                     std::to_string(stats.column_sq_norms.size()));
  }
  for (std::size_t i = 0; i < g_w.rows(); ++i)
    for (std::size_t j = 0; j < g_w.cols(); ++j) {
      const double v = static_cast<double>(g_w(i, j));
      stats.column_sq_norms[j] += v * v;
    }
  ++stats.steps_accumulated;
  return stats;
}

IndexSet select_by_grad(const GradStats& stats, std::size_t r) {
  if (stats.steps_accumulated == 0) {
    throw StateError("gradient statistics have no accumulated steps");
  }
  return top_r(stats.column_sq_norms, r);
}

template IndexSet select_by_weight_norm(const BasicMatrix<float>&, std::size_t);
template IndexSet select_by_weight_norm(const BasicMatrix<double>&, std::size_t);
template GradStats accumulate_grad_stats(GradStats, const BasicMatrix<float>&);
template GradStats accumulate_grad_stats(GradStats, const BasicMatrix<double>&);

}  // namespace paca
