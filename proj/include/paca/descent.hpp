// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "paca/matrix.hpp"

namespace paca {

/// Largest eigenvalue of x * x^T by power iteration, run until the Rayleigh
/// quotient changes by at most 1e-14 relative. This is the Lipschitz constant
/// of the gradient of 1/2 ||W x - y||_F^2 with respect to W.
double lipschitz_of_quadratic(const Matrix& x);

/// f(W) = 1/2 ||W x - y||_F^2 with fixed data.
struct QuadraticProblem {
  Matrix x;  // d_in x n
  Matrix y;  // d_out x n
  double lipschitz = 0.0;

  QuadraticProblem(Matrix data, Matrix targets);

  /// Gaussian data and targets of the given sizes.
  static QuadraticProblem random(std::size_t d_in, std::size_t d_out, std::size_t n,
                                 std::uint64_t seed);

  double loss(const Matrix& w) const;
  Matrix gradient(const Matrix& w) const;  // (W x - y) x^T
};

struct DescentStep {
  std::size_t step = 0;
  double loss = 0.0;         // f(W^k)
  double loss_next = 0.0;    // f(W^{k+1})
  double grad_p_sq = 0.0;    // ||grad P^k||_F^2
  double bound = 0.0;        // f(W^k) - eta (1 - eta L / 2) ||grad P^k||^2
  bool holds = false;        // loss_next <= bound + kDescentSlack * |loss|
};

inline constexpr double kDescentSlack = 1e-9;

/// Partial-column gradient descent from `w0` with step `eta`, checking the
/// per-step descent bound. eta must lie in (0, 2/L).
std::vector<DescentStep> descent_check(const QuadraticProblem& problem, Matrix w0,
                                       const IndexSet& idx, double eta, std::size_t steps);

}  // namespace paca
