// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/descent.hpp"

#include <cmath>
#include <string>

#include "paca/kernels.hpp"
#include "paca/rng.hpp"

namespace paca {
namespace {

double frobenius_sq(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return s;
}

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

double lipschitz_of_quadratic(const Matrix& x) {
  if (frobenius_sq(x) == 0.0) throw ArgumentError("data matrix is zero");
  const Matrix gram = matmul(x, transpose(x));
  const std::size_t d = gram.rows();

  Rng rng(0x1195);
  Matrix v(d, 1);
  for (double& e : v.data()) e = 1.0 + 0.1 * rng.normal();

  double lambda = 0.0;
  constexpr std::size_t kMaxIter = 1'000'000;
  for (std::size_t it = 0; it < kMaxIter; ++it) {
    const double norm = std::sqrt(frobenius_sq(v));
    for (double& e : v.data()) e /= norm;
    Matrix mv = matmul(gram, v);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < d; ++i) rayleigh += v(i, 0) * mv(i, 0);
    if (it > 0 && std::abs(rayleigh - lambda) <= 1e-14 * std::abs(rayleigh)) {
      return rayleigh;
    }
    lambda = rayleigh;
    v = std::move(mv);
    if (frobenius_sq(v) == 0.0) {
      throw ArgumentError("power iteration collapsed; start vector orthogonal to data");
    }
  }
  return lambda;
}

QuadraticProblem::QuadraticProblem(Matrix data, Matrix targets)
    : x(std::move(data)), y(std::move(targets)) {
  if (x.cols() != y.cols()) {
    throw ShapeError("data has " + std::to_string(x.cols()) + " samples, targets " +
                     std::to_string(y.cols()));
  }
  lipschitz = lipschitz_of_quadratic(x);
}

QuadraticProblem QuadraticProblem::random(std::size_t d_in, std::size_t d_out, std::size_t n,
                                          std::uint64_t seed) {
  Rng rng(seed);
  Matrix data = gaussian(d_in, n, rng);
  Matrix targets = gaussian(d_out, n, rng);
  return QuadraticProblem(std::move(data), std::move(targets));
}

double QuadraticProblem::loss(const Matrix& w) const {
  Matrix r = matmul(w, x);
  auto rd = r.data();
  auto yd = y.data();
  double s = 0.0;
  for (std::size_t i = 0; i < rd.size(); ++i) {
    const double e = rd[i] - yd[i];
    s += e * e;
  }
  return 0.5 * s;
}

Matrix QuadraticProblem::gradient(const Matrix& w) const {
  Matrix r = matmul(w, x);
  auto rd = r.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < rd.size(); ++i) rd[i] -= yd[i];
  return matmul(r, transpose(x));
}

std::vector<DescentStep> descent_check(const QuadraticProblem& problem, Matrix w0,
                                       const IndexSet& idx, double eta, std::size_t steps) {
  const double L = problem.lipschitz;
  if (!(eta > 0.0 && eta < 2.0 / L)) {
    throw ArgumentError("step size " + std::to_string(eta) + " outside (0, 2/L) with L = " +
                        std::to_string(L));
  }
  if (w0.rows() != problem.y.rows() || w0.cols() != problem.x.rows()) {
    throw ShapeError("initial weight " + shape_string(w0) + " does not fit the problem");
  }
  std::vector<DescentStep> out;
  out.reserve(steps);
  Matrix w = std::move(w0);
  double f = problem.loss(w);
  for (std::size_t k = 0; k < steps; ++k) {
    const Matrix grad_p = gather_cols(problem.gradient(w), idx);
    DescentStep s;
    s.step = k;
    s.loss = f;
    s.grad_p_sq = frobenius_sq(grad_p);
    s.bound = f - eta * (1.0 - eta * L / 2.0) * s.grad_p_sq;
    scatter_cols_add(w, idx, grad_p, -eta);
    s.loss_next = problem.loss(w);
    s.holds = s.loss_next <= s.bound + kDescentSlack * std::abs(f);
    out.push_back(s);
    f = s.loss_next;
  }
  return out;
}

}  // namespace paca
