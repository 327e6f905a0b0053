// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "paca/descent.hpp"
#include "paca/errors.hpp"
#include "paca/kernels.hpp"
#include "paca/selection.hpp"

using namespace paca;
using paca::testing::random_matrix;

namespace {

double dense_lambda_max(const Matrix& x) {
  Eigen::MatrixXd m(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) m(i, j) = x(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m * m.transpose());
  return es.eigenvalues().maxCoeff();
}

}  // namespace

TEST_CASE("lipschitz constant of the quadratic") {
  CHECK(lipschitz_of_quadratic(Matrix::identity(2)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lipschitz_of_quadratic(Matrix::from_rows({{2, 0}, {0, 0}})) ==
        doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(lipschitz_of_quadratic(Matrix(3, 4)), ArgumentError);
  Rng rng(101);
  for (int c = 0; c < 10; ++c) {
    const Matrix x = random_matrix(5, 20, rng);
    const double oracle = dense_lambda_max(x);
    CHECK(std::abs(lipschitz_of_quadratic(x) - oracle) <= 1e-8 * oracle);
  }
}

TEST_CASE("quadratic gradient matches central differences") {
  auto prob = QuadraticProblem::random(4, 3, 6, 5);
  Rng rng(2);
  const Matrix w = random_matrix(3, 4, rng);
  auto fd = paca::testing::central_difference(w, [&](const Matrix& ww) { return prob.loss(ww); });
  CHECK(paca::testing::max_abs_diff(prob.gradient(w), fd) <= 1e-6);
}

TEST_CASE("descent inequality on a random problem") {
  auto prob = QuadraticProblem::random(8, 8, 8, 1);
  Rng rng(4);
  const auto steps = descent_check(prob, random_matrix(8, 8, rng), select_random(8, 4, 9),
                                   1.0 / prob.lipschitz, 1000);
  REQUIRE(steps.size() == 1000);
  for (const auto& s : steps) {
    CHECK(s.holds);
    CHECK(s.loss_next <= s.loss + kDescentSlack * std::abs(s.loss));
  }
}

TEST_CASE("descent on an interpolating problem until the rounding floor") {
  // Two samples and six trainable columns: the loss converges to zero and
  // eventually reaches the double-precision floor.
  auto prob = QuadraticProblem::random(8, 14, 2, 12);
  Rng rng(3);
  const auto steps = descent_check(prob, random_matrix(14, 8, rng), IndexSet({0, 1, 2, 3, 4, 5}, 8),
                                   1.0 / prob.lipschitz, 1000);
  const double f0 = steps.front().loss;
  std::size_t above_floor = 0;
  for (const auto& s : steps) {
    if (s.loss < 1e-20 * f0) break;
    ++above_floor;
    CHECK(s.holds);
  }
  CHECK(above_floor >= 10);
  CHECK(steps.back().loss_next < 1e-20 * f0);
}

TEST_CASE("descent with the full index set") {
  auto prob = QuadraticProblem::random(6, 3, 10, 2);
  Rng rng(5);
  const auto steps =
      descent_check(prob, random_matrix(3, 6, rng), IndexSet::full(6), 1.5 / prob.lipschitz, 300);
  for (const auto& s : steps) CHECK(s.holds);
}

TEST_CASE("descent at a restricted optimum") {
  // Targets equal W0 X, so the restricted gradient vanishes.
  Rng rng(6);
  const Matrix x = random_matrix(4, 9, rng);
  const Matrix w0 = random_matrix(2, 4, rng);
  QuadraticProblem prob(x, matmul(w0, x));
  const auto steps = descent_check(prob, w0, IndexSet({1, 3}, 4), 1.0 / prob.lipschitz, 5);
  for (const auto& s : steps) {
    CHECK(s.grad_p_sq == 0.0);
    CHECK(s.holds);
    CHECK(std::abs(s.loss_next - s.bound) <= kDescentSlack * std::abs(s.loss) + 1e-300);
  }
}

TEST_CASE("step size must lie inside the stable range") {
  auto prob = QuadraticProblem::random(4, 2, 5, 3);
  const Matrix w(2, 4);
  CHECK_THROWS_AS(descent_check(prob, w, IndexSet::full(4), 0.0, 1), ArgumentError);
  CHECK_THROWS_AS(descent_check(prob, w, IndexSet::full(4), 2.0 / prob.lipschitz, 1),
                  ArgumentError);
  CHECK_THROWS_AS(descent_check(prob, w, IndexSet::full(4), -1.0, 1), ArgumentError);
  CHECK_THROWS_AS(QuadraticProblem(Matrix(3, 4), Matrix(2, 5)), ShapeError);
}
