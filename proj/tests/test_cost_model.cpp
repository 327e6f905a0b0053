// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "oracles.hpp"
#include "paca/cost_model.hpp"
#include "paca/errors.hpp"
#include "paca/kernels.hpp"
#include "paca/layers.hpp"
#include "paca/selection.hpp"

using namespace paca;
using paca::testing::random_matrix;

namespace {

struct Measured {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
};

// Runs one forward/backward of a layer under the matmul counter.
Measured instrumented(std::size_t d_in, std::size_t d_out, std::size_t n, Method method,
                      std::size_t r) {
  Rng rng(77);
  const LinearParams<double> base{random_matrix(d_out, d_in, rng)};
  const Matrix x = random_matrix(d_in, n, rng);
  const Matrix g = random_matrix(d_out, n, rng);
  Measured out;
  if (method == Method::full) {
    MatmulCounter fc;
    auto f = linear_forward(base, x, true);
    out.forward = fc.flops();
    MatmulCounter bc;
    linear_backward(base, g, f.cache);
    out.backward = bc.flops();
  } else if (method == Method::lora) {
    auto lp = LoRAParams<double>::init(d_in, d_out, r, 16.0, rng);
    MatmulCounter fc;
    auto f = lora_forward(base, lp, x, true);
    out.forward = fc.flops();
    MatmulCounter bc;
    lora_backward(base, lp, g, f.cache);
    out.backward = bc.flops();
  } else {
    const PaCAParams<double> pp(base.w, select_random(d_in, r, 1));
    MatmulCounter fc;
    auto f = paca_forward(pp, x, true);
    out.forward = fc.flops();
    MatmulCounter bc;
    paca_backward(pp, g, f.cache);
    out.backward = bc.flops();
  }
  return out;
}

}  // namespace

TEST_CASE("full fine-tuning costs three forwards") {
  const auto f = flop_linear(64, 32, 5, Method::full, 0);
  CHECK(f.forward == 2 * 64 * 32 * 5);
  CHECK(f.backward() == 2 * f.forward);
  CHECK(f.total() == 3 * f.forward);
}

TEST_CASE("paca at full rank has the full backward") {
  CHECK(flop_linear(48, 16, 4, Method::paca, 48) == flop_linear(48, 16, 4, Method::full, 0));
  CHECK_THROWS_AS(flop_linear(48, 16, 4, Method::paca, 49), ArgumentError);
  CHECK_THROWS_AS(flop_linear(48, 16, 4, Method::lora, 0), ArgumentError);
}

TEST_CASE("lora saves about a third of the operations at small rank") {
  for (auto [di, dout] : {std::pair<std::size_t, std::size_t>{4096, 4096}, {4096, 14336}}) {
    const double full = static_cast<double>(flop_linear(di, dout, 512, Method::full, 0).total());
    const double lora = static_cast<double>(flop_linear(di, dout, 512, Method::lora, 8).total());
    CHECK(1.0 - lora / full == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  }
  const auto paca = flop_linear(4096, 4096, 512, Method::paca, 8);
  CHECK(paca.backward_weight == 2ull * 4096 * 8 * 512);
}

TEST_CASE("flop model matches instrumented multiply counts") {
  for (Method m : {Method::full, Method::lora, Method::paca}) {
    const auto model = flop_linear(96, 40, 7, m, 6);
    const auto seen = instrumented(96, 40, 7, m, 6);
    CHECK(seen.forward == model.forward);
    CHECK(seen.backward == model.backward());
  }
}

TEST_CASE("memory report follows the cache byte law") {
  ExperimentConfig full;
  full.method = Method::full;
  full.model.layers = {{256, 256}, {256, 256}, {256, 256}};
  full.batch_size = 8;
  full.rank = 16;
  ExperimentConfig lora = full;
  lora.method = Method::lora;
  ExperimentConfig paca = full;
  paca.method = Method::paca;
  const auto mf = memory_report(full.model, full);
  const auto ml = memory_report(lora.model, lora);
  const auto mp = memory_report(paca.model, paca);
  CHECK(mf.activations == 3 * 256 * 8 * 8);
  CHECK(ml.activations == 3 * (256 + 16) * 8 * 8);
  CHECK(mp.activations == 3 * 16 * 8 * 8);
  CHECK(mp.activations * 256 == mf.activations * 16);
  CHECK(ml.activations * 256 == mf.activations * (256 + 16));
  CHECK(mp.optim_state * 256 == mf.optim_state * 16);
  CHECK(mf.weights == 3 * 256 * 256 * 8);
  CHECK(ml.grads == 3 * 16 * 512 * 8);
  CHECK(mf.total() == mf.weights + mf.grads + mf.optim_state + mf.activations);

  ExperimentConfig q = paca;
  q.method = Method::qpaca;
  CHECK(memory_report(q.model, q).weights == 3 * qpaca_weight_bytes(256, 256, 16, 64, 8));
}

TEST_CASE("model step flops scale with gradient accumulation") {
  ExperimentConfig cfg;
  cfg.method = Method::paca;
  const auto one = model_step_flops(cfg);
  cfg.optimizer.grad_accum = 3;
  const auto three = model_step_flops(cfg);
  CHECK(three.total() == 3 * one.total());
}
