// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "paca/errors.hpp"
#include "paca/hash.hpp"
#include "paca/kernels.hpp"
#include "paca/quant.hpp"

using namespace paca;
using paca::testing::random_matrix;

namespace {

// Normal quantiles at evenly spaced probabilities with offset
// 1 - (1/30 + 1/32) / 2, normalized by the largest magnitude; evaluated in
// double precision with an independent quantile implementation.
constexpr std::array<double, 16> kGoldenNF4 = {
    -1.0,
    -0.696192805632343,
    -0.5250729594465005,
    -0.3949174259199071,
    -0.28444130892108205,
    -0.1847734028004556,
    -0.09104997598578049,
    0.0,
    0.07958031495840909,
    0.1609301443802907,
    0.2461122513474594,
    0.3379151367131279,
    0.44070973186421625,
    0.5626168879699849,
    0.7229566441594734,
    1.0};

}  // namespace

TEST_CASE("nf4 codebook") {
  const auto& cb = nf4_codebook();
  CHECK(cb.levels[0] == -1.0);
  CHECK(cb.levels[15] == 1.0);
  int zeros = 0;
  for (double l : cb.levels) zeros += (l == 0.0);
  CHECK(zeros == 1);
  CHECK(cb.levels[cb.zero_index] == 0.0);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(cb.levels[i] == doctest::Approx(kGoldenNF4[i]).epsilon(1e-13));
    if (i > 0) CHECK(cb.levels[i] > cb.levels[i - 1]);
  }
  CHECK(cb.max_gap() == doctest::Approx(0.303807194367657).epsilon(1e-12));
  CHECK(cb.nearest(0.0) == cb.zero_index);
  CHECK(cb.nearest(2.0) == 15);
  CHECK(cb.nearest(-2.0) == 0);
  // Exactly halfway between level 6 and the zero level.
  CHECK(cb.nearest(0.5 * cb.levels[6]) == 6);
  CHECK(cb.nearest(0.5 * cb.levels[8]) == 7);
}

TEST_CASE("quantize_block") {
  std::vector<double> zeros(10, 0.0);
  auto q = quantize_block<double>(zeros);
  CHECK(q.absmax == 0.0f);
  for (auto c : q.codes) CHECK(c == nf4_codebook().zero_index);

  std::vector<double> vals = {0.25, -0.75, 0.5, 0.125};
  auto qv = quantize_block<double>(vals);
  auto back = dequantize_block<double>(qv.codes, qv.absmax);
  CHECK(back[1] == -0.75);

  std::vector<double> pos = {0.1, 3.0, -1.0};
  auto qp = quantize_block<double>(pos);
  CHECK(dequantize_block<double>(qp.codes, qp.absmax)[1] == 3.0);

  std::vector<double> same(7, -2.5);
  auto qs = quantize_block<double>(same);
  for (double v : dequantize_block<double>(qs.codes, qs.absmax)) CHECK(v == -2.5);

  CHECK_THROWS_AS(quantize_block<double>(std::span<const double>{}), ArgumentError);
}

TEST_CASE("quantize_block error bound on random blocks") {
  Rng rng(31);
  const double gap = nf4_codebook().max_gap();
  for (int b = 0; b < 200; ++b) {
    std::vector<double> vals(64);
    for (double& v : vals) v = rng.normal() * 0.02;
    auto q = quantize_block<double>(vals);
    double amax = 0.0;
    for (double v : vals) amax = std::max(amax, std::abs(v));
    CHECK(static_cast<double>(q.absmax) >= amax);
    CHECK(static_cast<double>(q.absmax) <= amax * (1 + 1e-6));
    auto back = dequantize_block<double>(q.codes, q.absmax);
    for (std::size_t i = 0; i < vals.size(); ++i)
      CHECK(std::abs(back[i] - vals[i]) <= static_cast<double>(q.absmax) * gap / 2);
  }
}

TEST_CASE("dequantize_block") {
  std::vector<std::uint8_t> codes = {0, 7, 15, 3};
  for (double v : dequantize_block<double>(codes, 0.0f)) CHECK(v == 0.0);
  std::vector<std::uint8_t> bad = {1, 16};
  CHECK_THROWS_AS(dequantize_block<double>(bad, 1.0f), DecodeError);

  Rng rng(7);
  for (int s = 0; s < 50; ++s) {
    const float scale = static_cast<float>(std::exp(rng.uniform(-8.0, 4.0)));
    std::vector<std::uint8_t> all(16);
    for (std::uint8_t c = 0; c < 16; ++c) all[c] = c;
    auto vals = dequantize_block<double>(all, scale);
    auto again = quantize_block<double>(vals);
    CHECK(again.codes == all);
  }
}

TEST_CASE("qpaca pack and materialize") {
  Rng rng(19);
  const Matrix w = random_matrix(70, 12, rng, 0.05);
  auto packed_full = qpaca_pack(w, IndexSet::full(12));
  CHECK(packed_full.quantized.payload_bytes() == 0);
  CHECK(paca::testing::bitwise_equal(qpaca_materialize(packed_full), w));

  const IndexSet idx({1, 5, 6}, 12);
  auto qw = qpaca_pack(w, idx, 32);
  CHECK(qw.quantized.column_map == idx.complement());
  CHECK(qw.quantized.blocks_per_column() == 3);
  CHECK(qw.quantized.scales.size() == 27);
  CHECK(qw.quantized.packed.size() == (70 * 9 + 1) / 2);
  const Matrix m = qpaca_materialize(qw);
  CHECK(paca::testing::bitwise_equal(gather_cols(m, idx), qw.selected));
  CHECK(paca::testing::bitwise_equal(qw.selected, gather_cols(w, idx)));

  const double gap = nf4_codebook().max_gap();
  for (std::size_t k = 0; k < qw.quantized.column_map.size(); ++k) {
    const std::size_t col = qw.quantized.column_map[k];
    for (std::size_t i = 0; i < 70; ++i) {
      const double absmax = qw.quantized.scales[k * 3 + i / 32];
      CHECK(std::abs(m(i, col) - w(i, col)) <= absmax * gap / 2);
    }
  }
  CHECK(qw.weight_bytes() == qpaca_weight_bytes(70, 12, 3, 32, 8));
}

TEST_CASE("qpaca weight byte model") {
  CHECK(qpaca_weight_bytes(4096, 4096, 64, 64, 8) == 11386880);
  CHECK(qpaca_weight_bytes(4096, 4096, 64, 64, 8) ==
        4096 * 64 * 8 + 4096 * 4032 / 2 + 4032 * 64 * 4);
  CHECK(qpaca_weight_bytes(3, 3, 1, 64, 4) == 3 * 4 + 3 + 2 * 4);
}

TEST_CASE("qpaca file round trip") {
  Rng rng(23);
  const Matrix w = random_matrix(33, 10, rng);
  auto qw = qpaca_pack(w, IndexSet({0, 9}, 10), 16);
  std::stringstream buf;
  write_qpaca(buf, qw);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "QPCA");
  CHECK(bytes.size() == 4 + 3 * 4 + 4 * 8 + 2 * 8 + qw.quantized.scales.size() * 4 +
                            qw.quantized.packed.size() + 33 * 2 * 8);
  std::stringstream in(bytes);
  auto back = read_qpaca<double>(in);
  CHECK(back.quantized == qw.quantized);
  CHECK(back.idx == qw.idx);
  CHECK(paca::testing::bitwise_equal(qpaca_materialize(back), qpaca_materialize(qw)));
  std::stringstream again;
  write_qpaca(again, back);
  CHECK(again.str() == bytes);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_qpaca<double>(truncated), DecodeError);
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::stringstream bad(wrong_magic);
  CHECK_THROWS_AS(read_qpaca<double>(bad), DecodeError);
  std::stringstream dtype(bytes);
  CHECK_THROWS_AS(read_qpaca<float>(dtype), DecodeError);
}

TEST_CASE("hash digests") {
  CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  CHECK(sha256_hex(std::as_bytes(std::span(abc.data(), abc.size()))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Matrix w = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const std::vector<std::size_t> cols = {0, 2};
  const auto before = columns_digest(w, std::span<const std::size_t>(cols));
  w(0, 1) = 9;
  CHECK(columns_digest(w, std::span<const std::size_t>(cols)) == before);
  w(1, 2) = 0;
  CHECK(columns_digest(w, std::span<const std::size_t>(cols)) != before);
}
