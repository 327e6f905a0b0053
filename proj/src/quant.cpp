// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/quant.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "paca/kernels.hpp"

namespace paca {
namespace {

NF4Codebook build_nf4() {
  // Quantiles at evenly spaced probabilities between `offset` and 1/2: eight
  // on the positive side, seven on the negative side, plus an exact zero.
  // offset = 1 - (1/30 + 1/32) / 2 puts the outermost levels at the centre
  // of the first and last of 15/16 equal-mass bins.
  const boost::math::normal_distribution<double> std_normal;
  const double offset = 1.0 - 0.5 * (1.0 / 30.0 + 1.0 / 32.0);
  std::array<double, 16> v{};
  std::size_t k = 0;
  for (int i = 0; i < 8; ++i) {
    const double p = offset + (0.5 - offset) * i / 8.0;
    v[k++] = boost::math::quantile(std_normal, p);
  }
  for (int i = 0; i < 7; ++i) {
    const double p = offset + (0.5 - offset) * i / 7.0;
    v[k++] = -boost::math::quantile(std_normal, p);
  }
  v[k] = 0.0;
  const double top = v[0];
  for (double& x : v) x /= top;
  std::sort(v.begin(), v.end());
  NF4Codebook cb;
  cb.levels = v;
  cb.zero_index = static_cast<std::uint8_t>(std::find(v.begin(), v.end(), 0.0) - v.begin());
  return cb;
}

void put_bytes(std::ostream& out, std::uint64_t value, int width) {
  char buf[8];
  for (int i = 0; i < width; ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(buf, width);
}

std::uint64_t get_bytes(std::istream& in, int width) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), width);
  if (in.gcount() != width) throw DecodeError("truncated QPaCA stream");
  std::uint64_t value = 0;
  for (int i = width - 1; i >= 0; --i) value = (value << 8) | buf[i];
  return value;
}

template <typename T>
void put_real(std::ostream& out, T v) {
  if constexpr (sizeof(T) == 4) {
    put_bytes(out, std::bit_cast<std::uint32_t>(v), 4);
  } else {
    put_bytes(out, std::bit_cast<std::uint64_t>(v), 8);
  }
}

template <typename T>
T get_real(std::istream& in) {
  if constexpr (sizeof(T) == 4) {
    return std::bit_cast<T>(static_cast<std::uint32_t>(get_bytes(in, 4)));
  } else {
    return std::bit_cast<T>(get_bytes(in, 8));
  }
}

// Guards header sizes against absurd allocations from corrupted input.
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

}  // namespace

double NF4Codebook::max_gap() const noexcept {
  double gap = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) gap = std::max(gap, levels[i] - levels[i - 1]);
  return gap;
}

std::uint8_t NF4Codebook::nearest(double x) const noexcept {
  std::uint8_t best = 0;
  double best_dist = std::abs(x - levels[0]);
  for (std::uint8_t i = 1; i < levels.size(); ++i) {
    const double d = std::abs(x - levels[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

const NF4Codebook& nf4_codebook() {
  static const NF4Codebook cb = build_nf4();
  return cb;
}

template <typename T>
QuantizedBlock quantize_block(std::span<const T> vals) {
  if (vals.empty()) throw ArgumentError("quantize_block: empty block");
  const NF4Codebook& cb = nf4_codebook();
  double absmax = 0.0;
  for (T v : vals) absmax = std::max(absmax, std::abs(static_cast<double>(v)));

  QuantizedBlock q;
  q.codes.assign(vals.size(), cb.zero_index);
  if (absmax == 0.0) return q;

  float scale = static_cast<float>(absmax);
  if (static_cast<double>(scale) < absmax) {
    scale = std::nextafter(scale, std::numeric_limits<float>::infinity());
  }
  q.absmax = scale;
  const double s = scale;
  for (std::size_t j = 0; j < vals.size(); ++j) {
    q.codes[j] = cb.nearest(static_cast<double>(vals[j]) / s);
  }
  return q;
}

template <typename T>
std::vector<T> dequantize_block(std::span<const std::uint8_t> codes, float absmax) {
  const NF4Codebook& cb = nf4_codebook();
  std::vector<T> out(codes.size());
  for (std::size_t j = 0; j < codes.size(); ++j) {
    if (codes[j] >= cb.levels.size()) {
      throw DecodeError("invalid NF4 code " + std::to_string(codes[j]));
    }
    out[j] = static_cast<T>(cb.levels[codes[j]] * static_cast<double>(absmax));
  }
  return out;
}

template <typename T>
QPaCAWeights<T> qpaca_pack(const BasicMatrix<T>& w, const IndexSet& idx, std::size_t block_size) {
  if (block_size == 0) throw ArgumentError("block_size must be positive");
  if (idx.domain() != w.cols()) {
    throw ShapeError("index domain " + std::to_string(idx.domain()) + " does not match " +
                     shape_string(w));
  }
  QuantizedColumns qc;
  qc.rows = w.rows();
  qc.block_size = block_size;
  qc.column_map = idx.complement();
  qc.packed.assign((qc.code_count() + 1) / 2, 0);

  std::vector<T> column(w.rows());
  std::size_t k = 0;
  for (std::size_t col : qc.column_map) {
    for (std::size_t i = 0; i < w.rows(); ++i) column[i] = w(i, col);
    for (std::size_t start = 0; start < w.rows(); start += block_size) {
      const std::size_t len = std::min(block_size, w.rows() - start);
      const auto block = quantize_block<T>(std::span<const T>(column).subspan(start, len));
      qc.scales.push_back(block.absmax);
      for (std::uint8_t c : block.codes) {
        qc.packed[k / 2] |= static_cast<std::uint8_t>(k % 2 == 0 ? c : c << 4);
        ++k;
      }
    }
  }
  return {std::move(qc), gather_cols(w, idx), idx};
}

template <typename T>
BasicMatrix<T> qpaca_materialize(const QPaCAWeights<T>& qw) {
  const QuantizedColumns& qc = qw.quantized;
  BasicMatrix<T> w(qw.rows(), qw.cols());
  const NF4Codebook& cb = nf4_codebook();
  const std::size_t per_col = qc.blocks_per_column();
  std::size_t k = 0;
  for (std::size_t c = 0; c < qc.column_map.size(); ++c) {
    const std::size_t col = qc.column_map[c];
    for (std::size_t i = 0; i < qc.rows; ++i, ++k) {
      const std::uint8_t code = qc.code(k);
      if (code >= cb.levels.size()) throw DecodeError("invalid NF4 code");
      const double scale = qc.scales[c * per_col + i / qc.block_size];
      w(i, col) = static_cast<T>(cb.levels[code] * scale);
    }
  }
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < qw.idx.size(); ++j) w(i, qw.idx[j]) = qw.selected(i, j);
  return w;
}

std::size_t qpaca_weight_bytes(std::size_t d_out, std::size_t d_in, std::size_t r,
                               std::size_t block_size, std::size_t dtype_size) noexcept {
  const std::size_t frozen = d_in - r;
  const std::size_t blocks = (d_out + block_size - 1) / block_size;
  return d_out * r * dtype_size + (d_out * frozen + 1) / 2 + frozen * blocks * sizeof(float);
}

template <typename T>
void write_qpaca(std::ostream& out, const QPaCAWeights<T>& qw) {
  const QuantizedColumns& qc = qw.quantized;
  out.write("QPCA", 4);
  put_bytes(out, 1, 4);
  put_bytes(out, kCodebookNF4, 4);
  put_bytes(out, sizeof(T), 4);
  put_bytes(out, qw.rows(), 8);
  put_bytes(out, qw.cols(), 8);
  put_bytes(out, qw.idx.size(), 8);
  put_bytes(out, qc.block_size, 8);
  for (std::size_t i : qw.idx) put_bytes(out, i, 8);
  for (float s : qc.scales) put_real(out, s);
  out.write(reinterpret_cast<const char*>(qc.packed.data()),
            static_cast<std::streamsize>(qc.packed.size()));
  for (std::size_t j = 0; j < qw.idx.size(); ++j)
    for (std::size_t i = 0; i < qw.rows(); ++i) put_real(out, qw.selected(i, j));
  if (!out) throw std::runtime_error("failed writing QPaCA stream");
}

template <typename T>
QPaCAWeights<T> read_qpaca(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "QPCA") throw DecodeError("bad QPaCA magic");
  if (get_bytes(in, 4) != 1) throw DecodeError("unsupported QPaCA version");
  if (get_bytes(in, 4) != kCodebookNF4) throw DecodeError("unsupported codebook id");
  if (get_bytes(in, 4) != sizeof(T)) throw DecodeError("dtype size mismatch");
  const std::uint64_t rows = get_bytes(in, 8);
  const std::uint64_t cols = get_bytes(in, 8);
  const std::uint64_t r = get_bytes(in, 8);
  const std::uint64_t block_size = get_bytes(in, 8);
  if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim || r == 0 || r > cols ||
      block_size == 0) {
    throw DecodeError("invalid QPaCA header");
  }
  std::vector<std::size_t> indices(r);
  for (auto& i : indices) i = get_bytes(in, 8);
  IndexSet idx = [&] {
    try {
      return IndexSet(std::move(indices), cols);
    } catch (const std::exception& e) {
      throw DecodeError(std::string("invalid index list: ") + e.what());
    }
  }();

  QuantizedColumns qc;
  qc.rows = rows;
  qc.block_size = block_size;
  qc.column_map = idx.complement();
  qc.scales.resize(qc.column_map.size() * qc.blocks_per_column());
  for (float& s : qc.scales) s = get_real<float>(in);
  qc.packed.resize((qc.code_count() + 1) / 2);
  in.read(reinterpret_cast<char*>(qc.packed.data()), static_cast<std::streamsize>(qc.packed.size()));
  if (static_cast<std::size_t>(in.gcount()) != qc.packed.size()) {
    throw DecodeError("truncated QPaCA stream");
  }
  BasicMatrix<T> selected(rows, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < rows; ++i) selected(i, j) = get_real<T>(in);
  return {std::move(qc), std::move(selected), std::move(idx)};
}

#define PACA_INSTANTIATE(T)                                                                  \
  template QuantizedBlock quantize_block(std::span<const T>);                                \
  template std::vector<T> dequantize_block(std::span<const std::uint8_t>, float);           \
  template QPaCAWeights<T> qpaca_pack(const BasicMatrix<T>&, const IndexSet&, std::size_t); \
  template BasicMatrix<T> qpaca_materialize(const QPaCAWeights<T>&);                         \
  template void write_qpaca(std::ostream&, const QPaCAWeights<T>&);                          \
  template QPaCAWeights<T> read_qpaca(std::istream&);

PACA_INSTANTIATE(float)
PACA_INSTANTIATE(double)

#undef PACA_INSTANTIATE

}  // namespace paca
