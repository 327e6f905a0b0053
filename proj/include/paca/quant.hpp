// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "paca/matrix.hpp"

namespace paca {

/// 4-bit NormalFloat levels: normal quantiles scaled to [-1, 1], ascending,
/// with an exact zero (7 negative levels, zero, 8 positive levels).
struct NF4Codebook {
  std::array<double, 16> levels{};
  std::uint8_t zero_index = 0;

  /// Largest distance between adjacent levels.
  double max_gap() const noexcept;
  /// Index of the nearest level; ties go to the lower index.
  std::uint8_t nearest(double x) const noexcept;
};

/// Computed once from the standard normal quantile function.
const NF4Codebook& nf4_codebook();

inline constexpr std::uint32_t kCodebookNF4 = 1;
inline constexpr std::size_t kDefaultBlockSize = 64;

struct QuantizedBlock {
  std::vector<std::uint8_t> codes;  // one code (0..15) per element
  float absmax = 0.0f;              // stored 32-bit scale
};

/// Blockwise absmax NF4 quantization. The stored scale is the float32 value
/// nearest to max|vals| rounded upward, so every scaled value lies in [-1, 1].
template <typename T>
QuantizedBlock quantize_block(std::span<const T> vals);

/// vals[j] = level[codes[j]] * absmax. Codes above 15 raise DecodeError.
template <typename T>
std::vector<T> dequantize_block(std::span<const std::uint8_t> codes, float absmax);

/// NF4 payload for the unselected columns of a weight. Each quantized column
/// is split into blocks of `block_size` consecutive rows (the last block may
/// be short). Codes are stored column after column, two per byte, the earlier
/// element in the low nibble.
struct QuantizedColumns {
  std::size_t rows = 0;
  std::size_t block_size = kDefaultBlockSize;
  std::vector<std::size_t> column_map;  // original column of each quantized column
  std::vector<float> scales;            // column-major over blocks
  std::vector<std::uint8_t> packed;

  std::size_t blocks_per_column() const noexcept {
    return rows == 0 ? 0 : (rows + block_size - 1) / block_size;
  }
  std::size_t code_count() const noexcept { return rows * column_map.size(); }
  std::uint8_t code(std::size_t k) const noexcept {
    const std::uint8_t byte = packed[k / 2];
    return (k % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
  }
  /// Bytes of codes and scales.
  std::size_t payload_bytes() const noexcept {
    return packed.size() + scales.size() * sizeof(float);
  }

  friend bool operator==(const QuantizedColumns&, const QuantizedColumns&) = default;
};

/// Selected columns kept at full precision and trainable; everything else
/// frozen in NF4.
template <typename T>
struct QPaCAWeights {
  QuantizedColumns quantized;
  BasicMatrix<T> selected;  // d_out x r
  IndexSet idx;

  std::size_t rows() const noexcept { return selected.rows(); }
  std::size_t cols() const noexcept { return idx.domain(); }
  /// Selected columns plus codes and scales.
  std::size_t weight_bytes() const noexcept { return selected.bytes() + quantized.payload_bytes(); }
};

template <typename T>
QPaCAWeights<T> qpaca_pack(const BasicMatrix<T>& w, const IndexSet& idx,
                           std::size_t block_size = kDefaultBlockSize);

/// Dequantized unselected columns with the selected columns copied verbatim.
template <typename T>
BasicMatrix<T> qpaca_materialize(const QPaCAWeights<T>& qw);

/// Closed-form weight bytes of a packed layer: d_out*r selected values of
/// `dtype_size` bytes, ceil(d_out*(d_in-r)/2) code bytes and one float32 scale
/// per block. Indices and header fields are not counted.
std::size_t qpaca_weight_bytes(std::size_t d_out, std::size_t d_in, std::size_t r,
                               std::size_t block_size, std::size_t dtype_size) noexcept;

/// Little-endian file layout:
///   magic "QPCA", u32 version (1), u32 codebook id, u32 dtype size,
///   u64 d_out, u64 d_in, u64 r, u64 block_size,
///   u64 idx[r], f32 scales[n_scales], u8 packed[ceil(d_out*(d_in-r)/2)],
///   selected columns, column after column, d_out values each.
template <typename T>
void write_qpaca(std::ostream& out, const QPaCAWeights<T>& qw);

/// Inverse of write_qpaca. Raises DecodeError on malformed input or a dtype
/// size that does not match T.
template <typename T>
QPaCAWeights<T> read_qpaca(std::istream& in);

}  // namespace paca
