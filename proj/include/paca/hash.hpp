// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "paca/matrix.hpp"
#include "paca/quant.hpp"

namespace paca {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::byte> bytes);

/// SHA-256 over the raw bytes of the listed columns, column after column.
template <typename T>
std::string columns_digest(const BasicMatrix<T>& w, std::span<const std::size_t> columns);

/// SHA-256 over the scales and packed codes of a quantized payload.
std::string payload_digest(const QuantizedColumns& qc);

}  // namespace paca
