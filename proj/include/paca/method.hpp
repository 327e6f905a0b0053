// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace paca {

/// Training regime of a linear layer.
enum class Method { full, lora, paca, qpaca };

std::string_view to_string(Method m) noexcept;

/// Parses "full", "lora", "paca" or "qpaca"; throws ArgumentError otherwise.
Method parse_method(std::string_view name);

}  // namespace paca
