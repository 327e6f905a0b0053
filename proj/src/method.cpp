// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/method.hpp"

#include <string>

#include "paca/errors.hpp"

namespace paca {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::full: return "full";
    case Method::lora: return "lora";
    case Method::paca: return "paca";
    case Method::qpaca: return "qpaca";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "full") return Method::full;
  if (name == "lora") return Method::lora;
  if (name == "paca") return Method::paca;
  if (name == "qpaca") return Method::qpaca;
  throw ArgumentError("unknown method '" + std::string(name) + "'");
}

}  // namespace paca
