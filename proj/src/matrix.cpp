// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/matrix.hpp"

#include <algorithm>
#include <numeric>

namespace paca {

IndexSet::IndexSet(std::vector<std::size_t> indices, std::size_t domain)
    : indices_(std::move(indices)), domain_(domain) {
  if (indices_.empty()) throw ArgumentError("index set must hold at least one index");
  for (std::size_t j = 0; j < indices_.size(); ++j) {
    if (indices_[j] >= domain_) {
      throw IndexError("index " + std::to_string(indices_[j]) + " out of range for domain " +
                       std::to_string(domain_));
    }
    if (j > 0 && indices_[j] <= indices_[j - 1]) {
      throw ArgumentError("index set must be strictly increasing");
    }
  }
}

IndexSet IndexSet::full(std::size_t domain) {
  std::vector<std::size_t> all(domain);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return IndexSet(std::move(all), domain);
}

bool IndexSet::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

std::vector<std::size_t> IndexSet::complement() const {
  std::vector<std::size_t> out;
  out.reserve(domain_ - indices_.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < domain_; ++i) {
    if (j < indices_.size() && indices_[j] == i) {
      ++j;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace paca
