// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "paca/hash.hpp"

#include <array>
#include <memory>
#include <stdexcept>
#include <vector>

#include <openssl/evp.h>

namespace paca {
namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialisation failed");
    }
  }

  void update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(ctx_.get(), data, len) != 1) {
      throw std::runtime_error("SHA-256 update failed");
    }
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) {
      throw std::runtime_error("SHA-256 finalisation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0x0F]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::span<const std::byte> bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

template <typename T>
std::string columns_digest(const BasicMatrix<T>& w, std::span<const std::size_t> columns) {
  Sha256 h;
  std::vector<T> column(w.rows());
  for (std::size_t col : columns) {
    if (col >= w.cols()) throw IndexError("columns_digest: column out of range");
    for (std::size_t i = 0; i < w.rows(); ++i) column[i] = w(i, col);
    h.update(column.data(), column.size() * sizeof(T));
  }
  return h.hex();
}

std::string payload_digest(const QuantizedColumns& qc) {
  Sha256 h;
  h.update(qc.scales.data(), qc.scales.size() * sizeof(float));
  h.update(qc.packed.data(), qc.packed.size());
  return h.hex();
}

template std::string columns_digest(const BasicMatrix<float>&, std::span<const std::size_t>);
template std::string columns_digest(const BasicMatrix<double>&, std::span<const std::size_t>);

}  // namespace paca
