// Copyright 2026 The lasskit Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lasskit {

// FNV-1a 64. Content fingerprinting only, not cryptographic.
class Fnv1a {
 public:
  Fnv1a& update(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001B3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }
  uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  uint64_t state_ = 0xCBF29CE484222325ULL;
};

std::string to_hex(uint64_t v);
uint64_t hash_bytes(const void* data, size_t len);
// Throws Error(kIoError) when the file cannot be read.
uint64_t hash_file(const std::string& path);

}  // namespace lasskit
