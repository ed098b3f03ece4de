#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cdfest {

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ull;
    }
  }
  void update_u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      state_ ^= (v >> (8 * k)) & 0xffu;
      state_ *= 0x100000001b3ull;
    }
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string to_hex(std::uint64_t v);

}  // namespace cdfest
