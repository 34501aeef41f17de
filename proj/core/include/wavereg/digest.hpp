#ifndef WAVEREG_DIGEST_HPP
#define WAVEREG_DIGEST_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace wavereg {

/// FNV-1a 64-bit hash as a 16-char lowercase hex string.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace wavereg

#endif  // WAVEREG_DIGEST_HPP
