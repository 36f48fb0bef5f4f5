#pragma once

#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/crypto.h>

namespace sudp {

using Bytes = std::vector<std::uint8_t>;
using BytesView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline Bytes to_bytes(BytesView v) { return Bytes(v.begin(), v.end()); }

inline std::string to_string(BytesView v) {
  return std::string(v.begin(), v.end());
}

inline bool operator==(BytesView a, const Bytes& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size()) == 0;
}

/// Constant-time equality for secret-adjacent comparisons.
inline bool ct_equal(BytesView a, BytesView b) {
  if (a.size() != b.size()) return false;
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

inline void zeroize(std::uint8_t* p, std::size_t n) {
  if (n != 0) OPENSSL_cleanse(p, n);
}

inline void zeroize(Bytes& b) {
  zeroize(b.data(), b.size());
  b.clear();
}

inline std::string hex(BytesView v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(v.size() * 2);
  for (std::uint8_t b : v) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

/// First eight bytes as hex, for logs and rendering. Never leaks length info
/// beyond the stated count.
inline std::string hex8(BytesView v) {
  return hex(v.subspan(0, v.size() < 8 ? v.size() : 8));
}

inline Bytes from_hex(std::string_view s) {
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(s.size() / 2);
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    int hi = nib(s[i]), lo = nib(s[i + 1]);
    if (hi < 0 || lo < 0) break;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

inline Bytes be32(std::uint32_t v) {
  return Bytes{static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
               static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

inline Bytes be64(std::uint64_t v) {
  Bytes out(8);
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

/// Length-prefixed framing for every "a ∥ b" concatenation fed to hash or
/// KDF inputs: each component is preceded by its 4-byte big-endian length so
/// no two distinct component lists can collide.
inline Bytes frame(std::initializer_list<BytesView> parts) {
  Bytes out;
  for (BytesView p : parts) {
    Bytes len = be32(static_cast<std::uint32_t>(p.size()));
    out.insert(out.end(), len.begin(), len.end());
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

/// True if `needle` occurs as a contiguous byte substring of `hay`.
inline bool contains_bytes(BytesView hay, BytesView needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  const auto* end = hay.data() + hay.size() - needle.size() + 1;
  for (const auto* p = hay.data(); p != end; ++p) {
    if (std::memcmp(p, needle.data(), needle.size()) == 0) return true;
  }
  return false;
}

}  // namespace sudp
