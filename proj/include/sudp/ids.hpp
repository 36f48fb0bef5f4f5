#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>

#include "sudp/bytes.hpp"
#include "sudp/errors.hpp"

namespace sudp {

/// 16-byte opaque credential identifier.
struct CredentialId {
  std::array<std::uint8_t, 16> bytes{};

  BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
  auto operator<=>(const CredentialId&) const = default;

  static CredentialId from(BytesView v) {
    if (v.size() != 16) fail(Err::invalid_length, "credential id must be 16 bytes");
    CredentialId id;
    std::memcpy(id.bytes.data(), v.data(), 16);
    return id;
  }
};

}  // namespace sudp
