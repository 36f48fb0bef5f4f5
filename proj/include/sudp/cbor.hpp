#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sudp/bytes.hpp"
#include "sudp/errors.hpp"

namespace sudp::cbor {

// Deterministic CBOR (RFC 8949 §4.2 core deterministic encoding), restricted
// to the subset the wire schemas use: unsigned integers, byte strings, text
// strings, definite-length arrays and maps. The decoder is strict: arguments
// must use the shortest form, lengths are definite, map keys must be unique
// and strictly ascending in encoded-byte order, text must be valid UTF-8.
// Ambiguity here would undermine operation binding, so both directions are
// enforced rather than left to convention.

enum class Major : std::uint8_t { uint = 0, bstr = 2, tstr = 3, array = 4, map = 5 };

inline void put_head(Bytes& out, Major major, std::uint64_t value) {
  const std::uint8_t m = static_cast<std::uint8_t>(major) << 5;
  if (value < 24) {
    out.push_back(m | static_cast<std::uint8_t>(value));
  } else if (value <= 0xff) {
    out.push_back(m | 24);
    out.push_back(static_cast<std::uint8_t>(value));
  } else if (value <= 0xffff) {
    out.push_back(m | 25);
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value));
  } else if (value <= 0xffffffff) {
    out.push_back(m | 26);
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  } else {
    out.push_back(m | 27);
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

class Writer {
 public:
  void uint(std::uint64_t v) { put_head(buf_, Major::uint, v); }

  void bstr(BytesView v) {
    put_head(buf_, Major::bstr, v.size());
    buf_.insert(buf_.end(), v.begin(), v.end());
  }

  void tstr(std::string_view s) {
    put_head(buf_, Major::tstr, s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  void array(std::size_t n) { put_head(buf_, Major::array, n); }

  /// Callers must emit exactly n key/value pairs with keys strictly
  /// ascending in encoded-byte order. The fixed integer-keyed schemas emit
  /// keys 0,1,2,... which satisfies this by construction.
  void map(std::size_t n) { put_head(buf_, Major::map, n); }

  void raw(BytesView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

  Bytes take() { return std::move(buf_); }
  const Bytes& bytes() const { return buf_; }

 private:
  Bytes buf_;
};

/// Encodes a map whose entries are supplied pre-encoded, sorting them into
/// canonical (encoded-key bytewise) order and rejecting duplicates. Used for
/// the scope map, whose keys are caller-chosen text strings.
inline void put_sorted_map(Writer& w, std::vector<std::pair<Bytes, Bytes>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].first == entries[i - 1].first) fail(Err::non_canonical, "duplicate map key");
  }
  w.map(entries.size());
  for (const auto& [k, v] : entries) {
    w.raw(k);
    w.raw(v);
  }
}

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<std::uint8_t>(s[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) { i += 1; continue; }
    else if ((c >> 5) == 0x6) { extra = 1; cp = c & 0x1f; }
    else if ((c >> 4) == 0xe) { extra = 2; cp = c & 0x0f; }
    else if ((c >> 3) == 0x1e) { extra = 3; cp = c & 0x07; }
    else return false;
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<std::uint8_t>(s[i + k]);
      if ((cc >> 6) != 0x2) return false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    // reject overlong forms and surrogates
    if (extra == 1 && cp < 0x80) return false;
    if (extra == 2 && (cp < 0x800 || (cp >= 0xd800 && cp <= 0xdfff))) return false;
    if (extra == 3 && (cp < 0x10000 || cp > 0x10ffff)) return false;
    i += extra + 1;
  }
  return true;
}

class Reader {
 public:
  explicit Reader(BytesView data) : data_(data) {}

  std::uint64_t uint() { return expect_head(Major::uint); }

  Bytes bstr() {
    const std::uint64_t n = expect_head(Major::bstr);
    return take(n);
  }

  std::string tstr() {
    const std::uint64_t n = expect_head(Major::tstr);
    Bytes raw = take(n);
    std::string s(raw.begin(), raw.end());
    if (!valid_utf8(s)) fail(Err::decode_failure, "invalid utf-8 in text string");
    return s;
  }

  std::size_t array() { return static_cast<std::size_t>(expect_head(Major::array)); }
  std::size_t map() { return static_cast<std::size_t>(expect_head(Major::map)); }

  /// Raw encoded bytes of the next complete item; used to check map-key
  /// ordering without interpreting the key.
  Bytes raw_item() {
    const std::size_t start = pos_;
    skip_item();
    return Bytes(data_.begin() + static_cast<std::ptrdiff_t>(start),
                 data_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

  bool at_end() const { return pos_ == data_.size(); }

  void expect_end() const {
    if (!at_end()) fail(Err::decode_failure, "trailing bytes");
  }

 private:
  std::uint8_t byte() {
    if (pos_ >= data_.size()) fail(Err::decode_failure, "truncated");
    return data_[pos_++];
  }

  Bytes take(std::uint64_t n) {
    if (n > data_.size() - pos_) fail(Err::decode_failure, "truncated string");
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

  std::uint64_t expect_head(Major major) {
    Major got;
    const std::uint64_t v = head(got);
    if (got != major) fail(Err::decode_failure, "unexpected item type");
    return v;
  }

  std::uint64_t head(Major& major) {
    const std::uint8_t initial = byte();
    const std::uint8_t m = initial >> 5;
    if (m != 0 && m != 2 && m != 3 && m != 4 && m != 5)
      fail(Err::decode_failure, "unsupported major type");
    major = static_cast<Major>(m);
    const std::uint8_t info = initial & 0x1f;
    std::uint64_t v;
    if (info < 24) return info;
    if (info == 24) {
      v = byte();
      if (v < 24) fail(Err::non_canonical, "non-minimal length");
    } else if (info == 25) {
      v = (static_cast<std::uint64_t>(byte()) << 8);
      v |= byte();
      if (v <= 0xff) fail(Err::non_canonical, "non-minimal length");
    } else if (info == 26) {
      v = 0;
      for (int i = 0; i < 4; ++i) v = (v << 8) | byte();
      if (v <= 0xffff) fail(Err::non_canonical, "non-minimal length");
    } else if (info == 27) {
      v = 0;
      for (int i = 0; i < 8; ++i) v = (v << 8) | byte();
      if (v <= 0xffffffff) fail(Err::non_canonical, "non-minimal length");
    } else {
      fail(Err::decode_failure, "indefinite or reserved length");
    }
    return v;
  }

  void skip_item() {
    Major major;
    const std::uint64_t v = head(major);
    switch (major) {
      case Major::uint: break;
      case Major::bstr:
      case Major::tstr: take(v); break;
      case Major::array:
        for (std::uint64_t i = 0; i < v; ++i) skip_item();
        break;
      case Major::map:
        for (std::uint64_t i = 0; i < v; ++i) { skip_item(); skip_item(); }
        break;
    }
  }

  BytesView data_;
  std::size_t pos_ = 0;
};

/// Reads a map header and returns entry count; the caller then reads each
/// expected integer key via require_key.
inline void require_key(Reader& r, std::uint64_t expected) {
  const std::uint64_t k = r.uint();
  if (k != expected) fail(Err::decode_failure, "unexpected map key");
}

}  // namespace sudp::cbor
