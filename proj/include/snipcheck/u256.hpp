#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace snipcheck {

// 256-bit EVM word. Unsigned fixed-width cpp_int wraps modulo 2^256, which is
// exactly the EVM's arithmetic.
using u256 = boost::multiprecision::uint256_t;
using u512 = boost::multiprecision::uint512_t;
using Bytes = std::vector<uint8_t>;

inline bool u256_msb(const u256& v) { return boost::multiprecision::bit_test(v, 255); }

// Signed views for SDIV/SMOD/SLT/SGT/SAR. Negative values are represented by
// their two's complement magnitude.
inline u256 u256_neg(const u256& v) { return (~v) + 1; }

inline u256 evm_div(const u256& a, const u256& b) { return b == 0 ? u256(0) : u256(a / b); }
inline u256 evm_mod(const u256& a, const u256& b) { return b == 0 ? u256(0) : u256(a % b); }

inline u256 evm_sdiv(const u256& a, const u256& b) {
  if (b == 0) return 0;
  bool na = u256_msb(a), nb = u256_msb(b);
  u256 ma = na ? u256_neg(a) : a;
  u256 mb = nb ? u256_neg(b) : b;
  u256 q = ma / mb;
  return (na != nb) ? u256_neg(q) : q;
}

inline u256 evm_smod(const u256& a, const u256& b) {
  if (b == 0) return 0;
  bool na = u256_msb(a);
  u256 ma = na ? u256_neg(a) : a;
  u256 mb = u256_msb(b) ? u256_neg(b) : b;
  u256 r = ma % mb;
  return na ? u256_neg(r) : r;
}

inline u256 evm_addmod(const u256& a, const u256& b, const u256& n) {
  if (n == 0) return 0;
  return u256((u512(a) + u512(b)) % n);
}

inline u256 evm_mulmod(const u256& a, const u256& b, const u256& n) {
  if (n == 0) return 0;
  return u256((u512(a) * u512(b)) % n);
}

inline u256 evm_exp(u256 base, u256 exp) {
  u256 r = 1;
  while (exp != 0) {
    if (boost::multiprecision::bit_test(exp, 0)) r *= base;
    base *= base;
    exp >>= 1;
  }
  return r;
}

inline u256 evm_signextend(const u256& index, const u256& value) {
  if (index >= 31) return value;
  unsigned bit = static_cast<unsigned>(index) * 8 + 7;
  if (!boost::multiprecision::bit_test(value, bit)) {
    // clear everything above bit
    u256 mask = (u256(1) << (bit + 1)) - 1;
    return value & mask;
  }
  u256 mask = (u256(1) << (bit + 1)) - 1;
  return value | ~mask;
}

inline u256 evm_byte(const u256& index, const u256& value) {
  if (index >= 32) return 0;
  unsigned shift = (31 - static_cast<unsigned>(index)) * 8;
  return (value >> shift) & 0xff;
}

inline u256 evm_shl(const u256& shift, const u256& value) {
  return shift >= 256 ? u256(0) : u256(value << static_cast<unsigned>(shift));
}

inline u256 evm_shr(const u256& shift, const u256& value) {
  return shift >= 256 ? u256(0) : u256(value >> static_cast<unsigned>(shift));
}

inline u256 evm_sar(const u256& shift, const u256& value) {
  bool neg = u256_msb(value);
  if (shift >= 256) return neg ? ~u256(0) : u256(0);
  unsigned s = static_cast<unsigned>(shift);
  u256 r = value >> s;
  if (neg && s > 0) r |= ~((~u256(0)) >> s);
  return r;
}

inline bool evm_slt(const u256& a, const u256& b) {
  bool na = u256_msb(a), nb = u256_msb(b);
  if (na != nb) return na;
  return a < b;
}

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

// Parses a hex string (optionally 0x-prefixed) into bytes. Returns nullopt on
// a non-hex character or odd length.
inline std::optional<Bytes> parse_hex(std::string_view hex) {
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]), lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<uint8_t>(hi * 16 + lo));
  }
  return out;
}

inline std::string to_hex(const Bytes& bytes, bool prefix = false) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  if (prefix) out += "0x";
  out.reserve(out.size() + bytes.size() * 2);
  for (uint8_t b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xf];
  }
  return out;
}

// Fixed-width 64-nibble hex, for SMT bitvector literals.
inline std::string u256_hex64(const u256& v) {
  static const char* digits = "0123456789abcdef";
  std::string out(64, '0');
  u256 x = v;
  for (int i = 63; i >= 0 && x != 0; --i) {
    out[i] = digits[static_cast<unsigned>(x & 0xf)];
    x >>= 4;
  }
  return out;
}

inline u256 u256_from_hex(std::string_view hex) {
  if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
  u256 v = 0;
  for (char c : hex) {
    int n = hex_nibble(c);
    if (n < 0) throw std::invalid_argument("bad hex digit in u256 literal");
    v = (v << 4) | n;
  }
  return v;
}

inline u256 u256_from_be(const uint8_t* data, size_t len) {
  u256 v = 0;
  for (size_t i = 0; i < len; i++) v = (v << 8) | data[i];
  return v;
}

inline void u256_to_be32(const u256& v, uint8_t out[32]) {
  u256 x = v;
  for (int i = 31; i >= 0; --i) {
    out[i] = static_cast<uint8_t>(x & 0xff);
    x >>= 8;
  }
}

}  // namespace snipcheck
