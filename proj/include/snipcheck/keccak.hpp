#pragma once

#include "snipcheck/u256.hpp"

#include <array>
#include <cstdint>
#include <cstring>

namespace snipcheck {

// Keccak-256 as used by the EVM (original padding 0x01, not NIST SHA3's 0x06).
namespace detail {

inline uint64_t rotl64(uint64_t x, unsigned n) { return (x << n) | (x >> (64 - n)); }

inline void keccak_f1600(std::array<uint64_t, 25>& s) {
  static constexpr uint64_t kRound[24] = {
      0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL, 0x8000000080008000ULL,
      0x000000000000808bULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
      0x000000000000008aULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
      0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
      0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800aULL, 0x800000008000000aULL,
      0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};
  static constexpr unsigned kRho[24] = {1,  3,  6,  10, 15, 21, 28, 36, 45, 55, 2,  14,
                                        27, 41, 56, 8,  25, 43, 62, 18, 39, 61, 20, 44};
  static constexpr unsigned kPi[24] = {10, 7,  11, 17, 18, 3,  5,  16, 8,  21, 24, 4,
                                       15, 23, 19, 13, 12, 2,  20, 14, 22, 9,  6,  1};
  for (int round = 0; round < 24; round++) {
    uint64_t c[5], d;
    for (int i = 0; i < 5; i++) c[i] = s[i] ^ s[i + 5] ^ s[i + 10] ^ s[i + 15] ^ s[i + 20];
    for (int i = 0; i < 5; i++) {
      d = c[(i + 4) % 5] ^ rotl64(c[(i + 1) % 5], 1);
      for (int j = 0; j < 25; j += 5) s[j + i] ^= d;
    }
    uint64_t last = s[1];
    for (int i = 0; i < 24; i++) {
      int j = kPi[i];
      uint64_t tmp = s[j];
      s[j] = rotl64(last, kRho[i]);
      last = tmp;
    }
    for (int j = 0; j < 25; j += 5) {
      uint64_t t[5];
      for (int i = 0; i < 5; i++) t[i] = s[j + i];
      for (int i = 0; i < 5; i++) s[j + i] = t[i] ^ ((~t[(i + 1) % 5]) & t[(i + 2) % 5]);
    }
    s[0] ^= kRound[round];
  }
}

}  // namespace detail

inline std::array<uint8_t, 32> keccak256(const uint8_t* data, size_t len) {
  constexpr size_t kRate = 136;  // 1088-bit rate for 256-bit output
  std::array<uint64_t, 25> state{};
  uint8_t block[kRate];
  while (len >= kRate) {
    for (size_t i = 0; i < kRate / 8; i++) {
      uint64_t w;
      std::memcpy(&w, data + i * 8, 8);
      state[i] ^= w;  // little-endian host assumed
    }
    detail::keccak_f1600(state);
    data += kRate;
    len -= kRate;
  }
  std::memset(block, 0, kRate);
  std::memcpy(block, data, len);
  block[len] = 0x01;
  block[kRate - 1] |= 0x80;
  for (size_t i = 0; i < kRate / 8; i++) {
    uint64_t w;
    std::memcpy(&w, block + i * 8, 8);
    state[i] ^= w;
  }
  detail::keccak_f1600(state);
  std::array<uint8_t, 32> out;
  std::memcpy(out.data(), state.data(), 32);
  return out;
}

inline std::array<uint8_t, 32> keccak256(const Bytes& data) {
  return keccak256(data.data(), data.size());
}

inline u256 keccak256_word(const Bytes& data) {
  auto h = keccak256(data);
  return u256_from_be(h.data(), 32);
}

}  // namespace snipcheck
