#include "snipcheck/keccak.hpp"
#include "snipcheck/u256.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace snipcheck;

TEST_CASE("u256 arithmetic wraps modulo 2^256") {
  u256 max = ~u256(0);
  CHECK(u256(max + 1) == 0);
  CHECK(u256(u256(0) - 1) == max);
  CHECK(u256(max * 2) == max - 1);
}

TEST_CASE("division and modulo by zero yield zero") {
  CHECK(evm_div(5, 0) == 0);
  CHECK(evm_mod(5, 0) == 0);
  CHECK(evm_sdiv(u256_neg(5), 0) == 0);
  CHECK(evm_smod(u256_neg(5), 0) == 0);
}

TEST_CASE("signed division truncates toward zero") {
  CHECK(evm_sdiv(u256_neg(7), 2) == u256_neg(3));
  CHECK(evm_sdiv(7, u256_neg(2)) == u256_neg(3));
  CHECK(evm_sdiv(u256_neg(7), u256_neg(2)) == 3);
  CHECK(evm_smod(u256_neg(7), 3) == u256_neg(1));
  CHECK(evm_smod(7, u256_neg(3)) == 1);
}

TEST_CASE("signed comparison respects the sign bit") {
  CHECK(evm_slt(u256_neg(1), 0));
  CHECK_FALSE(evm_slt(0, u256_neg(1)));
  CHECK(evm_slt(u256_neg(5), u256_neg(3)));
  CHECK(evm_slt(3, 5));
}

TEST_CASE("signextend") {
  CHECK(evm_signextend(0, 0x80) == u256_neg(0x80));
  CHECK(evm_signextend(0, 0x7f) == 0x7f);
  CHECK(evm_signextend(1, 0x8000) == u256_neg(0x8000));
  CHECK(evm_signextend(31, 42) == 42);
}

TEST_CASE("byte extraction is big-endian") {
  u256 v = u256_from_hex("0x0102030000000000000000000000000000000000000000000000000000000000");
  CHECK(evm_byte(0, v) == 1);
  CHECK(evm_byte(1, v) == 2);
  CHECK(evm_byte(2, v) == 3);
  CHECK(evm_byte(31, v) == 0);
  CHECK(evm_byte(32, v) == 0);
}

TEST_CASE("shifts saturate past 255") {
  CHECK(evm_shl(1, 1) == 2);
  CHECK(evm_shr(1, 2) == 1);
  CHECK(evm_shl(256, 1) == 0);
  CHECK(evm_shr(256, ~u256(0)) == 0);
  CHECK(evm_sar(256, u256_neg(1)) == ~u256(0));
  CHECK(evm_sar(1, u256_neg(4)) == u256_neg(2));
}

TEST_CASE("exp and mulmod use full-width intermediates") {
  CHECK(evm_exp(2, 10) == 1024);
  CHECK(evm_exp(10, 0) == 1);
  u256 max = ~u256(0);
  CHECK(evm_mulmod(max, max, 12) == 9);  // (2^256-1)^2 mod 12
  CHECK(evm_addmod(max, 2, 2) == 1);
}

TEST_CASE("hex helpers round-trip") {
  auto bytes = parse_hex("0x6001600101");
  REQUIRE(bytes.has_value());
  CHECK(bytes->size() == 5);
  CHECK(to_hex(*bytes) == "6001600101");
  CHECK_FALSE(parse_hex("0x123").has_value());
  CHECK_FALSE(parse_hex("zz").has_value());
  CHECK(u256_hex64(255).substr(62) == "ff");
}

TEST_CASE("keccak256 known vectors") {
  auto he = keccak256(Bytes{});
  CHECK(to_hex(Bytes(he.begin(), he.end())) ==
        "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470");
  auto ha = keccak256(Bytes{'a', 'b', 'c'});
  CHECK(to_hex(Bytes(ha.begin(), ha.end())) ==
        "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45");
  std::string sig = "transfer(address,uint256)";
  auto h = keccak256(reinterpret_cast<const uint8_t*>(sig.data()), sig.size());
  CHECK(to_hex(Bytes(h.begin(), h.begin() + 4)) == "a9059cbb");
}

TEST_CASE("keccak256 handles multi-block input") {
  Bytes big(200, 0x61);  // spans the 136-byte rate boundary
  auto h = keccak256(big);
  // self-consistency plus length change sensitivity
  Bytes big2(201, 0x61);
  CHECK(to_hex(Bytes(h.begin(), h.end())) !=
        to_hex(Bytes(keccak256(big2).begin(), keccak256(big2).end())));
  CHECK(keccak256_word(big) == keccak256_word(big));
}
