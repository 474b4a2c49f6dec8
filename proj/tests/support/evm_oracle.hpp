#pragma once

// Bounded concrete EVM interpreter used as a test oracle. Deliberately
// independent of the library's disassembler/CFG/symexec: it decodes bytes on
// the fly and implements arithmetic its own way (via wide signed integers)
// so shared bugs cannot hide.

#include "snipcheck/keccak.hpp"
#include "snipcheck/u256.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <vector>

namespace testsupport {

using snipcheck::Bytes;
using snipcheck::u256;
using i512 = boost::multiprecision::int512_t;

struct OracleEnv {
  Bytes calldata;
  u256 callvalue = 0;
  u256 caller = u256("0x1111111111111111111111111111111111111111");
  u256 origin = u256("0x1111111111111111111111111111111111111111");
  u256 self_address = u256("0xc0ffee0000000000000000000000000000000000");
  u256 timestamp = 1700000000;
  u256 number = 17000000;
  u256 coinbase = u256("0x2222222222222222222222222222222222222222");
  u256 prevrandao = u256("0x3333");
  u256 gaslimit = 30000000;
  u256 chainid = 1;
  u256 basefee = 7;
  u256 gasprice = 2;
  u256 balance = u256("1000000000000000000");
  u256 call_success = 1;  // what CALL-family ops report
  std::map<u256, u256> storage;
};

struct OracleTransfer {
  size_t from_pc;
  size_t to_pc;
};

struct OracleResult {
  enum Halt { Stop, Return, Revert, Invalid, StepLimit, StackError } halt = Stop;
  std::map<u256, u256> storage;
  std::vector<OracleTransfer> transfers;  // jumps, branch falls, fallthroughs
  std::vector<size_t> pcs;
  Bytes return_data;
  size_t steps = 0;
};

inline OracleResult oracle_run(const Bytes& code, OracleEnv env, size_t step_limit = 200000) {
  OracleResult res;
  res.storage = env.storage;
  std::vector<u256> stack;
  std::vector<uint8_t> memory;

  auto ensure_mem = [&](size_t end) {
    if (end > memory.size()) memory.resize(((end + 31) / 32) * 32, 0);
  };
  auto mload = [&](size_t off) {
    ensure_mem(off + 32);
    return snipcheck::u256_from_be(memory.data() + off, 32);
  };
  auto mstore = [&](size_t off, const u256& v) {
    ensure_mem(off + 32);
    snipcheck::u256_to_be32(v, memory.data() + off);
  };
  auto as_size = [&](const u256& v) -> size_t {
    return v > 1u << 30 ? (1u << 30) : static_cast<size_t>(v);
  };
  auto to_signed = [](const u256& v) -> i512 {
    i512 x = i512(v);
    if (boost::multiprecision::bit_test(v, 255)) x -= (i512(1) << 256);
    return x;
  };
  auto from_signed = [](i512 x) -> u256 {
    if (x < 0) x += (i512(1) << 256);
    return u256(x & ((i512(1) << 256) - 1));
  };
  auto cdword = [&](const u256& off) -> u256 {
    u256 v = 0;
    for (int i = 0; i < 32; i++) {
      uint8_t byte = 0;
      u256 idx = off + i;
      if (idx < env.calldata.size()) byte = env.calldata[static_cast<size_t>(idx)];
      v = (v << 8) | byte;
    }
    return v;
  };

  size_t pc = 0;
  auto halt = [&](OracleResult::Halt h) {
    res.halt = h;
    return res;
  };

  while (true) {
    if (res.steps++ > step_limit) return halt(OracleResult::StepLimit);
    if (pc >= code.size()) return halt(OracleResult::Stop);  // ran off the end
    uint8_t op = code[pc];
    res.pcs.push_back(pc);
    size_t width = (op >= 0x60 && op <= 0x7f) ? (op - 0x5f) : 0;
    size_t next_pc = pc + 1 + width;

    auto pop = [&]() -> u256 {
      u256 v = stack.back();
      stack.pop_back();
      return v;
    };
    auto need = [&](size_t n) { return stack.size() >= n; };

    // data-driven stack arity check
    static const int pops_table[256] = {
        /*0x00*/ 0, 2, 2, 2, 2, 2, 2, 2, 3, 3, 2, 2, 0, 0, 0, 0,
        /*0x10*/ 2, 2, 2, 2, 2, 1, 2, 2, 2, 1, 2, 2, 2, 2, 0, 0,
        /*0x20*/ 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0x30*/ 0, 1, 0, 0, 0, 1, 0, 3, 0, 3, 0, 1, 4, 0, 3, 1,
        /*0x40*/ 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0x50*/ 1, 1, 2, 2, 1, 2, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0x60..0x7f*/ 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0x80 DUPs*/ 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16,
        /*0x90 SWAPs*/ 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17,
        /*0xa0 LOGs*/ 2, 3, 4, 5, 6, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0xb0*/ 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0xc0*/ 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0xd0*/ 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0xe0*/ 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
        /*0xf0*/ 3, 7, 7, 2, 6, 4, 0, 0, 0, 0, 6, 0, 0, 2, 0, 1,
    };
    if (!need(pops_table[op])) return halt(OracleResult::StackError);

    if (op >= 0x60 && op <= 0x7f) {  // PUSH1..32
      u256 v = 0;
      for (size_t i = 0; i < width; i++) {
        uint8_t byte = pc + 1 + i < code.size() ? code[pc + 1 + i] : 0;
        v = (v << 8) | byte;
      }
      stack.push_back(v);
    } else if (op >= 0x80 && op <= 0x8f) {  // DUP
      stack.push_back(stack[stack.size() - 1 - (op - 0x80)]);
    } else if (op >= 0x90 && op <= 0x9f) {  // SWAP
      std::swap(stack[stack.size() - 1], stack[stack.size() - 2 - (op - 0x90)]);
    } else if (op >= 0xa0 && op <= 0xa4) {  // LOG
      for (int i = 0; i < op - 0xa0 + 2; i++) pop();
    } else {
      switch (op) {
        case 0x00: return halt(OracleResult::Stop);
        case 0x01: { u256 a = pop(), b = pop(); stack.push_back(a + b); break; }
        case 0x02: { u256 a = pop(), b = pop(); stack.push_back(a * b); break; }
        case 0x03: { u256 a = pop(), b = pop(); stack.push_back(a - b); break; }
        case 0x04: { u256 a = pop(), b = pop(); stack.push_back(b == 0 ? u256(0) : u256(a / b)); break; }
        case 0x05: { u256 a = pop(), b = pop();
          if (b == 0) { stack.push_back(0); break; }
          i512 q = to_signed(a) / to_signed(b);
          stack.push_back(from_signed(q)); break; }
        case 0x06: { u256 a = pop(), b = pop(); stack.push_back(b == 0 ? u256(0) : u256(a % b)); break; }
        case 0x07: { u256 a = pop(), b = pop();
          if (b == 0) { stack.push_back(0); break; }
          i512 r = to_signed(a) % to_signed(b);
          stack.push_back(from_signed(r)); break; }
        case 0x08: { u256 a = pop(), b = pop(), n = pop();
          stack.push_back(n == 0 ? u256(0)
                                 : u256((snipcheck::u512(a) + snipcheck::u512(b)) % n)); break; }
        case 0x09: { u256 a = pop(), b = pop(), n = pop();
          stack.push_back(n == 0 ? u256(0)
                                 : u256((snipcheck::u512(a) * snipcheck::u512(b)) % n)); break; }
        case 0x0a: { u256 a = pop(), e = pop(); u256 r = 1;
          while (e != 0) {
            if (boost::multiprecision::bit_test(e, 0)) r *= a;
            a *= a; e >>= 1;
          }
          stack.push_back(r); break; }
        case 0x0b: { u256 k = pop(), v = pop();
          if (k >= 31) { stack.push_back(v); break; }
          unsigned bit = static_cast<unsigned>(k) * 8 + 7;
          i512 wide = i512(v) & ((i512(1) << (bit + 1)) - 1);
          if (boost::multiprecision::bit_test(v, bit)) wide -= (i512(1) << (bit + 1));
          stack.push_back(from_signed(wide)); break; }
        case 0x10: { u256 a = pop(), b = pop(); stack.push_back(a < b ? 1 : 0); break; }
        case 0x11: { u256 a = pop(), b = pop(); stack.push_back(a > b ? 1 : 0); break; }
        case 0x12: { u256 a = pop(), b = pop(); stack.push_back(to_signed(a) < to_signed(b) ? 1 : 0); break; }
        case 0x13: { u256 a = pop(), b = pop(); stack.push_back(to_signed(a) > to_signed(b) ? 1 : 0); break; }
        case 0x14: { u256 a = pop(), b = pop(); stack.push_back(a == b ? 1 : 0); break; }
        case 0x15: { stack.push_back(pop() == 0 ? 1 : 0); break; }
        case 0x16: { u256 a = pop(), b = pop(); stack.push_back(a & b); break; }
        case 0x17: { u256 a = pop(), b = pop(); stack.push_back(a | b); break; }
        case 0x18: { u256 a = pop(), b = pop(); stack.push_back(a ^ b); break; }
        case 0x19: { stack.push_back(~pop()); break; }
        case 0x1a: { u256 i = pop(), x = pop();
          stack.push_back(i >= 32 ? u256(0) : u256((x >> ((31 - static_cast<unsigned>(i)) * 8)) & 0xff));
          break; }
        case 0x1b: { u256 s = pop(), v = pop();
          stack.push_back(s >= 256 ? u256(0) : u256(v << static_cast<unsigned>(s))); break; }
        case 0x1c: { u256 s = pop(), v = pop();
          stack.push_back(s >= 256 ? u256(0) : u256(v >> static_cast<unsigned>(s))); break; }
        case 0x1d: { u256 s = pop(), v = pop();
          i512 x = to_signed(v);
          unsigned sh = s >= 256 ? 256 : static_cast<unsigned>(s);
          stack.push_back(from_signed(x >> sh)); break; }
        case 0x20: { u256 off = pop(), len = pop();
          size_t o = as_size(off), l = as_size(len);
          ensure_mem(o + l);
          stack.push_back(snipcheck::keccak256_word(Bytes(memory.begin() + o, memory.begin() + o + l)));
          break; }
        case 0x30: stack.push_back(env.self_address); break;
        case 0x31: pop(); stack.push_back(env.balance); break;
        case 0x32: stack.push_back(env.origin); break;
        case 0x33: stack.push_back(env.caller); break;
        case 0x34: stack.push_back(env.callvalue); break;
        case 0x35: stack.push_back(cdword(pop())); break;
        case 0x36: stack.push_back(env.calldata.size()); break;
        case 0x37: { u256 dst = pop(), src = pop(), len = pop();
          size_t d = as_size(dst), s = as_size(src), l = as_size(len);
          ensure_mem(d + l);
          for (size_t i = 0; i < l; i++)
            memory[d + i] = s + i < env.calldata.size() ? env.calldata[s + i] : 0;
          break; }
        case 0x38: stack.push_back(code.size()); break;
        case 0x39: { u256 dst = pop(), src = pop(), len = pop();
          size_t d = as_size(dst), s = as_size(src), l = as_size(len);
          ensure_mem(d + l);
          for (size_t i = 0; i < l; i++) memory[d + i] = s + i < code.size() ? code[s + i] : 0;
          break; }
        case 0x3a: stack.push_back(env.gasprice); break;
        case 0x3b: pop(); stack.push_back(0); break;
        case 0x3c: { pop(); u256 dst = pop(); pop(); u256 len = pop();
          size_t d = as_size(dst), l = as_size(len);
          ensure_mem(d + l);
          for (size_t i = 0; i < l; i++) memory[d + i] = 0;
          break; }
        case 0x3d: stack.push_back(res.return_data.size()); break;
        case 0x3e: { u256 dst = pop(), src = pop(), len = pop();
          size_t d = as_size(dst), s = as_size(src), l = as_size(len);
          ensure_mem(d + l);
          for (size_t i = 0; i < l; i++)
            memory[d + i] = s + i < res.return_data.size() ? res.return_data[s + i] : 0;
          break; }
        case 0x3f: pop(); stack.push_back(0); break;
        case 0x40: pop(); stack.push_back(u256("0x4242424242424242424242424242424242424242424242424242424242424242")); break;
        case 0x41: stack.push_back(env.coinbase); break;
        case 0x42: stack.push_back(env.timestamp); break;
        case 0x43: stack.push_back(env.number); break;
        case 0x44: stack.push_back(env.prevrandao); break;
        case 0x45: stack.push_back(env.gaslimit); break;
        case 0x46: stack.push_back(env.chainid); break;
        case 0x47: stack.push_back(env.balance); break;
        case 0x48: stack.push_back(env.basefee); break;
        case 0x50: pop(); break;
        case 0x51: stack.push_back(mload(as_size(pop()))); break;
        case 0x52: { u256 off = pop(), v = pop(); mstore(as_size(off), v); break; }
        case 0x53: { u256 off = pop(), v = pop();
          ensure_mem(as_size(off) + 1);
          memory[as_size(off)] = static_cast<uint8_t>(v & 0xff); break; }
        case 0x54: { u256 slot = pop();
          auto it = res.storage.find(slot);
          stack.push_back(it == res.storage.end() ? u256(0) : it->second); break; }
        case 0x55: { u256 slot = pop(), v = pop(); res.storage[slot] = v; break; }
        case 0x56: { u256 target = pop();
          size_t t = as_size(target);
          if (t >= code.size() || code[t] != 0x5b) return halt(OracleResult::Invalid);
          res.transfers.push_back({pc, t});
          pc = t;
          continue; }
        case 0x57: { u256 target = pop(), cond = pop();
          if (cond != 0) {
            size_t t = as_size(target);
            if (t >= code.size() || code[t] != 0x5b) return halt(OracleResult::Invalid);
            res.transfers.push_back({pc, t});
            pc = t;
            continue;
          }
          res.transfers.push_back({pc, next_pc});
          break; }
        case 0x58: stack.push_back(pc); break;
        case 0x59: stack.push_back(memory.size()); break;
        case 0x5a: stack.push_back(10000000); break;
        case 0x5b: break;  // JUMPDEST
        case 0x5f: stack.push_back(0); break;
        case 0xf0: case 0xf5: {  // CREATE/CREATE2
          for (int i = 0; i < (op == 0xf0 ? 3 : 4); i++) pop();
          stack.push_back(u256("0xdddd000000000000000000000000000000000000"));
          break; }
        case 0xf1: case 0xf2: {  // CALL/CALLCODE
          for (int i = 0; i < 5; i++) pop();
          u256 ro = pop(), rl = pop();
          size_t o = as_size(ro), l = as_size(rl);
          ensure_mem(o + l);
          for (size_t i = 0; i < l; i++) memory[o + i] = 0;
          res.return_data.clear();
          stack.push_back(env.call_success);
          break; }
        case 0xf4: case 0xfa: {  // DELEGATECALL/STATICCALL
          for (int i = 0; i < 4; i++) pop();
          u256 ro = pop(), rl = pop();
          size_t o = as_size(ro), l = as_size(rl);
          ensure_mem(o + l);
          for (size_t i = 0; i < l; i++) memory[o + i] = 0;
          res.return_data.clear();
          stack.push_back(env.call_success);
          break; }
        case 0xf3: { u256 off = pop(), len = pop();
          size_t o = as_size(off), l = as_size(len);
          ensure_mem(o + l);
          res.return_data.assign(memory.begin() + o, memory.begin() + o + l);
          return halt(OracleResult::Return); }
        case 0xfd: { u256 off = pop(), len = pop();
          size_t o = as_size(off), l = as_size(len);
          ensure_mem(o + l);
          res.return_data.assign(memory.begin() + o, memory.begin() + o + l);
          return halt(OracleResult::Revert); }
        case 0xff: pop(); return halt(OracleResult::Stop);
        default: return halt(OracleResult::Invalid);
      }
    }
    // sequential flow into a JUMPDEST is a block-to-block transfer
    if (next_pc < code.size() && code[next_pc] == 0x5b && op != 0x56 && op != 0x57)
      res.transfers.push_back({pc, next_pc});
    pc = next_pc;
  }
}

}  // namespace testsupport
