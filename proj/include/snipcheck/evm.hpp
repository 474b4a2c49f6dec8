#pragma once

#include "snipcheck/solc.hpp"
#include "snipcheck/u256.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace snipcheck {

// clang-format off
enum Op : uint8_t {
  OP_STOP = 0x00, OP_ADD, OP_MUL, OP_SUB, OP_DIV, OP_SDIV, OP_MOD, OP_SMOD,
  OP_ADDMOD, OP_MULMOD, OP_EXP, OP_SIGNEXTEND,
  OP_LT = 0x10, OP_GT, OP_SLT, OP_SGT, OP_EQ, OP_ISZERO, OP_AND, OP_OR, OP_XOR,
  OP_NOT, OP_BYTE, OP_SHL, OP_SHR, OP_SAR,
  OP_SHA3 = 0x20,
  OP_ADDRESS = 0x30, OP_BALANCE, OP_ORIGIN, OP_CALLER, OP_CALLVALUE,
  OP_CALLDATALOAD, OP_CALLDATASIZE, OP_CALLDATACOPY, OP_CODESIZE, OP_CODECOPY,
  OP_GASPRICE, OP_EXTCODESIZE, OP_EXTCODECOPY, OP_RETURNDATASIZE,
  OP_RETURNDATACOPY, OP_EXTCODEHASH,
  OP_BLOCKHASH = 0x40, OP_COINBASE, OP_TIMESTAMP, OP_NUMBER, OP_PREVRANDAO,
  OP_GASLIMIT, OP_CHAINID, OP_SELFBALANCE, OP_BASEFEE,
  OP_POP = 0x50, OP_MLOAD, OP_MSTORE, OP_MSTORE8, OP_SLOAD, OP_SSTORE, OP_JUMP,
  OP_JUMPI, OP_PC, OP_MSIZE, OP_GAS, OP_JUMPDEST,
  OP_PUSH0 = 0x5f, OP_PUSH1 = 0x60, OP_PUSH32 = 0x7f,
  OP_DUP1 = 0x80, OP_DUP16 = 0x8f, OP_SWAP1 = 0x90, OP_SWAP16 = 0x9f,
  OP_LOG0 = 0xa0, OP_LOG4 = 0xa4,
  OP_CREATE = 0xf0, OP_CALL = 0xf1, OP_CALLCODE = 0xf2, OP_RETURN = 0xf3,
  OP_DELEGATECALL = 0xf4, OP_CREATE2 = 0xf5, OP_STATICCALL = 0xfa,
  OP_REVERT = 0xfd, OP_INVALID = 0xfe, OP_SELFDESTRUCT = 0xff,
};
// clang-format on

struct OpInfo {
  const char* name;
  uint8_t immediate;  // PUSH data bytes
  uint8_t pops;
  uint8_t pushes;
  bool defined;
};

inline const OpInfo& op_info(uint8_t op) {
  static const std::array<OpInfo, 256> table = [] {
    std::array<OpInfo, 256> t{};
    for (auto& e : t) e = {"INVALID", 0, 0, 0, false};
    auto set = [&](uint8_t code, const char* name, uint8_t pops, uint8_t pushes,
                   uint8_t imm = 0) { t[code] = {name, imm, pops, pushes, true}; };
    set(OP_STOP, "STOP", 0, 0);
    set(OP_ADD, "ADD", 2, 1); set(OP_MUL, "MUL", 2, 1); set(OP_SUB, "SUB", 2, 1);
    set(OP_DIV, "DIV", 2, 1); set(OP_SDIV, "SDIV", 2, 1); set(OP_MOD, "MOD", 2, 1);
    set(OP_SMOD, "SMOD", 2, 1); set(OP_ADDMOD, "ADDMOD", 3, 1); set(OP_MULMOD, "MULMOD", 3, 1);
    set(OP_EXP, "EXP", 2, 1); set(OP_SIGNEXTEND, "SIGNEXTEND", 2, 1);
    set(OP_LT, "LT", 2, 1); set(OP_GT, "GT", 2, 1); set(OP_SLT, "SLT", 2, 1);
    set(OP_SGT, "SGT", 2, 1); set(OP_EQ, "EQ", 2, 1); set(OP_ISZERO, "ISZERO", 1, 1);
    set(OP_AND, "AND", 2, 1); set(OP_OR, "OR", 2, 1); set(OP_XOR, "XOR", 2, 1);
    set(OP_NOT, "NOT", 1, 1); set(OP_BYTE, "BYTE", 2, 1);
    set(OP_SHL, "SHL", 2, 1); set(OP_SHR, "SHR", 2, 1); set(OP_SAR, "SAR", 2, 1);
    set(OP_SHA3, "SHA3", 2, 1);
    set(OP_ADDRESS, "ADDRESS", 0, 1); set(OP_BALANCE, "BALANCE", 1, 1);
    set(OP_ORIGIN, "ORIGIN", 0, 1); set(OP_CALLER, "CALLER", 0, 1);
    set(OP_CALLVALUE, "CALLVALUE", 0, 1); set(OP_CALLDATALOAD, "CALLDATALOAD", 1, 1);
    set(OP_CALLDATASIZE, "CALLDATASIZE", 0, 1); set(OP_CALLDATACOPY, "CALLDATACOPY", 3, 0);
    set(OP_CODESIZE, "CODESIZE", 0, 1); set(OP_CODECOPY, "CODECOPY", 3, 0);
    set(OP_GASPRICE, "GASPRICE", 0, 1); set(OP_EXTCODESIZE, "EXTCODESIZE", 1, 1);
    set(OP_EXTCODECOPY, "EXTCODECOPY", 4, 0); set(OP_RETURNDATASIZE, "RETURNDATASIZE", 0, 1);
    set(OP_RETURNDATACOPY, "RETURNDATACOPY", 3, 0); set(OP_EXTCODEHASH, "EXTCODEHASH", 1, 1);
    set(OP_BLOCKHASH, "BLOCKHASH", 1, 1); set(OP_COINBASE, "COINBASE", 0, 1);
    set(OP_TIMESTAMP, "TIMESTAMP", 0, 1); set(OP_NUMBER, "NUMBER", 0, 1);
    set(OP_PREVRANDAO, "PREVRANDAO", 0, 1); set(OP_GASLIMIT, "GASLIMIT", 0, 1);
    set(OP_CHAINID, "CHAINID", 0, 1); set(OP_SELFBALANCE, "SELFBALANCE", 0, 1);
    set(OP_BASEFEE, "BASEFEE", 0, 1);
    set(OP_POP, "POP", 1, 0); set(OP_MLOAD, "MLOAD", 1, 1); set(OP_MSTORE, "MSTORE", 2, 0);
    set(OP_MSTORE8, "MSTORE8", 2, 0); set(OP_SLOAD, "SLOAD", 1, 1);
    set(OP_SSTORE, "SSTORE", 2, 0); set(OP_JUMP, "JUMP", 1, 0);
    set(OP_JUMPI, "JUMPI", 2, 0); set(OP_PC, "PC", 0, 1); set(OP_MSIZE, "MSIZE", 0, 1);
    set(OP_GAS, "GAS", 0, 1); set(OP_JUMPDEST, "JUMPDEST", 0, 0);
    set(OP_PUSH0, "PUSH0", 0, 1);
    static char push_names[32][7];
    for (int n = 1; n <= 32; n++) {
      std::snprintf(push_names[n - 1], sizeof push_names[n - 1], "PUSH%d", n);
      set(static_cast<uint8_t>(OP_PUSH1 + n - 1), push_names[n - 1], 0, 1,
          static_cast<uint8_t>(n));
    }
    static char dup_names[16][7], swap_names[16][8];
    for (int n = 1; n <= 16; n++) {
      std::snprintf(dup_names[n - 1], sizeof dup_names[n - 1], "DUP%d", n);
      std::snprintf(swap_names[n - 1], sizeof swap_names[n - 1], "SWAP%d", n);
      set(static_cast<uint8_t>(OP_DUP1 + n - 1), dup_names[n - 1],
          static_cast<uint8_t>(n), static_cast<uint8_t>(n + 1));
      set(static_cast<uint8_t>(OP_SWAP1 + n - 1), swap_names[n - 1],
          static_cast<uint8_t>(n + 1), static_cast<uint8_t>(n + 1));
    }
    static char log_names[5][5];
    for (int n = 0; n <= 4; n++) {
      std::snprintf(log_names[n], sizeof log_names[n], "LOG%d", n);
      set(static_cast<uint8_t>(OP_LOG0 + n), log_names[n], static_cast<uint8_t>(n + 2), 0);
    }
    set(OP_CREATE, "CREATE", 3, 1); set(OP_CALL, "CALL", 7, 1);
    set(OP_CALLCODE, "CALLCODE", 7, 1); set(OP_RETURN, "RETURN", 2, 0);
    set(OP_DELEGATECALL, "DELEGATECALL", 6, 1); set(OP_CREATE2, "CREATE2", 4, 1);
    set(OP_STATICCALL, "STATICCALL", 6, 1); set(OP_REVERT, "REVERT", 2, 0);
    set(OP_INVALID, "INVALID", 0, 0, 0);
    t[OP_INVALID].defined = true;
    set(OP_SELFDESTRUCT, "SELFDESTRUCT", 1, 0);
    return t;
  }();
  return table[op];
}

inline bool is_push(uint8_t op) { return op >= OP_PUSH1 && op <= OP_PUSH32; }
inline bool is_dup(uint8_t op) { return op >= OP_DUP1 && op <= OP_DUP16; }
inline bool is_swap(uint8_t op) { return op >= OP_SWAP1 && op <= OP_SWAP16; }
inline bool is_log(uint8_t op) { return op >= OP_LOG0 && op <= OP_LOG4; }

inline bool is_terminator(uint8_t op) {
  switch (op) {
    case OP_STOP: case OP_JUMP: case OP_JUMPI: case OP_RETURN: case OP_REVERT:
    case OP_INVALID: case OP_SELFDESTRUCT:
      return true;
    default:
      return !op_info(op).defined;  // undefined bytes behave like INVALID
  }
}

inline bool is_call_family(uint8_t op) {
  return op == OP_CALL || op == OP_CALLCODE || op == OP_DELEGATECALL || op == OP_STATICCALL;
}

struct Instruction {
  size_t pc = 0;
  uint8_t opcode = OP_INVALID;
  Bytes push_data;                  // immediates for PUSH1..PUSH32
  SourceRange source_range;         // via source map; file -1 = none/generated
  bool truncated_push = false;      // immediate ran past end of code, zero-padded
  bool undefined_opcode = false;    // byte not in the instruction table

  u256 push_value() const { return u256_from_be(push_data.data(), push_data.size()); }
  const char* name() const { return op_info(opcode).name; }
  size_t byte_length() const { return 1 + push_data.size(); }
};

// Linear-scan disassembly. PUSHn consumes n immediate bytes (zero-padded and
// flagged when the code ends early); unknown bytes decode as INVALID with a
// flag. The compiler's CBOR metadata trailer is data, not code, and is
// excluded by default.
inline std::vector<Instruction> disassemble(const Bytes& bytecode, bool strip_metadata = true) {
  size_t code_len = strip_metadata ? executable_code_length(bytecode) : bytecode.size();
  std::vector<Instruction> out;
  size_t pc = 0;
  while (pc < code_len) {
    Instruction ins;
    ins.pc = pc;
    ins.opcode = bytecode[pc];
    const OpInfo& info = op_info(ins.opcode);
    ins.undefined_opcode = !info.defined;
    size_t imm = info.immediate;
    if (imm > 0) {
      size_t available = std::min(imm, code_len - pc - 1);
      ins.push_data.assign(bytecode.begin() + pc + 1, bytecode.begin() + pc + 1 + available);
      if (available < imm) {
        ins.push_data.resize(imm, 0);  // zero-pad, matching reference disassemblers
        ins.truncated_push = true;
        pc = code_len;
      } else {
        pc += 1 + imm;
      }
    } else {
      pc += 1;
    }
    out.push_back(std::move(ins));
  }
  return out;
}

// Copies per-instruction ranges from a compiler source map onto instructions.
inline void annotate_source_ranges(std::vector<Instruction>& instructions,
                                   const std::vector<SourceRange>& source_map) {
  for (size_t i = 0; i < instructions.size() && i < source_map.size(); i++)
    instructions[i].source_range = source_map[i];
}

}  // namespace snipcheck
