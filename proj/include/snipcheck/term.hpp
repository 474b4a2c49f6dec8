#pragma once

#include "snipcheck/evm.hpp"
#include "snipcheck/keccak.hpp"
#include "snipcheck/u256.hpp"

#include <deque>
#include <functional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace snipcheck {

enum class TermOp : uint8_t {
  Const, Var,
  Add, Sub, Mul, Div, SDiv, Mod, SMod, AddMod, MulMod, Exp, SignExtend,
  Lt, Gt, Slt, Sgt, Eq, IsZero, And, Or, Xor, Not, Byte, Shl, Shr, Sar,
  Keccak,        // n-ary hash of 32-byte words
  CalldataWord,  // calldata word at offset
  SloadBase,     // pre-transaction storage at slot
  BalanceOf,     // balance of address
  BlockHashOf,   // hash of block number
  ExtCodeSizeOf, ExtCodeHashOf,
};

// Provenance tags; a term's set is the union of its operands' sets.
enum TaintTag : uint8_t {
  TaintTimestamp = 1,
  TaintBlockEnv = 2,
  TaintCallData = 4,
  TaintExtCall = 8,
};

struct TermNode {
  TermOp op = TermOp::Const;
  uint8_t taint = 0;
  uint32_t id = 0;
  u256 value;        // Const only
  std::string name;  // Var only
  std::vector<const TermNode*> args;

  bool is_const() const { return op == TermOp::Const; }
  bool is_var() const { return op == TermOp::Var; }
};

using Term = const TermNode*;

// Hash-consing arena: syntactically equal terms share one node, so pointer
// equality is term equality (storage-slot matching relies on this).
class TermPool {
 public:
  Term constant(const u256& v) {
    auto key = make_key(TermOp::Const, v, {}, "");
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    return intern(key, [&](TermNode& n) {
      n.op = TermOp::Const;
      n.value = v;
    });
  }

  Term variable(const std::string& name, uint8_t taint = 0) {
    auto key = make_key(TermOp::Var, 0, {}, name);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    return intern(key, [&](TermNode& n) {
      n.op = TermOp::Var;
      n.name = name;
      n.taint = taint;
    });
  }

  Term make(TermOp op, std::vector<Term> args) {
    if (auto folded = fold(op, args)) return *folded;
    if (auto simplified = simplify(op, args)) return *simplified;
    auto key = make_key(op, 0, args, "");
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    return intern(key, [&](TermNode& n) {
      n.op = op;
      n.args = std::move(args);
      for (auto a : n.args) n.taint |= a->taint;
    });
  }

  Term make(TermOp op, Term a) { return make(op, std::vector<Term>{a}); }
  Term make(TermOp op, Term a, Term b) { return make(op, std::vector<Term>{a, b}); }
  Term make(TermOp op, Term a, Term b, Term c) { return make(op, std::vector<Term>{a, b, c}); }

  Term zero() { return constant(0); }
  Term one() { return constant(1); }

  size_t size() const { return nodes_.size(); }

 private:
  using Key = std::string;

  Key make_key(TermOp op, const u256& v, const std::vector<Term>& args, const std::string& name) {
    Key k;
    k += static_cast<char>(op);
    k += '|';
    if (op == TermOp::Const) k += v.str(0, std::ios_base::hex);
    if (op == TermOp::Var) k += name;
    for (auto a : args) {
      k += ':';
      k += std::to_string(a->id);
    }
    return k;
  }

  template <typename F>
  Term intern(const Key& key, F&& init) {
    nodes_.emplace_back();
    TermNode& n = nodes_.back();
    n.id = static_cast<uint32_t>(nodes_.size() - 1);
    init(n);
    index_[key] = &n;
    return &n;
  }

  static u256 bool_word(bool b) { return b ? u256(1) : u256(0); }

  std::optional<Term> fold(TermOp op, const std::vector<Term>& args) {
    for (auto a : args)
      if (!a->is_const()) return std::nullopt;
    auto v = [&](size_t i) { return args[i]->value; };
    switch (op) {
      case TermOp::Add: return constant(v(0) + v(1));
      case TermOp::Sub: return constant(v(0) - v(1));
      case TermOp::Mul: return constant(v(0) * v(1));
      case TermOp::Div: return constant(evm_div(v(0), v(1)));
      case TermOp::SDiv: return constant(evm_sdiv(v(0), v(1)));
      case TermOp::Mod: return constant(evm_mod(v(0), v(1)));
      case TermOp::SMod: return constant(evm_smod(v(0), v(1)));
      case TermOp::AddMod: return constant(evm_addmod(v(0), v(1), v(2)));
      case TermOp::MulMod: return constant(evm_mulmod(v(0), v(1), v(2)));
      case TermOp::Exp: return constant(evm_exp(v(0), v(1)));
      case TermOp::SignExtend: return constant(evm_signextend(v(0), v(1)));
      case TermOp::Lt: return constant(bool_word(v(0) < v(1)));
      case TermOp::Gt: return constant(bool_word(v(0) > v(1)));
      case TermOp::Slt: return constant(bool_word(evm_slt(v(0), v(1))));
      case TermOp::Sgt: return constant(bool_word(evm_slt(v(1), v(0))));
      case TermOp::Eq: return constant(bool_word(v(0) == v(1)));
      case TermOp::IsZero: return constant(bool_word(v(0) == 0));
      case TermOp::And: return constant(v(0) & v(1));
      case TermOp::Or: return constant(v(0) | v(1));
      case TermOp::Xor: return constant(v(0) ^ v(1));
      case TermOp::Not: return constant(~v(0));
      case TermOp::Byte: return constant(evm_byte(v(0), v(1)));
      case TermOp::Shl: return constant(evm_shl(v(0), v(1)));
      case TermOp::Shr: return constant(evm_shr(v(0), v(1)));
      case TermOp::Sar: return constant(evm_sar(v(0), v(1)));
      case TermOp::Keccak: {
        Bytes data;
        for (auto a : args) {
          uint8_t word[32];
          u256_to_be32(a->value, word);
          data.insert(data.end(), word, word + 32);
        }
        return constant(keccak256_word(data));
      }
      default:
        return std::nullopt;  // uninterpreted reads stay symbolic
    }
  }

  std::optional<Term> simplify(TermOp op, const std::vector<Term>& args) {
    auto is_zero = [](Term t) { return t->is_const() && t->value == 0; };
    auto is_one = [](Term t) { return t->is_const() && t->value == 1; };
    switch (op) {
      case TermOp::Add:
        if (is_zero(args[0])) return args[1];
        if (is_zero(args[1])) return args[0];
        break;
      case TermOp::Sub:
        if (is_zero(args[1])) return args[0];
        if (args[0] == args[1]) return zero();
        break;
      case TermOp::Mul:
        if (is_zero(args[0]) || is_zero(args[1])) return zero();
        if (is_one(args[0])) return args[1];
        if (is_one(args[1])) return args[0];
        break;
      case TermOp::Div:
        if (is_one(args[1])) return args[0];
        break;
      case TermOp::And:
        if (is_zero(args[0]) || is_zero(args[1])) return zero();
        if (args[0]->is_const() && args[0]->value == ~u256(0)) return args[1];
        if (args[1]->is_const() && args[1]->value == ~u256(0)) return args[0];
        if (args[0] == args[1]) return args[0];
        break;
      case TermOp::Or:
        if (is_zero(args[0])) return args[1];
        if (is_zero(args[1])) return args[0];
        if (args[0] == args[1]) return args[0];
        break;
      case TermOp::Xor:
        if (args[0] == args[1]) return zero();
        if (is_zero(args[0])) return args[1];
        if (is_zero(args[1])) return args[0];
        break;
      case TermOp::Eq:
        if (args[0] == args[1]) return one();
        break;
      case TermOp::Shl:
      case TermOp::Shr:
      case TermOp::Sar:
        if (is_zero(args[0])) return args[1];
        break;
      default:
        break;
    }
    return std::nullopt;
  }

  std::deque<TermNode> nodes_;
  std::unordered_map<Key, Term> index_;
};

// Structural search: does `t` mention the named variable anywhere?
inline bool mentions_var(Term t, std::string_view name) {
  std::set<uint32_t> seen;
  std::function<bool(Term)> walk = [&](Term n) -> bool {
    if (!seen.insert(n->id).second) return false;
    if (n->is_var() && n->name == name) return true;
    for (auto a : n->args)
      if (walk(a)) return true;
    return false;
  };
  return walk(t);
}

inline bool has_taint(Term t, uint8_t mask) { return (t->taint & mask) != 0; }

// Pretty printer for diagnostics and witnesses.
inline std::string term_to_string(Term t) {
  switch (t->op) {
    case TermOp::Const: {
      if (t->value < 1024) return t->value.str();
      return "0x" + t->value.str(0, std::ios_base::hex);
    }
    case TermOp::Var: return t->name;
    default: break;
  }
  static const char* names[] = {
      "const", "var", "add", "sub", "mul", "div", "sdiv", "mod", "smod", "addmod",
      "mulmod", "exp", "signextend", "lt", "gt", "slt", "sgt", "eq", "iszero", "and",
      "or", "xor", "not", "byte", "shl", "shr", "sar", "keccak", "calldata",
      "storage0", "balanceof", "blockhash", "extcodesize", "extcodehash"};
  std::string out = "(";
  out += names[static_cast<size_t>(t->op)];
  for (auto a : t->args) {
    out += ' ';
    out += term_to_string(a);
  }
  out += ')';
  return out;
}

}  // namespace snipcheck
