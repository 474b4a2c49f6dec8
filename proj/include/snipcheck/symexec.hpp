#pragma once

#include "snipcheck/cfg.hpp"
#include "snipcheck/config.hpp"
#include "snipcheck/smt.hpp"
#include "snipcheck/term.hpp"

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace snipcheck {

enum class Termination { Stop, Return, Revert, Invalid, DepthLimit, LoopLimit, Timeout };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Stop: return "Stop";
    case Termination::Return: return "Return";
    case Termination::Revert: return "Revert";
    case Termination::Invalid: return "Invalid";
    case Termination::DepthLimit: return "DepthLimit";
    case Termination::LoopLimit: return "LoopLimit";
    default: return "Timeout";
  }
}

enum class EventKind { Sload, Sstore, Call, Create, SelfDestruct, Arith, Log };

struct Event {
  EventKind kind;
  size_t pc = 0;
  BlockId block = 0;
  size_t constraints_at = 0;  // path constraint count when the event fired
  SourceRange source;

  Term slot = nullptr;   // Sload/Sstore
  Term value = nullptr;  // Sstore value / Call value / SelfDestruct beneficiary

  uint8_t opcode = 0;    // Call family / Arith op
  Term gas = nullptr;    // Call
  Term target = nullptr; // Call destination
  Term result = nullptr; // Call result term (fresh, ExternalCallResult taint)

  Term a = nullptr, b = nullptr;  // Arith operands
};

struct ConstraintOrigin {
  size_t pc = 0;
  BlockId block = 0;
  SourceRange source;
};

struct PathResult {
  Termination termination = Termination::Stop;
  std::vector<Constraint> constraints;
  std::vector<ConstraintOrigin> constraint_origins;  // aligned with constraints
  std::vector<Event> events;
  std::vector<std::pair<size_t, uint8_t>> trace;  // executed (pc, opcode)
  std::vector<BlockId> blocks;                    // in visit order
  std::vector<std::pair<Term, Term>> storage_writes;
};

struct ExploreResult {
  std::vector<PathResult> paths;
  bool timed_out = false;
  bool path_cap_hit = false;
  std::set<std::pair<BlockId, BlockId>> resolved_jumps;  // discovered at runtime
  std::vector<std::string> diagnostics;
};

// Environment terms shared by every path of one exploration.
struct SymEnv {
  Term caller, origin, self_address, callvalue, calldatasize, gasprice;
  Term timestamp, number, coinbase, prevrandao, gaslimit, chainid, basefee, selfbalance;

  static SymEnv make(TermPool& pool) {
    SymEnv e;
    e.caller = pool.variable("CALLER");
    e.origin = pool.variable("ORIGIN");
    e.self_address = pool.variable("ADDRESS");
    e.callvalue = pool.variable("CALLVALUE", TaintCallData);
    e.calldatasize = pool.variable("CALLDATASIZE", TaintCallData);
    e.gasprice = pool.variable("GASPRICE");
    e.timestamp = pool.variable("TIMESTAMP", TaintTimestamp | TaintBlockEnv);
    e.number = pool.variable("NUMBER", TaintBlockEnv);
    e.coinbase = pool.variable("COINBASE", TaintBlockEnv);
    e.prevrandao = pool.variable("PREVRANDAO", TaintBlockEnv);
    e.gaslimit = pool.variable("GASLIMIT");
    e.chainid = pool.variable("CHAINID");
    e.basefee = pool.variable("BASEFEE");
    e.selfbalance = pool.variable("SELFBALANCE");
    return e;
  }
};

namespace detail {

struct MemByte {
  Term term = nullptr;  // byte value = big-endian byte `index` of `term`
  int index = 31;
};

struct SymState {
  BlockId block = 0;
  std::vector<Term> stack;
  std::map<uint64_t, MemByte> memory;
  std::vector<std::pair<Term, Term>> storage_writes;
  std::vector<Constraint> constraints;
  std::vector<ConstraintOrigin> constraint_origins;
  std::vector<Event> events;
  std::vector<std::pair<size_t, uint8_t>> trace;
  std::vector<BlockId> blocks;
  std::map<std::pair<BlockId, BlockId>, int> edge_counts;
  Term returndatasize = nullptr;
  uint64_t msize = 0;
  int depth = 0;

  void add_constraint(Term t, bool taken, const ConstraintOrigin& origin) {
    constraints.emplace_back(t, taken);
    constraint_origins.push_back(origin);
  }
};

}  // namespace detail

// Bounded depth-first symbolic execution over the CFG. Forks at feasible
// JUMPI branches (unknown counts as feasible), unrolls loops up to the bound,
// and resolves symbolic jump targets by querying the solver for JUMPDEST
// values. `retained` (from a successful prune) lets the dispatcher skip
// selector branches that lead entirely outside the snippet.
class Explorer {
 public:
  Explorer(const Cfg& cfg, const ExploreLimits& limits, TermPool& pool, SmtSolver& solver,
           const std::set<BlockId>* retained = nullptr)
      : cfg_(cfg), limits_(limits), pool_(pool), solver_(solver), retained_(retained),
        env_(SymEnv::make(pool)) {
    for (const auto& loop : detect_loops(cfg))
      for (auto& be : loop.back_edges) back_edges_.insert(be);
  }

  ExploreResult run() {
    deadline_ = std::chrono::steady_clock::now() +
                std::chrono::milliseconds(limits_.per_contract_timeout_ms);
    if (!cfg_.blocks.empty()) {
      detail::SymState init;
      init.block = cfg_.entry_id;
      walk_block(init);
    }
    return std::move(result_);
  }

  const SymEnv& env() const { return env_; }

 private:
  using SymState = detail::SymState;

  bool out_of_time() { return std::chrono::steady_clock::now() >= deadline_; }

  Term fresh(const std::string& stem, uint8_t taint = 0) {
    return pool_.variable(stem + "_" + std::to_string(fresh_counter_++), taint);
  }

  void finish(SymState& st, Termination t) {
    if (result_.paths.size() >= static_cast<size_t>(limits_.max_paths)) {
      result_.path_cap_hit = true;
      return;
    }
    PathResult p;
    p.termination = t;
    p.constraints = st.constraints;
    p.constraint_origins = st.constraint_origins;
    p.events = st.events;
    p.trace = st.trace;
    p.blocks = st.blocks;
    p.storage_writes = st.storage_writes;
    result_.paths.push_back(std::move(p));
  }

  // ---- memory model: byte map with 32-byte word granularity ----

  static std::optional<uint64_t> small_const(Term t) {
    if (!t->is_const() || t->value > u256(1) << 32) return std::nullopt;
    return static_cast<uint64_t>(t->value);
  }

  void mem_store_word(SymState& st, uint64_t off, Term value) {
    for (int i = 0; i < 32; i++) st.memory[off + i] = {value, i};
    st.msize = std::max(st.msize, (off + 32 + 31) / 32 * 32);
  }

  void mem_store_byte(SymState& st, uint64_t off, Term value) {
    st.memory[off] = {value, 31};
    st.msize = std::max(st.msize, (off + 1 + 31) / 32 * 32);
  }

  Term mem_load_word(SymState& st, uint64_t off) {
    bool all_same = true, all_const = true;
    Term base = nullptr;
    uint8_t taint = 0;
    uint8_t bytes[32];
    for (int i = 0; i < 32; i++) {
      auto it = st.memory.find(off + i);
      if (it == st.memory.end()) {
        all_same = false;
        bytes[i] = 0;
        continue;
      }
      const auto& mb = it->second;
      taint |= mb.term->taint;
      if (mb.index != i) all_same = false;
      if (base == nullptr) base = mb.term;
      else if (base != mb.term) all_same = false;
      if (mb.term->is_const())
        bytes[i] = static_cast<uint8_t>(evm_byte(mb.index, mb.term->value));
      else
        all_const = false;
    }
    if (all_same && base != nullptr) return base;
    if (all_const) return pool_.constant(u256_from_be(bytes, 32));
    Term blend = fresh("mem", taint);
    return blend;
  }

  // Hash of a concrete-offset memory region. Fully concrete bytes hash for
  // real; otherwise the region becomes an uninterpreted keccak over its words
  // (plus the length, so regions of different sizes cannot alias).
  Term keccak_region(SymState& st, uint64_t off, uint64_t len) {
    if (len == 0) return pool_.constant(keccak256_word({}));
    if (len > 4096) return fresh("keccak_big");
    Bytes concrete(len);
    bool all_const = true;
    for (uint64_t i = 0; i < len; i++) {
      auto it = st.memory.find(off + i);
      if (it == st.memory.end()) {
        concrete[i] = 0;
      } else if (it->second.term->is_const()) {
        concrete[i] = static_cast<uint8_t>(evm_byte(it->second.index, it->second.term->value));
      } else {
        all_const = false;
        break;
      }
    }
    if (all_const) return pool_.constant(keccak256_word(concrete));
    std::vector<Term> words;
    for (uint64_t w = 0; w < len; w += 32) words.push_back(mem_load_word(st, off + w));
    words.push_back(pool_.constant(len));
    return pool_.make(TermOp::Keccak, std::move(words));
  }

  // ---- storage model: path-local write log over a symbolic base ----

  Term storage_read(SymState& st, Term slot) {
    for (auto it = st.storage_writes.rbegin(); it != st.storage_writes.rend(); ++it)
      if (it->first == slot) return it->second;
    return pool_.make(TermOp::SloadBase, slot);
  }

  // ---- instruction interpretation ----

  struct BlockOutcome {
    enum Kind { Terminated, Fallthrough, Jump, Branch } kind = Terminated;
    Termination termination = Termination::Stop;
    Term target = nullptr;     // Jump/Branch
    Term condition = nullptr;  // Branch
    ConstraintOrigin origin;   // the JUMP/JUMPI site
  };

  bool pop_args(SymState& st, size_t n, std::vector<Term>& out) {
    if (st.stack.size() < n) return false;
    out.assign(st.stack.end() - n, st.stack.end());
    std::reverse(out.begin(), out.end());  // out[0] = top of stack
    st.stack.resize(st.stack.size() - n);
    return true;
  }

  // Executes the block body; returns how control leaves it.
  std::optional<BlockOutcome> exec_block(SymState& st) {
    const BasicBlock& block = cfg_.blocks[st.block];
    for (size_t k = 0; k < block.instruction_count; k++) {
      const Instruction& ins = cfg_.instructions[block.first_instruction + k];
      st.trace.emplace_back(ins.pc, ins.opcode);
      if (st.stack.size() > 1024) return BlockOutcome{BlockOutcome::Terminated, Termination::Invalid};
      uint8_t op = ins.opcode;
      std::vector<Term> args;
      auto need = [&](size_t n) { return pop_args(st, n, args); };
      auto push = [&](Term t) { st.stack.push_back(t); };
      auto binop = [&](TermOp t) {
        if (!need(2)) return false;
        push(pool_.make(t, args[0], args[1]));
        return true;
      };
      auto record_arith = [&](TermOp top) {
        Event e;
        e.kind = EventKind::Arith;
        e.pc = ins.pc;
        e.block = st.block;
        e.constraints_at = st.constraints.size();
        e.source = ins.source_range;
        e.opcode = op;
        e.a = args[0];
        e.b = args[1];
        e.result = st.stack.back();
        (void)top;
        st.events.push_back(e);
      };

      if (is_push(op) || op == OP_PUSH0) {
        push(pool_.constant(op == OP_PUSH0 ? u256(0) : ins.push_value()));
        continue;
      }
      if (is_dup(op)) {
        size_t depth = op - OP_DUP1;
        if (st.stack.size() <= depth)
          return BlockOutcome{BlockOutcome::Terminated, Termination::Invalid};
        push(st.stack[st.stack.size() - 1 - depth]);
        continue;
      }
      if (is_swap(op)) {
        size_t depth = op - OP_SWAP1 + 1;
        if (st.stack.size() <= depth)
          return BlockOutcome{BlockOutcome::Terminated, Termination::Invalid};
        std::swap(st.stack[st.stack.size() - 1], st.stack[st.stack.size() - 1 - depth]);
        continue;
      }
      if (is_log(op)) {
        if (!need(op - OP_LOG0 + 2))
          return BlockOutcome{BlockOutcome::Terminated, Termination::Invalid};
        continue;
      }

      switch (op) {
        case OP_STOP: return BlockOutcome{BlockOutcome::Terminated, Termination::Stop};
        case OP_ADD: if (!binop(TermOp::Add)) return invalid(); record_arith(TermOp::Add); break;
        case OP_SUB: if (!binop(TermOp::Sub)) return invalid(); record_arith(TermOp::Sub); break;
        case OP_MUL: if (!binop(TermOp::Mul)) return invalid(); record_arith(TermOp::Mul); break;
        case OP_DIV: if (!binop(TermOp::Div)) return invalid(); break;
        case OP_SDIV: if (!binop(TermOp::SDiv)) return invalid(); break;
        case OP_MOD: if (!binop(TermOp::Mod)) return invalid(); break;
        case OP_SMOD: if (!binop(TermOp::SMod)) return invalid(); break;
        case OP_ADDMOD:
          if (!need(3)) return invalid();
          push(pool_.make(TermOp::AddMod, args[0], args[1], args[2]));
          break;
        case OP_MULMOD:
          if (!need(3)) return invalid();
          push(pool_.make(TermOp::MulMod, args[0], args[1], args[2]));
          break;
        case OP_EXP: if (!binop(TermOp::Exp)) return invalid(); break;
        case OP_SIGNEXTEND: if (!binop(TermOp::SignExtend)) return invalid(); break;
        case OP_LT: if (!binop(TermOp::Lt)) return invalid(); break;
        case OP_GT: if (!binop(TermOp::Gt)) return invalid(); break;
        case OP_SLT: if (!binop(TermOp::Slt)) return invalid(); break;
        case OP_SGT: if (!binop(TermOp::Sgt)) return invalid(); break;
        case OP_EQ: if (!binop(TermOp::Eq)) return invalid(); break;
        case OP_ISZERO:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::IsZero, args[0]));
          break;
        case OP_AND: if (!binop(TermOp::And)) return invalid(); break;
        case OP_OR: if (!binop(TermOp::Or)) return invalid(); break;
        case OP_XOR: if (!binop(TermOp::Xor)) return invalid(); break;
        case OP_NOT:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::Not, args[0]));
          break;
        case OP_BYTE: if (!binop(TermOp::Byte)) return invalid(); break;
        case OP_SHL: if (!binop(TermOp::Shl)) return invalid(); break;
        case OP_SHR: if (!binop(TermOp::Shr)) return invalid(); break;
        case OP_SAR: if (!binop(TermOp::Sar)) return invalid(); break;
        case OP_SHA3: {
          if (!need(2)) return invalid();
          auto off = small_const(args[0]), len = small_const(args[1]);
          if (off && len) push(keccak_region(st, *off, *len));
          else push(fresh("keccak_sym", args[0]->taint | args[1]->taint));
          break;
        }
        case OP_ADDRESS: push(env_.self_address); break;
        case OP_BALANCE:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::BalanceOf, args[0]));
          break;
        case OP_ORIGIN: push(env_.origin); break;
        case OP_CALLER: push(env_.caller); break;
        case OP_CALLVALUE: push(env_.callvalue); break;
        case OP_CALLDATALOAD:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::CalldataWord, args[0]));
          break;
        case OP_CALLDATASIZE: push(env_.calldatasize); break;
        case OP_CALLDATACOPY: {
          if (!need(3)) return invalid();
          auto dst = small_const(args[0]), src = small_const(args[1]), len = small_const(args[2]);
          if (dst && len && *len <= 4096) {
            for (uint64_t w = 0; w < *len; w += 32) {
              Term word = src ? pool_.make(TermOp::CalldataWord, pool_.constant(*src + w))
                              : fresh("calldata_sym", TaintCallData);
              uint64_t chunk = std::min<uint64_t>(32, *len - w);
              for (uint64_t i = 0; i < chunk; i++)
                st.memory[*dst + w + i] = {word, static_cast<int>(i)};
            }
            st.msize = std::max(st.msize, (*dst + *len + 31) / 32 * 32);
          }
          break;
        }
        case OP_CODESIZE: push(pool_.constant(code_size_)); break;
        case OP_CODECOPY: {
          if (!need(3)) return invalid();
          auto dst = small_const(args[0]), src = small_const(args[1]), len = small_const(args[2]);
          if (dst && src && len && *len <= 4096) {
            for (uint64_t i = 0; i < *len; i++) {
              uint8_t byte = (*src + i) < code_.size() ? code_[*src + i] : 0;
              mem_store_byte(st, *dst + i, pool_.constant(byte));
            }
          }
          break;
        }
        case OP_GASPRICE: push(env_.gasprice); break;
        case OP_EXTCODESIZE:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::ExtCodeSizeOf, args[0]));
          break;
        case OP_EXTCODECOPY: if (!need(4)) return invalid(); break;
        case OP_RETURNDATASIZE:
          push(st.returndatasize ? st.returndatasize : pool_.zero());
          break;
        case OP_RETURNDATACOPY: {
          if (!need(3)) return invalid();
          auto dst = small_const(args[0]), len = small_const(args[2]);
          if (dst && len && *len <= 4096)
            for (uint64_t w = 0; w < *len; w += 32) {
              Term word = fresh("returndata", TaintExtCall);
              uint64_t chunk = std::min<uint64_t>(32, *len - w);
              for (uint64_t i = 0; i < chunk; i++)
                st.memory[*dst + w + i] = {word, static_cast<int>(i)};
            }
          break;
        }
        case OP_EXTCODEHASH:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::ExtCodeHashOf, args[0]));
          break;
        case OP_BLOCKHASH:
          if (!need(1)) return invalid();
          push(pool_.make(TermOp::BlockHashOf, args[0]));
          break;
        case OP_COINBASE: push(env_.coinbase); break;
        case OP_TIMESTAMP: push(env_.timestamp); break;
        case OP_NUMBER: push(env_.number); break;
        case OP_PREVRANDAO: push(env_.prevrandao); break;
        case OP_GASLIMIT: push(env_.gaslimit); break;
        case OP_CHAINID: push(env_.chainid); break;
        case OP_SELFBALANCE: push(env_.selfbalance); break;
        case OP_BASEFEE: push(env_.basefee); break;
        case OP_POP: if (!need(1)) return invalid(); break;
        case OP_MLOAD: {
          if (!need(1)) return invalid();
          auto off = small_const(args[0]);
          push(off ? mem_load_word(st, *off) : fresh("mem_sym", args[0]->taint));
          break;
        }
        case OP_MSTORE: {
          if (!need(2)) return invalid();
          if (auto off = small_const(args[0])) mem_store_word(st, *off, args[1]);
          break;
        }
        case OP_MSTORE8: {
          if (!need(2)) return invalid();
          if (auto off = small_const(args[0])) mem_store_byte(st, *off, args[1]);
          break;
        }
        case OP_SLOAD: {
          if (!need(1)) return invalid();
          Term value = storage_read(st, args[0]);
          push(value);
          Event e;
          e.kind = EventKind::Sload;
          e.pc = ins.pc;
          e.block = st.block;
          e.constraints_at = st.constraints.size();
          e.source = ins.source_range;
          e.slot = args[0];
          e.value = value;
          st.events.push_back(e);
          break;
        }
        case OP_SSTORE: {
          if (!need(2)) return invalid();
          st.storage_writes.emplace_back(args[0], args[1]);
          Event e;
          e.kind = EventKind::Sstore;
          e.pc = ins.pc;
          e.block = st.block;
          e.constraints_at = st.constraints.size();
          e.source = ins.source_range;
          e.slot = args[0];
          e.value = args[1];
          st.events.push_back(e);
          break;
        }
        case OP_JUMP: {
          if (!need(1)) return invalid();
          BlockOutcome out;
          out.kind = BlockOutcome::Jump;
          out.target = args[0];
          out.origin = {ins.pc, st.block, ins.source_range};
          return out;
        }
        case OP_JUMPI: {
          if (!need(2)) return invalid();
          BlockOutcome out;
          out.kind = BlockOutcome::Branch;
          out.target = args[0];
          out.condition = args[1];
          out.origin = {ins.pc, st.block, ins.source_range};
          return out;
        }
        case OP_PC: push(pool_.constant(ins.pc)); break;
        case OP_MSIZE: push(pool_.constant(st.msize)); break;
        case OP_GAS: push(fresh("gas")); break;
        case OP_JUMPDEST: break;
        case OP_CREATE:
        case OP_CREATE2: {
          if (!need(op == OP_CREATE ? 3 : 4)) return invalid();
          Term address = fresh("created", TaintExtCall);
          push(address);
          Event e;
          e.kind = EventKind::Create;
          e.pc = ins.pc;
          e.block = st.block;
          e.constraints_at = st.constraints.size();
          e.source = ins.source_range;
          e.value = args[0];
          e.result = address;
          st.events.push_back(e);
          break;
        }
        case OP_CALL:
        case OP_CALLCODE:
        case OP_DELEGATECALL:
        case OP_STATICCALL: {
          size_t arity = (op == OP_CALL || op == OP_CALLCODE) ? 7 : 6;
          if (!need(arity)) return invalid();
          bool has_value = arity == 7;
          Term result = fresh("extcall", TaintExtCall);
          Event e;
          e.kind = EventKind::Call;
          e.pc = ins.pc;
          e.block = st.block;
          e.constraints_at = st.constraints.size();
          e.source = ins.source_range;
          e.opcode = op;
          e.gas = args[0];
          e.target = args[1];
          e.value = has_value ? args[2] : pool_.zero();
          e.result = result;
          st.events.push_back(e);
          // returned data is a fresh unknown
          auto out_off = small_const(args[arity - 2]);
          auto out_len = small_const(args[arity - 1]);
          if (out_off && out_len && *out_len <= 512)
            for (uint64_t w = 0; w < *out_len; w += 32) {
              Term word = fresh("returndata", TaintExtCall);
              uint64_t chunk = std::min<uint64_t>(32, *out_len - w);
              for (uint64_t i = 0; i < chunk; i++)
                st.memory[*out_off + w + i] = {word, static_cast<int>(i)};
            }
          st.returndatasize = fresh("returndatasize", TaintExtCall);
          push(result);
          break;
        }
        case OP_RETURN:
          if (!need(2)) return invalid();
          return BlockOutcome{BlockOutcome::Terminated, Termination::Return};
        case OP_REVERT:
          if (!need(2)) return invalid();
          return BlockOutcome{BlockOutcome::Terminated, Termination::Revert};
        case OP_SELFDESTRUCT: {
          if (!need(1)) return invalid();
          Event e;
          e.kind = EventKind::SelfDestruct;
          e.pc = ins.pc;
          e.block = st.block;
          e.constraints_at = st.constraints.size();
          e.source = ins.source_range;
          e.value = args[0];
          st.events.push_back(e);
          return BlockOutcome{BlockOutcome::Terminated, Termination::Stop};
        }
        default:
          return BlockOutcome{BlockOutcome::Terminated, Termination::Invalid};
      }
    }
    return BlockOutcome{BlockOutcome::Fallthrough, Termination::Stop};
  }

  static BlockOutcome invalid() {
    return BlockOutcome{BlockOutcome::Terminated, Termination::Invalid};
  }

  // ---- control flow ----

  std::optional<BlockId> block_for_target(const u256& target) {
    if (target > u256(1) << 32) return std::nullopt;
    auto bid = cfg_.block_starting_at(static_cast<size_t>(target));
    if (!bid) return std::nullopt;
    const BasicBlock& b = cfg_.blocks[*bid];
    if (cfg_.instructions[b.first_instruction].opcode != OP_JUMPDEST) return std::nullopt;
    return bid;
  }

  // Dispatcher selector compare: EQ of a calldata-derived word against a
  // small constant. Used to skip selector branches into pruned-away code.
  bool is_dispatch_compare(Term cond, BlockId target) const {
    if (!retained_) return false;
    if (retained_->count(target)) return false;
    Term t = cond;
    if (t->op == TermOp::Eq) {
      Term lhs = t->args[0], rhs = t->args[1];
      Term c = lhs->is_const() ? lhs : rhs->is_const() ? rhs : nullptr;
      Term x = lhs->is_const() ? rhs : lhs;
      if (c && c->value < (u256(1) << 32) && has_taint(x, TaintCallData)) return true;
    }
    return false;
  }

  void take_edge(SymState& st, BlockId from, BlockId to, Termination limit_kind,
                 bool& limit_hit) {
    auto key = std::make_pair(from, to);
    int& count = st.edge_counts[key];
    count++;
    int bound = back_edges_.count(key) ? limits_.loop_bound
                                       : limits_.loop_bound * 16 + 16;  // runaway guard
    if (count > bound) {
      limit_hit = true;
      finish(st, limit_kind);
      return;
    }
    limit_hit = false;
    st.block = to;
  }

  void branch_to(SymState st, BlockId to) {
    bool limit_hit = false;
    BlockId from = st.block;
    take_edge(st, from, to, Termination::LoopLimit, limit_hit);
    if (limit_hit) return;
    result_.resolved_jumps.insert({from, to});
    walk_block(std::move(st));
  }

  void walk_block(SymState st) {
    if (result_.paths.size() >= static_cast<size_t>(limits_.max_paths)) {
      result_.path_cap_hit = true;
      return;
    }
    if (out_of_time()) {
      result_.timed_out = true;
      finish(st, Termination::Timeout);
      return;
    }
    st.blocks.push_back(st.block);
    if (++st.depth > limits_.max_depth) {
      finish(st, Termination::DepthLimit);
      return;
    }

    auto outcome = exec_block(st);
    if (!outcome) {
      finish(st, Termination::Invalid);
      return;
    }

    switch (outcome->kind) {
      case BlockOutcome::Terminated:
        finish(st, outcome->termination);
        return;
      case BlockOutcome::Fallthrough: {
        auto next = cfg_.block_starting_at(cfg_.pc_after(st.block));
        if (!next) {  // running off the end of code is an implicit STOP
          finish(st, Termination::Stop);
          return;
        }
        BlockId from = st.block;
        bool limit_hit = false;
        take_edge(st, from, *next, Termination::LoopLimit, limit_hit);
        if (!limit_hit) walk_block(std::move(st));
        return;
      }
      case BlockOutcome::Jump: {
        Term target = outcome->target;
        if (target->is_const()) {
          auto to = block_for_target(target->value);
          if (!to) {
            result_.diagnostics.push_back("jump to invalid destination " +
                                          term_to_string(target));
            finish(st, Termination::Invalid);
            return;
          }
          branch_to(std::move(st), *to);
          return;
        }
        enumerate_symbolic_jump(std::move(st), target, outcome->origin);
        return;
      }
      case BlockOutcome::Branch: {
        Term cond = outcome->condition;
        Term target = outcome->target;
        if (cond->is_const()) {
          if (cond->value != 0) {
            if (!target->is_const()) {
              enumerate_symbolic_jump(std::move(st), target, outcome->origin);
              return;
            }
            auto to = block_for_target(target->value);
            if (!to) {
              finish(st, Termination::Invalid);
              return;
            }
            branch_to(std::move(st), *to);
          } else {
            fallthrough_after_branch(std::move(st));
          }
          return;
        }
        if (out_of_time()) {
          result_.timed_out = true;
          finish(st, Termination::Timeout);
          return;
        }
        // true side
        {
          bool skip = false;
          std::optional<BlockId> to;
          if (target->is_const()) {
            to = block_for_target(target->value);
            if (to && is_dispatch_compare(cond, *to)) skip = true;
          }
          if (!skip) {
            SymState tstate = st;
            tstate.add_constraint(cond, true, outcome->origin);
            if (feasible(tstate.constraints)) {
              if (target->is_const()) {
                if (to) branch_to(std::move(tstate), *to);
                else {
                  result_.diagnostics.push_back("branch to invalid destination");
                  finish(tstate, Termination::Invalid);
                }
              } else {
                enumerate_symbolic_jump(std::move(tstate), target, outcome->origin);
              }
            }
          }
        }
        // false side
        {
          SymState fstate = std::move(st);
          fstate.add_constraint(cond, false, outcome->origin);
          if (feasible(fstate.constraints)) fallthrough_after_branch(std::move(fstate));
        }
        return;
      }
    }
  }

  void fallthrough_after_branch(SymState st) {
    auto next = cfg_.block_starting_at(cfg_.pc_after(st.block));
    if (!next) {
      finish(st, Termination::Stop);
      return;
    }
    BlockId from = st.block;
    bool limit_hit = false;
    take_edge(st, from, *next, Termination::LoopLimit, limit_hit);
    if (!limit_hit) walk_block(std::move(st));
  }

  bool feasible(const std::vector<Constraint>& constraints) {
    if (out_of_time()) return false;
    return solver_.check(constraints, limits_.solver_budget_ms).feasible();
  }

  // Valid targets form a small set, so pin the symbolic target to the
  // JUMPDEST pcs and enumerate models, blocking each solution in turn.
  void enumerate_symbolic_jump(SymState st, Term target,
                               const ConstraintOrigin& origin) {
    Term in_dest_set = nullptr;
    for (const auto& b : cfg_.blocks) {
      if (b.instruction_count == 0 ||
          cfg_.instructions[b.first_instruction].opcode != OP_JUMPDEST)
        continue;
      Term eq = pool_.make(TermOp::Eq, target, pool_.constant(b.start_pc));
      in_dest_set = in_dest_set ? pool_.make(TermOp::Or, in_dest_set, eq) : eq;
    }
    if (!in_dest_set) {
      result_.diagnostics.push_back("symbolic jump but code has no JUMPDEST");
      finish(st, Termination::Invalid);
      return;
    }
    std::vector<Constraint> constraints = st.constraints;
    constraints.emplace_back(in_dest_set, true);
    int solutions = 0;
    while (solutions < limits_.max_jump_solutions) {
      if (out_of_time()) {
        result_.timed_out = true;
        finish(st, Termination::Timeout);
        return;
      }
      auto verdict = solver_.solve(constraints, {target}, limits_.solver_budget_ms);
      if (!verdict.sat() || verdict.model.empty()) break;
      u256 value = verdict.model[0];
      constraints.emplace_back(pool_.make(TermOp::Eq, target, pool_.constant(value)), false);
      auto to = block_for_target(value);
      if (!to) continue;  // stale model value; it is blocked for the next round
      solutions++;
      SymState fork = st;
      fork.add_constraint(pool_.make(TermOp::Eq, target, pool_.constant(value)), true, origin);
      branch_to(std::move(fork), *to);
    }
    if (solutions == 0) {
      result_.diagnostics.push_back("symbolic jump with no feasible JUMPDEST solution");
      finish(st, Termination::Invalid);
    }
  }

 public:
  void set_code(const Bytes& code) {
    code_ = code;
    code_size_ = code.size();
  }

 private:
  const Cfg& cfg_;
  const ExploreLimits& limits_;
  TermPool& pool_;
  SmtSolver& solver_;
  const std::set<BlockId>* retained_;
  SymEnv env_;
  std::set<std::pair<BlockId, BlockId>> back_edges_;
  Bytes code_;
  u256 code_size_ = 0;
  uint64_t fresh_counter_ = 0;
  std::chrono::steady_clock::time_point deadline_;
  ExploreResult result_;
};

inline ExploreResult explore(const Cfg& cfg, const ExploreLimits& limits, TermPool& pool,
                             SmtSolver& solver, const Bytes& full_code = {},
                             const std::set<BlockId>* retained = nullptr) {
  Explorer ex(cfg, limits, pool, solver, retained);
  ex.set_code(full_code);
  return ex.run();
}

}  // namespace snipcheck
