#pragma once

#include "snipcheck/evm.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace snipcheck {

using BlockId = size_t;

enum class Terminator { Jump, JumpI, Stop, Return, Revert, Invalid, SelfDestruct, FallThrough };

inline const char* to_string(Terminator t) {
  switch (t) {
    case Terminator::Jump: return "Jump";
    case Terminator::JumpI: return "JumpI";
    case Terminator::Stop: return "Stop";
    case Terminator::Return: return "Return";
    case Terminator::Revert: return "Revert";
    case Terminator::Invalid: return "Invalid";
    case Terminator::SelfDestruct: return "SelfDestruct";
    default: return "FallThrough";
  }
}

enum class EdgeKind { Jump, BranchTrue, BranchFalse, FallThrough, Unresolved };

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Jump: return "jump";
    case EdgeKind::BranchTrue: return "branch_true";
    case EdgeKind::BranchFalse: return "branch_false";
    case EdgeKind::FallThrough: return "fallthrough";
    default: return "unresolved";
  }
}

struct Edge {
  BlockId from = 0;
  std::optional<BlockId> to;  // empty for unresolved placeholders
  EdgeKind kind = EdgeKind::Jump;
};

struct BasicBlock {
  BlockId id = 0;
  size_t start_pc = 0;
  size_t first_instruction = 0;  // index into Cfg::instructions
  size_t instruction_count = 0;
  Terminator terminator = Terminator::FallThrough;
};

struct Cfg {
  std::vector<Instruction> instructions;
  std::vector<BasicBlock> blocks;
  std::vector<Edge> edges;
  BlockId entry_id = 0;
  std::map<size_t, BlockId> block_by_pc;  // start pc -> block
  std::vector<std::string> diagnostics;

  const BasicBlock& block(BlockId id) const { return blocks[id]; }

  std::optional<BlockId> block_starting_at(size_t pc) const {
    auto it = block_by_pc.find(pc);
    if (it == block_by_pc.end()) return std::nullopt;
    return it->second;
  }

  std::optional<BlockId> block_containing_pc(size_t pc) const {
    auto it = block_by_pc.upper_bound(pc);
    if (it == block_by_pc.begin()) return std::nullopt;
    --it;
    const BasicBlock& b = blocks[it->second];
    const Instruction& last = instructions[b.first_instruction + b.instruction_count - 1];
    if (pc > last.pc) return std::nullopt;
    return it->second;
  }

  const Instruction* instruction_at(size_t pc) const {
    auto bid = block_containing_pc(pc);
    if (!bid) return nullptr;
    const BasicBlock& b = blocks[*bid];
    for (size_t i = 0; i < b.instruction_count; i++) {
      const Instruction& ins = instructions[b.first_instruction + i];
      if (ins.pc == pc) return &ins;
    }
    return nullptr;
  }

  std::vector<Edge> edges_from(BlockId id) const {
    std::vector<Edge> out;
    for (const auto& e : edges)
      if (e.from == id) out.push_back(e);
    return out;
  }

  bool has_edge(BlockId from, BlockId to) const {
    return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
      return e.from == from && e.to && *e.to == to;
    });
  }

  bool has_unresolved_from(BlockId from) const {
    return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
      return e.from == from && e.kind == EdgeKind::Unresolved;
    });
  }

  // The pc the block falls through to (first pc after its last instruction).
  size_t pc_after(BlockId id) const {
    const BasicBlock& b = blocks[id];
    const Instruction& last = instructions[b.first_instruction + b.instruction_count - 1];
    return last.pc + last.byte_length();
  }
};

namespace detail {

// Abstract stack of maybe-constants, tracked across the straight-line tail of
// a block (bounded window) to resolve `PUSH target; JUMP` idioms.
inline std::optional<u256> resolve_static_target(const std::vector<Instruction>& ins,
                                                 size_t first, size_t count,
                                                 size_t window = 32) {
  if (count == 0) return std::nullopt;
  size_t body = count - 1;  // exclude the JUMP/JUMPI itself
  size_t start = body > window ? body - window : 0;
  std::vector<std::optional<u256>> stack;
  // Values flowing in from before the window are unknown; model an
  // effectively bottomless stack of unknowns below our tracked entries.
  auto at_depth = [&](size_t depth) -> std::optional<u256> {
    if (depth < stack.size()) return stack[stack.size() - 1 - depth];
    return std::nullopt;
  };
  for (size_t i = start; i < body; i++) {
    const Instruction& op = ins[first + i];
    if (is_push(op.opcode) || op.opcode == OP_PUSH0) {
      stack.push_back(op.push_value());
    } else if (is_dup(op.opcode)) {
      stack.push_back(at_depth(op.opcode - OP_DUP1));
    } else if (is_swap(op.opcode)) {
      size_t depth = op.opcode - OP_SWAP1 + 1;
      auto a = at_depth(0), b = at_depth(depth);
      while (stack.size() <= depth) stack.insert(stack.begin(), std::nullopt);
      stack[stack.size() - 1] = b;
      stack[stack.size() - 1 - depth] = a;
    } else if (op.opcode == OP_POP) {
      if (!stack.empty()) stack.pop_back();
    } else if (op.opcode == OP_JUMPDEST || op.opcode == OP_PC) {
      if (op.opcode == OP_PC) stack.push_back(u256(op.pc));
    } else {
      const OpInfo& info = op_info(op.opcode);
      for (int p = 0; p < info.pops; p++)
        if (!stack.empty()) stack.pop_back();
      for (int p = 0; p < info.pushes; p++) stack.push_back(std::nullopt);
    }
  }
  return at_depth(0);
}

}  // namespace detail

// Block leaders: pc 0, every JUMPDEST, every instruction after a terminator.
// Static jump targets resolve when a constant reaches the JUMP/JUMPI through
// straight-line stack effects; everything else becomes an unresolved edge for
// symbolic execution to refine.
inline Cfg build_cfg(std::vector<Instruction> instructions) {
  Cfg cfg;
  cfg.instructions = std::move(instructions);
  const auto& ins = cfg.instructions;
  if (ins.empty()) return cfg;

  std::set<size_t> leaders;  // instruction indices
  leaders.insert(0);
  for (size_t i = 0; i < ins.size(); i++) {
    if (ins[i].opcode == OP_JUMPDEST) leaders.insert(i);
    if (is_terminator(ins[i].opcode) && i + 1 < ins.size()) leaders.insert(i + 1);
  }

  std::vector<size_t> starts(leaders.begin(), leaders.end());
  for (size_t b = 0; b < starts.size(); b++) {
    BasicBlock block;
    block.id = b;
    block.first_instruction = starts[b];
    block.instruction_count = (b + 1 < starts.size() ? starts[b + 1] : ins.size()) - starts[b];
    block.start_pc = ins[block.first_instruction].pc;
    const Instruction& last = ins[block.first_instruction + block.instruction_count - 1];
    switch (last.opcode) {
      case OP_JUMP: block.terminator = Terminator::Jump; break;
      case OP_JUMPI: block.terminator = Terminator::JumpI; break;
      case OP_STOP: block.terminator = Terminator::Stop; break;
      case OP_RETURN: block.terminator = Terminator::Return; break;
      case OP_REVERT: block.terminator = Terminator::Revert; break;
      case OP_SELFDESTRUCT: block.terminator = Terminator::SelfDestruct; break;
      default:
        block.terminator = (last.opcode == OP_INVALID || last.undefined_opcode)
                               ? Terminator::Invalid
                               : Terminator::FallThrough;
    }
    cfg.blocks.push_back(block);
    cfg.block_by_pc[block.start_pc] = block.id;
  }
  cfg.entry_id = 0;

  auto jump_target_block = [&](const u256& target) -> std::optional<BlockId> {
    if (target > u256(1) << 32) return std::nullopt;
    auto bid = cfg.block_starting_at(static_cast<size_t>(target));
    if (!bid) return std::nullopt;
    const BasicBlock& b = cfg.blocks[*bid];
    if (ins[b.first_instruction].opcode != OP_JUMPDEST) return std::nullopt;
    return bid;
  };

  for (const auto& block : cfg.blocks) {
    switch (block.terminator) {
      case Terminator::Jump: {
        auto target =
            detail::resolve_static_target(ins, block.first_instruction, block.instruction_count);
        if (target) {
          auto to = jump_target_block(*target);
          if (to) cfg.edges.push_back({block.id, to, EdgeKind::Jump});
          else
            cfg.diagnostics.push_back("block " + std::to_string(block.id) +
                                      ": jump to non-JUMPDEST target " + target->str());
        } else {
          cfg.edges.push_back({block.id, std::nullopt, EdgeKind::Unresolved});
        }
        break;
      }
      case Terminator::JumpI: {
        auto target =
            detail::resolve_static_target(ins, block.first_instruction, block.instruction_count);
        if (target) {
          auto to = jump_target_block(*target);
          if (to) cfg.edges.push_back({block.id, to, EdgeKind::BranchTrue});
          else
            cfg.diagnostics.push_back("block " + std::to_string(block.id) +
                                      ": branch to non-JUMPDEST target " + target->str());
        } else {
          cfg.edges.push_back({block.id, std::nullopt, EdgeKind::Unresolved});
        }
        if (auto next = cfg.block_starting_at(cfg.pc_after(block.id)))
          cfg.edges.push_back({block.id, next, EdgeKind::BranchFalse});
        break;
      }
      case Terminator::FallThrough: {
        if (auto next = cfg.block_starting_at(cfg.pc_after(block.id)))
          cfg.edges.push_back({block.id, next, EdgeKind::FallThrough});
        break;
      }
      default:
        break;  // Stop/Return/Revert/Invalid/SelfDestruct have no successors
    }
  }
  return cfg;
}

inline Cfg build_cfg(const Bytes& bytecode) { return build_cfg(disassemble(bytecode)); }

struct Loop {
  BlockId header = 0;
  std::set<BlockId> blocks;  // includes the header
  std::set<std::pair<BlockId, BlockId>> back_edges;
};

// Natural loops from back edges under dominance; loops sharing a header are
// merged, nested loops surface as separate entries via their own headers.
inline std::vector<Loop> detect_loops(const Cfg& cfg) {
  if (cfg.blocks.empty()) return {};
  size_t n = cfg.blocks.size();

  std::vector<std::vector<BlockId>> succ(n), pred(n);
  for (const auto& e : cfg.edges) {
    if (!e.to) continue;
    succ[e.from].push_back(*e.to);
    pred[*e.to].push_back(e.from);
  }

  // reverse postorder over reachable blocks
  std::vector<int> state(n, 0);
  std::vector<BlockId> postorder;
  std::vector<BlockId> stack{cfg.entry_id};
  while (!stack.empty()) {
    BlockId b = stack.back();
    if (state[b] == 0) {
      state[b] = 1;
      for (auto s : succ[b])
        if (state[s] == 0) stack.push_back(s);
    } else {
      stack.pop_back();
      if (state[b] == 1) {
        state[b] = 2;
        postorder.push_back(b);
      }
    }
  }
  std::vector<BlockId> rpo(postorder.rbegin(), postorder.rend());
  std::vector<size_t> rpo_index(n, SIZE_MAX);
  for (size_t i = 0; i < rpo.size(); i++) rpo_index[rpo[i]] = i;

  // iterative dominators (Cooper-Harvey-Kennedy)
  constexpr BlockId kUndef = SIZE_MAX;
  std::vector<BlockId> idom(n, kUndef);
  idom[cfg.entry_id] = cfg.entry_id;
  auto intersect = [&](BlockId a, BlockId b) {
    while (a != b) {
      while (rpo_index[a] > rpo_index[b]) a = idom[a];
      while (rpo_index[b] > rpo_index[a]) b = idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (BlockId b : rpo) {
      if (b == cfg.entry_id) continue;
      BlockId new_idom = kUndef;
      for (BlockId p : pred[b]) {
        if (idom[p] == kUndef) continue;
        new_idom = new_idom == kUndef ? p : intersect(p, new_idom);
      }
      if (new_idom != kUndef && idom[b] != new_idom) {
        idom[b] = new_idom;
        changed = true;
      }
    }
  }
  auto dominates = [&](BlockId a, BlockId b) {
    // does a dominate b?
    while (true) {
      if (b == a) return true;
      if (b == cfg.entry_id || idom[b] == kUndef) return false;
      b = idom[b];
    }
  };

  std::map<BlockId, Loop> by_header;
  for (const auto& e : cfg.edges) {
    if (!e.to) continue;
    BlockId u = e.from, h = *e.to;
    if (rpo_index[u] == SIZE_MAX || rpo_index[h] == SIZE_MAX) continue;
    if (!dominates(h, u)) continue;
    Loop& loop = by_header[h];
    loop.header = h;
    loop.back_edges.insert({u, h});
    // natural loop body: everything reaching u without passing through h
    loop.blocks.insert(h);
    std::vector<BlockId> work{u};
    while (!work.empty()) {
      BlockId b = work.back();
      work.pop_back();
      if (loop.blocks.count(b)) continue;
      loop.blocks.insert(b);
      for (BlockId p : pred[b])
        if (!loop.blocks.count(p)) work.push_back(p);
    }
  }
  std::vector<Loop> loops;
  for (auto& [h, loop] : by_header) loops.push_back(std::move(loop));
  return loops;
}

// Graphviz text dump for --dump-cfg.
inline std::string to_dot(const Cfg& cfg, const std::string& title = "cfg") {
  std::ostringstream os;
  os << "digraph \"" << title << "\" {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto& b : cfg.blocks) {
    os << "  b" << b.id << " [label=\"#" << b.id << " pc " << b.start_pc << "\\n";
    size_t shown = 0;
    for (size_t i = 0; i < b.instruction_count && shown < 12; i++, shown++) {
      const Instruction& ins = cfg.instructions[b.first_instruction + i];
      os << ins.pc << ": " << ins.name();
      if (!ins.push_data.empty()) os << " 0x" << to_hex(ins.push_data);
      os << "\\l";
    }
    if (b.instruction_count > shown) os << "...\\l";
    os << "\"];\n";
  }
  for (const auto& e : cfg.edges) {
    if (e.to)
      os << "  b" << e.from << " -> b" << *e.to << " [label=\"" << to_string(e.kind) << "\"];\n";
    else
      os << "  b" << e.from << " -> unresolved_" << e.from << " [style=dashed];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace snipcheck
