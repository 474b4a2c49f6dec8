#pragma once

#include "snipcheck/pruner.hpp"
#include "snipcheck/symexec.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace snipcheck {

// The nine concrete DASP10 classes.
enum class VulnKind { RE, AC, AI, URV, DoS, BR, FR, TM, SAA };

inline const char* to_string(VulnKind k) {
  switch (k) {
    case VulnKind::RE: return "RE";
    case VulnKind::AC: return "AC";
    case VulnKind::AI: return "AI";
    case VulnKind::URV: return "URV";
    case VulnKind::DoS: return "DoS";
    case VulnKind::BR: return "BR";
    case VulnKind::FR: return "FR";
    case VulnKind::TM: return "TM";
    default: return "SAA";
  }
}

inline std::optional<VulnKind> vuln_kind_from_string(std::string_view s) {
  static const std::map<std::string, VulnKind, std::less<>> table = {
      {"RE", VulnKind::RE}, {"AC", VulnKind::AC}, {"AI", VulnKind::AI},
      {"URV", VulnKind::URV}, {"DoS", VulnKind::DoS}, {"BR", VulnKind::BR},
      {"FR", VulnKind::FR}, {"TM", VulnKind::TM}, {"SAA", VulnKind::SAA}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline const std::vector<VulnKind>& all_vuln_kinds() {
  static const std::vector<VulnKind> kinds = {
      VulnKind::RE, VulnKind::AC, VulnKind::AI, VulnKind::URV, VulnKind::DoS,
      VulnKind::BR, VulnKind::FR, VulnKind::TM, VulnKind::SAA};
  return kinds;
}

struct Finding {
  VulnKind kind;
  SourceRange source_range;
  std::vector<BlockId> block_ids;
  std::string witness;     // solver model and/or trace excerpt
  std::string confidence;  // "pruned" or "unpruned"
  std::string note;
};

struct AnalysisContext {
  const ExploreResult& exploration;
  const Cfg& cfg;
  const std::vector<Loop>& loops;
  const CompileOutput& compiled;
  const PrunedCfg* pruned = nullptr;  // non-null only when pruning succeeded
  TermPool& pool;
  SmtSolver& solver;
  int64_t solver_budget_ms = 5000;
};

namespace detail {

inline bool committing(const PathResult& p) {
  return p.termination == Termination::Stop || p.termination == Termination::Return;
}

// Detectors require Sat (not merely not-Unsat) before reporting.
class PathFeasibility {
 public:
  PathFeasibility(AnalysisContext& ctx) : ctx_(ctx) {}

  bool feasible(size_t path_index) {
    auto it = cache_.find(path_index);
    if (it != cache_.end()) return it->second;
    const auto& p = ctx_.exploration.paths[path_index];
    bool ok = p.constraints.empty() ||
              ctx_.solver.check(p.constraints, ctx_.solver_budget_ms).sat();
    cache_[path_index] = ok;
    return ok;
  }

 private:
  AnalysisContext& ctx_;
  std::map<size_t, bool> cache_;
};

inline std::string trace_excerpt(const PathResult& p, size_t limit = 8) {
  std::ostringstream os;
  size_t start = p.trace.size() > limit ? p.trace.size() - limit : 0;
  for (size_t i = start; i < p.trace.size(); i++) {
    if (i > start) os << " ";
    os << p.trace[i].first << ":" << op_info(p.trace[i].second).name;
  }
  return os.str();
}

inline std::string model_string(const std::vector<Term>& terms, const std::vector<u256>& values) {
  std::ostringstream os;
  for (size_t i = 0; i < terms.size() && i < values.size(); i++) {
    if (i) os << ", ";
    os << term_to_string(terms[i]) << " = " << values[i].str();
  }
  return os.str();
}

inline bool term_has_eq_on_var(Term t, std::string_view var) {
  std::set<uint32_t> seen;
  std::function<bool(Term)> walk = [&](Term n) -> bool {
    if (!seen.insert(n->id).second) return false;
    if (n->op == TermOp::Eq && (mentions_var(n->args[0], var) || mentions_var(n->args[1], var)))
      return true;
    for (auto a : n->args)
      if (walk(a)) return true;
    return false;
  };
  return walk(t);
}

inline void collect_sload_slots(Term t, std::set<Term>& slots) {
  std::set<uint32_t> seen;
  std::function<void(Term)> walk = [&](Term n) {
    if (!seen.insert(n->id).second) return;
    if (n->op == TermOp::SloadBase) slots.insert(n->args[0]);
    for (auto a : n->args) walk(a);
  };
  walk(t);
}

// Dispatch selector for a path: the constant compared (positively) against a
// calldata-derived word in the dispatcher prefix.
inline std::optional<u256> path_selector(const PathResult& p) {
  for (size_t i = 0; i < p.constraints.size(); i++) {
    const auto& [t, taken] = p.constraints[i];
    if (!taken || t->op != TermOp::Eq) continue;
    Term lhs = t->args[0], rhs = t->args[1];
    Term c = lhs->is_const() ? lhs : rhs->is_const() ? rhs : nullptr;
    Term x = lhs->is_const() ? rhs : lhs;
    if (c && c->value < (u256(1) << 32) && has_taint(x, TaintCallData)) return c->value;
  }
  return std::nullopt;
}

inline bool call_can_transfer_value(const Event& e) {
  if (e.kind == EventKind::SelfDestruct) return true;
  if (e.kind != EventKind::Call) return false;
  if (e.opcode != OP_CALL && e.opcode != OP_CALLCODE) return false;
  return !(e.value->is_const() && e.value->value == 0);
}

inline bool gas_forwarded(const Event& e) {
  // transfer/send cap gas at the 2300 stipend; anything above or symbolic
  // counts as forwarding gas
  if (!e.gas) return false;
  if (e.gas->is_const()) return e.gas->value > 2300;
  return true;
}

struct Collector {
  AnalysisContext& ctx;
  std::vector<Finding> findings;

  void add(VulnKind kind, SourceRange range, std::vector<BlockId> blocks, std::string witness,
           std::string note = "") {
    Finding f;
    f.kind = kind;
    f.source_range = range;
    f.block_ids = std::move(blocks);
    f.witness = std::move(witness);
    f.note = std::move(note);
    f.confidence = ctx.pruned ? "pruned" : "unpruned";
    findings.push_back(std::move(f));
  }
};

}  // namespace detail

// --- individual patterns ---------------------------------------------------

namespace detectors {

// Reentrancy: an external call that forwards value or gas, followed on the
// same path by a store to a slot that was read before the call.
inline void detect_re(AnalysisContext& ctx, detail::PathFeasibility& feas,
                      detail::Collector& out) {
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    for (size_t ci = 0; ci < p.events.size(); ci++) {
      const Event& call = p.events[ci];
      if (call.kind != EventKind::Call) continue;
      if (call.opcode != OP_CALL && call.opcode != OP_CALLCODE &&
          call.opcode != OP_DELEGATECALL)
        continue;
      bool value_possible = !(call.value->is_const() && call.value->value == 0);
      if (!value_possible && !detail::gas_forwarded(call)) continue;
      for (size_t wi = ci + 1; wi < p.events.size(); wi++) {
        const Event& write = p.events[wi];
        if (write.kind != EventKind::Sstore) continue;
        bool read_before = false;
        for (size_t ri = 0; ri < ci; ri++) {
          const Event& read = p.events[ri];
          if (read.kind == EventKind::Sload && read.slot == write.slot) read_before = true;
        }
        if (!read_before) continue;
        if (!feas.feasible(pi)) continue;
        out.add(VulnKind::RE, call.source, {call.block, write.block},
                "state written after external call; trace: " + detail::trace_excerpt(p));
        break;
      }
    }
  }
}

// Access control: tx.origin inside a branch guard, or a state change with no
// caller-dependent gate. Writes to caller-keyed slots gate themselves.
inline void detect_ac(AnalysisContext& ctx, detail::PathFeasibility& feas,
                      detail::Collector& out) {
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    for (size_t i = 0; i < p.constraints.size(); i++) {
      if (!mentions_var(p.constraints[i].first, "ORIGIN")) continue;
      if (!feas.feasible(pi)) break;
      const auto& origin = p.constraint_origins[i];
      out.add(VulnKind::AC, origin.source, {origin.block},
              "tx.origin used in an authorization guard");
    }
    if (!detail::committing(p)) continue;
    for (const Event& e : p.events) {
      if (e.kind != EventKind::Sstore && e.kind != EventKind::SelfDestruct) continue;
      if (e.kind == EventKind::Sstore && mentions_var(e.slot, "CALLER")) continue;
      bool caller_gated = false;
      for (size_t i = 0; i < e.constraints_at && i < p.constraints.size(); i++)
        if (mentions_var(p.constraints[i].first, "CALLER")) caller_gated = true;
      if (caller_gated) continue;
      if (!feas.feasible(pi)) break;
      out.add(VulnKind::AC, e.source, {e.block},
              e.kind == EventKind::SelfDestruct
                  ? "selfdestruct reachable without a caller check"
                  : "state write reachable without a caller check");
    }
  }
}

// Arithmetic issues: a feasible path where the wrapped result of ADD/SUB/MUL
// differs from the unbounded result and no later guard excludes that model.
// Compilers with checked arithmetic suppress this outside unchecked blocks.
inline void detect_ai(AnalysisContext& ctx, detail::PathFeasibility& feas,
                      detail::Collector& out) {
  auto version = SemVer::parse(ctx.compiled.version);
  bool checked_by_default = version && (*version >= SemVer{0, 8, 0});
  std::vector<SourceRange> unchecked_ranges;
  if (ctx.compiled.ast)
    ctx.compiled.ast->walk([&](const AstNode& n) {
      if (n.kind == "UncheckedBlock") unchecked_ranges.push_back(n.range);
    });
  auto in_unchecked = [&](const SourceRange& r) {
    for (auto& u : unchecked_ranges)
      if (u.contains(r) || u.intersects(r)) return true;
    return false;
  };

  std::set<std::pair<size_t, uint8_t>> queried;  // (pc, op): one query per site
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    for (const Event& e : p.events) {
      if (e.kind != EventKind::Arith) continue;
      if (checked_by_default && !in_unchecked(e.source)) continue;
      if (!queried.insert({e.pc, e.opcode}).second) continue;
      if (e.a->is_const() && e.b->is_const()) {
        // fully concrete: flag only a real wrap
        bool wraps = false;
        if (e.opcode == OP_ADD) wraps = e.a->value + e.b->value < e.a->value;
        else if (e.opcode == OP_SUB) wraps = e.a->value < e.b->value;
        else if (e.opcode == OP_MUL)
          wraps = e.a->value != 0 && (e.a->value * e.b->value) / e.a->value != e.b->value;
        if (wraps && feas.feasible(pi))
          out.add(VulnKind::AI, e.source, {e.block}, "constant arithmetic wraps");
        continue;
      }
      std::vector<Constraint> q = p.constraints;
      TermPool& pool = ctx.pool;
      if (e.opcode == OP_ADD) {
        Term sum = pool.make(TermOp::Add, e.a, e.b);
        q.emplace_back(pool.make(TermOp::Lt, sum, e.a), true);
      } else if (e.opcode == OP_SUB) {
        q.emplace_back(pool.make(TermOp::Lt, e.a, e.b), true);
      } else if (e.opcode == OP_MUL) {
        Term product = pool.make(TermOp::Mul, e.a, e.b);
        q.emplace_back(e.a, true);  // a != 0
        q.emplace_back(pool.make(TermOp::Eq, pool.make(TermOp::Div, product, e.a), e.b), false);
      } else {
        continue;
      }
      auto verdict = ctx.solver.solve(q, {e.a, e.b}, ctx.solver_budget_ms);
      if (verdict.sat())
        out.add(VulnKind::AI, e.source, {e.block},
                "overflowing model: " + detail::model_string({e.a, e.b}, verdict.model));
    }
  }
}

// Unchecked return value: the result of call/callcode/delegatecall/send never
// reaches any branch condition on the path.
inline void detect_urv(AnalysisContext& ctx, detail::PathFeasibility& feas,
                       detail::Collector& out) {
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    for (const Event& e : p.events) {
      if (e.kind != EventKind::Call) continue;
      if (e.opcode == OP_STATICCALL) continue;  // compiler-checked view calls
      bool checked = false;
      for (const auto& [t, taken] : p.constraints)
        if (mentions_var(t, e.result->name)) checked = true;
      if (checked) continue;
      if (!feas.feasible(pi)) break;
      out.add(VulnKind::URV, e.source, {e.block},
              "result of external call ignored on this path; trace: " +
                  detail::trace_excerpt(p));
    }
  }
}

// Denial of service: a CFG loop whose body executes a call-family opcode. No
// solver involvement; loop structure plus the opcode is the whole pattern.
inline void detect_dos(AnalysisContext& ctx, detail::Collector& out) {
  for (const Loop& loop : ctx.loops) {
    for (BlockId bid : loop.blocks) {
      const BasicBlock& b = ctx.cfg.blocks[bid];
      for (size_t i = 0; i < b.instruction_count; i++) {
        const Instruction& ins = ctx.cfg.instructions[b.first_instruction + i];
        if (is_call_family(ins.opcode)) {
          std::vector<BlockId> blocks(loop.blocks.begin(), loop.blocks.end());
          out.add(VulnKind::DoS, ins.source_range, blocks,
                  std::string("loop at block ") + std::to_string(loop.header) +
                      " executes " + ins.name());
        }
      }
    }
  }
}

// Bad randomness: a block-environment value feeds a transfer's amount or
// recipient, or the condition guarding one.
inline void detect_br(AnalysisContext& ctx, detail::PathFeasibility& feas,
                      detail::Collector& out) {
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    for (const Event& e : p.events) {
      if (!detail::call_can_transfer_value(e)) continue;
      bool amount_tainted = e.value && has_taint(e.value, TaintBlockEnv);
      bool recipient_tainted = e.kind == EventKind::Call
                                   ? has_taint(e.target, TaintBlockEnv)
                                   : has_taint(e.value, TaintBlockEnv);
      if (amount_tainted || recipient_tainted) {
        if (!feas.feasible(pi)) break;
        out.add(VulnKind::BR, e.source, {e.block},
                amount_tainted ? "transfer amount derived from block environment"
                               : "transfer recipient derived from block environment");
        continue;
      }
      for (size_t i = 0; i < e.constraints_at && i < p.constraints.size(); i++) {
        if (!has_taint(p.constraints[i].first, TaintBlockEnv)) continue;
        if (!feas.feasible(pi)) break;
        const auto& origin = p.constraint_origins[i];
        out.add(VulnKind::BR, origin.source, {origin.block, e.block},
                "transfer guarded by a block-environment condition");
        break;
      }
    }
  }
}

// Front running: one dispatch entry's transfer is guarded by a storage slot
// that a different entry writes. Conservative, hence the note.
inline void detect_fr(AnalysisContext& ctx, detail::PathFeasibility& feas,
                      detail::Collector& out) {
  struct Writer {
    u256 selector;
    Term slot;
  };
  std::vector<Writer> writers;
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    auto sel = detail::path_selector(p);
    if (!sel) continue;
    for (const Event& e : p.events)
      if (e.kind == EventKind::Sstore) writers.push_back({*sel, e.slot});
  }
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    auto sel = detail::path_selector(p);
    if (!sel) continue;
    for (const Event& e : p.events) {
      if (!detail::call_can_transfer_value(e)) continue;
      for (size_t i = 0; i < e.constraints_at && i < p.constraints.size(); i++) {
        std::set<Term> slots;
        detail::collect_sload_slots(p.constraints[i].first, slots);
        for (Term slot : slots) {
          bool foreign_writer = false;
          for (const auto& w : writers)
            if (w.slot == slot && w.selector != *sel) foreign_writer = true;
          if (!foreign_writer) continue;
          if (!feas.feasible(pi)) return;
          const auto& origin = p.constraint_origins[i];
          out.add(VulnKind::FR, origin.source, {origin.block, e.block},
                  "transfer guard reads state another entry point writes",
                  "conservative pattern");
          break;
        }
      }
    }
  }
}

// Time manipulation: a timestamp-tainted condition guards a state change or
// transfer, or the timestamp shapes a transferred amount.
inline void detect_tm(AnalysisContext& ctx, detail::PathFeasibility& feas,
                      detail::Collector& out) {
  for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
    const auto& p = ctx.exploration.paths[pi];
    if (!detail::committing(p)) continue;
    for (const Event& e : p.events) {
      bool is_state_change = e.kind == EventKind::Sstore || e.kind == EventKind::SelfDestruct;
      bool is_transfer = detail::call_can_transfer_value(e);
      if (!is_state_change && !is_transfer) continue;
      if (is_transfer && e.kind == EventKind::Call && has_taint(e.value, TaintTimestamp)) {
        if (!feas.feasible(pi)) break;
        out.add(VulnKind::TM, e.source, {e.block}, "transfer amount depends on block.timestamp");
        continue;
      }
      for (size_t i = 0; i < e.constraints_at && i < p.constraints.size(); i++) {
        if (!has_taint(p.constraints[i].first, TaintTimestamp)) continue;
        if (!feas.feasible(pi)) break;
        const auto& origin = p.constraint_origins[i];
        out.add(VulnKind::TM, origin.source, {origin.block, e.block},
                std::string("block.timestamp guards a ") +
                    (is_transfer ? "transfer" : "state change"));
        break;
      }
    }
  }
}

// Short address attack: a public function taking (address, integer) with no
// calldatasize equality guard anywhere on its paths.
inline void detect_saa(AnalysisContext& ctx, detail::PathFeasibility& feas,
                       detail::Collector& out) {
  if (!ctx.compiled.abi.is_array() || !ctx.compiled.ast) return;
  for (const auto& entry : ctx.compiled.abi) {
    if (detail::json_string(entry, "type") != "function") continue;
    const json inputs = entry.contains("inputs") && entry["inputs"].is_array()
                        ? entry["inputs"]
                        : json::array();
    bool shape = false;
    for (size_t i = 0; i + 1 < inputs.size(); i++) {
      std::string t0 = detail::json_string(inputs[i], "type");
      std::string t1 = detail::json_string(inputs[i + 1], "type");
      if (t0 == "address" && (starts_with(t1, "uint") || starts_with(t1, "int")) &&
          t1.find('[') == std::string::npos)
        shape = true;
    }
    if (!shape) continue;
    std::string name = detail::json_string(entry, "name");
    std::string signature = name + "(";
    for (size_t i = 0; i < inputs.size(); i++)
      signature += std::string(i ? "," : "") + detail::json_string(inputs[i], "type");
    signature += ")";
    auto hash = keccak256(reinterpret_cast<const uint8_t*>(signature.data()), signature.size());
    u256 selector = u256_from_be(hash.data(), 4);

    bool guarded = false, reached = false;
    for (size_t pi = 0; pi < ctx.exploration.paths.size(); pi++) {
      const auto& p = ctx.exploration.paths[pi];
      auto sel = detail::path_selector(p);
      if (!sel || *sel != selector) continue;
      reached = true;
      for (const auto& [t, taken] : p.constraints)
        if (detail::term_has_eq_on_var(t, "CALLDATASIZE")) guarded = true;
    }
    if (guarded) continue;
    (void)reached;  // unreached functions stay flagged: nothing proved a guard
    // finding anchored at the function definition
    const AstNode* fn_node = nullptr;
    ctx.compiled.ast->walk([&](const AstNode& n) {
      if (n.kind == "FunctionDefinition" && n.name == name && !fn_node) fn_node = &n;
    });
    if (!fn_node) continue;
    std::vector<BlockId> blocks;
    for (const auto& b : ctx.cfg.blocks) {
      for (size_t i = 0; i < b.instruction_count; i++) {
        const auto& ins = ctx.cfg.instructions[b.first_instruction + i];
        if (ins.source_range.valid() && ins.source_range.file == 0 &&
            fn_node->range.contains(ins.source_range)) {
          blocks.push_back(b.id);
          break;
        }
      }
    }
    out.add(VulnKind::SAA, fn_node->range, blocks,
            "function " + signature + " accepts (address, integer) without a calldatasize check");
  }
  (void)feas;
}

}  // namespace detectors

// Runs all nine patterns, drops findings outside the pruned region when
// pruning succeeded, and deduplicates by (kind, source range), ordered by
// (kind, start offset) ascending.
inline std::vector<Finding> detect_all(AnalysisContext& ctx) {
  detail::PathFeasibility feas(ctx);
  detail::Collector out{ctx, {}};

  detectors::detect_re(ctx, feas, out);
  detectors::detect_ac(ctx, feas, out);
  detectors::detect_ai(ctx, feas, out);
  detectors::detect_urv(ctx, feas, out);
  detectors::detect_dos(ctx, out);
  detectors::detect_br(ctx, feas, out);
  detectors::detect_fr(ctx, feas, out);
  detectors::detect_tm(ctx, feas, out);
  detectors::detect_saa(ctx, feas, out);

  std::vector<Finding> kept;
  for (auto& f : out.findings) {
    if (ctx.pruned) {
      bool inside = false;
      for (BlockId b : f.block_ids)
        if (ctx.pruned->retained_block_ids.count(b)) inside = true;
      if (!inside) continue;
    }
    kept.push_back(std::move(f));
  }

  std::sort(kept.begin(), kept.end(), [](const Finding& a, const Finding& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.source_range.offset < b.source_range.offset;
  });
  std::vector<Finding> deduped;
  for (auto& f : kept) {
    if (!deduped.empty() && deduped.back().kind == f.kind &&
        deduped.back().source_range.offset == f.source_range.offset &&
        deduped.back().source_range.length == f.source_range.length)
      continue;
    deduped.push_back(std::move(f));
  }
  return deduped;
}

}  // namespace snipcheck
