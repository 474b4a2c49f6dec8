#pragma once

#include "snipcheck/cfg.hpp"
#include "snipcheck/solc.hpp"
#include "snipcheck/strings.hpp"

#include <map>
#include <regex>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace snipcheck {

// Names harvested from the raw snippet text; the anchors that tie compiled
// code back to the fragment the user actually posted.
struct SnippetInfo {
  std::set<std::string> function_names;
  std::set<std::string> contract_names;
  std::set<std::string> modifier_names;
  std::set<std::string> event_names;
  std::set<std::string> state_var_names;

  bool empty() const {
    return function_names.empty() && contract_names.empty() && modifier_names.empty() &&
           event_names.empty() && state_var_names.empty();
  }
  size_t primary_count() const { return function_names.size() + contract_names.size(); }
};

namespace detail {

inline void collect_matches(const std::string& text, const std::regex& re,
                            std::set<std::string>& out) {
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
       it != std::sregex_iterator(); ++it)
    out.insert((*it)[1].str());
}

}  // namespace detail

// Regex extraction over comment-stripped text. State variables are only
// recognized at the right brace depth: depth 1 when the snippet declares a
// contract, depth 0 for bare declaration fragments.
inline SnippetInfo extract_info(const std::string& snippet_text) {
  SnippetInfo info;
  std::string code = strip_solidity_comments(snippet_text);

  static const std::regex fn_re(R"(\bfunction\s+([A-Za-z_$][\w$]*))");
  static const std::regex contract_re(R"(\b(?:contract|library|interface)\s+([A-Za-z_$][\w$]*))");
  static const std::regex modifier_re(R"(\bmodifier\s+([A-Za-z_$][\w$]*))");
  static const std::regex event_re(R"(\bevent\s+([A-Za-z_$][\w$]*))");
  detail::collect_matches(code, fn_re, info.function_names);
  std::set<std::string> contracts;
  detail::collect_matches(code, contract_re, contracts);
  // keep only `contract X` proper for contract_names plus library/interface
  info.contract_names = contracts;
  detail::collect_matches(code, modifier_re, info.modifier_names);
  detail::collect_matches(code, event_re, info.event_names);

  int target_depth = code.find("contract ") != std::string::npos ||
                             code.find("library ") != std::string::npos ||
                             code.find("interface ") != std::string::npos
                         ? 1
                         : 0;
  static const std::regex state_var_re(
      R"(^\s*(?:uint\d{0,3}|int\d{0,3}|address(?:\s+payable)?|bool|bytes\d{0,2}|string|mapping\s*\([^;{]*\))\s+(?:(?:public|private|internal|constant|immutable|payable)\s+)*([A-Za-z_$][\w$]*)\s*(?:=[^;]*)?;)");
  int depth = 0;
  for (auto line_view : split_lines(code)) {
    std::string line(line_view);
    int depth_at_start = depth;
    for (char c : line) {
      if (c == '{') depth++;
      if (c == '}') depth--;
    }
    if (depth_at_start != target_depth) continue;
    std::smatch m;
    if (std::regex_search(line, m, state_var_re)) info.state_var_names.insert(m[1].str());
  }
  return info;
}

enum class PruneReason { InsufficientInfo, CompletionDrift };

inline const char* to_string(PruneReason r) {
  return r == PruneReason::InsufficientInfo ? "InsufficientInfo" : "CompletionDrift";
}

struct PruneFailure {
  PruneReason reason;
  std::string detail;
};

struct PrunedAst {
  std::vector<const AstNode*> subtrees;     // matched definition roots
  std::vector<SourceRange> merged_ranges;   // deduplicated, outermost only
};

struct PrunedCfg {
  const Cfg* base = nullptr;
  std::set<BlockId> retained_block_ids;
  std::map<BlockId, SourceRange> anchor_map;  // block -> witnessing source range
  PrunedAst ast;
  size_t matched_anchors = 0;  // distinct snippet names found in the AST
  size_t total_anchors = 0;
};

using PruneOutcome = std::variant<PrunedCfg, PruneFailure>;

namespace detail {

inline bool node_matches(const AstNode& n, const SnippetInfo& info, std::string* which) {
  auto hit = [&](const std::set<std::string>& names) {
    return !n.name.empty() && names.count(n.name) > 0;
  };
  if (n.kind == "ContractDefinition" && hit(info.contract_names)) { *which = n.name; return true; }
  if (n.kind == "FunctionDefinition" && hit(info.function_names)) { *which = n.name; return true; }
  if (n.kind == "ModifierDefinition" && hit(info.modifier_names)) { *which = n.name; return true; }
  if (n.kind == "EventDefinition" && hit(info.event_names)) { *which = n.name; return true; }
  if (n.kind == "VariableDeclaration" && n.state_variable && hit(info.state_var_names)) {
    *which = n.name;
    return true;
  }
  return false;
}

}  // namespace detail

// Algorithm: extract anchors from the snippet, match named definition nodes
// in the AST, take their whole subtrees, merge, then keep the CFG blocks
// whose mapped source ranges intersect the merged ranges. The two failure
// modes mirror what can go wrong upstream: a snippet with nothing to match,
// and a completion that renamed or dropped the snippet's code.
inline PruneOutcome prune(const CompileOutput& compiled, const SnippetInfo& info, const Cfg& cfg) {
  if (info.empty())
    return PruneFailure{PruneReason::InsufficientInfo,
                        "snippet has no extractable declarations to anchor on"};
  if (!compiled.ast)
    throw BridgeError("compile output carries no AST; cannot prune");
  if (compiled.source_map.empty())
    throw BridgeError("compile output carries no source map; cannot anchor blocks");

  PrunedCfg pruned;
  pruned.base = &cfg;
  std::set<std::string> found;

  std::function<void(const AstNode&)> walk = [&](const AstNode& n) {
    std::string which;
    if (detail::node_matches(n, info, &which)) {
      found.insert(which);
      pruned.ast.subtrees.push_back(&n);
      // children are inside the subtree already; still record nested hits
    }
    for (const auto& c : n.children) walk(c);
  };
  walk(*compiled.ast);

  pruned.total_anchors = info.function_names.size() + info.contract_names.size() +
                         info.modifier_names.size() + info.event_names.size() +
                         info.state_var_names.size();
  pruned.matched_anchors = found.size();

  if (found.empty())
    return PruneFailure{PruneReason::CompletionDrift,
                        "no snippet anchor survived into the compiled code"};

  // drift threshold over the primary (function/contract) anchors
  size_t primary_total = info.primary_count();
  if (primary_total > 0) {
    size_t primary_found = 0;
    for (auto& name : found)
      if (info.function_names.count(name) || info.contract_names.count(name)) primary_found++;
    if (primary_found * 2 < primary_total) {
      return PruneFailure{PruneReason::CompletionDrift,
                          std::to_string(primary_found) + " of " + std::to_string(primary_total) +
                              " function/contract anchors found"};
    }
  }

  // merge subtree ranges, dropping ranges contained in another
  std::vector<SourceRange> ranges;
  for (auto* node : pruned.ast.subtrees) ranges.push_back(node->range);
  for (const auto& r : ranges) {
    bool inside_other = false;
    for (const auto& o : ranges) {
      if (&o == &r) continue;
      if (o.contains(r) && !(o.offset == r.offset && o.length == r.length)) {
        inside_other = true;
        break;
      }
    }
    if (!inside_other) {
      bool dup = false;
      for (const auto& kept : pruned.ast.merged_ranges)
        if (kept.offset == r.offset && kept.length == r.length) dup = true;
      if (!dup) pruned.ast.merged_ranges.push_back(r);
    }
  }

  for (const auto& block : cfg.blocks) {
    for (size_t i = 0; i < block.instruction_count; i++) {
      const auto& ins = cfg.instructions[block.first_instruction + i];
      if (!ins.source_range.valid() || ins.source_range.file != 0) continue;
      for (const auto& r : pruned.ast.merged_ranges) {
        if (ins.source_range.intersects(r)) {
          pruned.retained_block_ids.insert(block.id);
          pruned.anchor_map.emplace(block.id, ins.source_range);
          break;
        }
      }
      if (pruned.retained_block_ids.count(block.id)) break;
    }
  }
  return pruned;
}

}  // namespace snipcheck
