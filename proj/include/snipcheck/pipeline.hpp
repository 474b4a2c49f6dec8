#pragma once

#include "snipcheck/detectors.hpp"
#include "snipcheck/pruner.hpp"
#include "snipcheck/repair.hpp"
#include "snipcheck/symexec.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace snipcheck {

// Everything the detection stages produce for one compiled contract. The
// TermPool lives here so findings/paths stay valid for the caller.
struct ContractAnalysis {
  CompileOutput compiled;
  Cfg cfg;
  std::vector<Loop> loops;
  ExploreResult exploration;
  std::optional<PruneOutcome> prune_outcome;  // empty when pruning disabled
  std::vector<Finding> findings;
  std::shared_ptr<TermPool> pool = std::make_shared<TermPool>();

  bool prune_succeeded() const {
    return prune_outcome && std::holds_alternative<PrunedCfg>(*prune_outcome);
  }
  const PrunedCfg* pruned() const {
    return prune_succeeded() ? &std::get<PrunedCfg>(*prune_outcome) : nullptr;
  }
  const PruneFailure* prune_failure() const {
    return prune_outcome && std::holds_alternative<PruneFailure>(*prune_outcome)
               ? &std::get<PruneFailure>(*prune_outcome)
               : nullptr;
  }
};

// cfg + prune + explore + detect over an already compiled contract.
// `snippet_info` enables pruning; on prune failure the whole contract is
// analyzed and findings are tagged unpruned.
inline ContractAnalysis analyze_compiled(CompileOutput compiled, SmtSolver& solver,
                                         const ExploreLimits& limits,
                                         const SnippetInfo* snippet_info = nullptr) {
  ContractAnalysis a;
  a.compiled = std::move(compiled);

  auto instructions = disassemble(a.compiled.runtime_bytecode);
  annotate_source_ranges(instructions, a.compiled.source_map);
  a.cfg = build_cfg(std::move(instructions));
  a.loops = detect_loops(a.cfg);

  const std::set<BlockId>* retained = nullptr;
  if (snippet_info) {
    a.prune_outcome = prune(a.compiled, *snippet_info, a.cfg);
    if (auto* ok = std::get_if<PrunedCfg>(&*a.prune_outcome)) retained = &ok->retained_block_ids;
  }

  a.exploration =
      explore(a.cfg, limits, *a.pool, solver, a.compiled.runtime_bytecode, retained);

  AnalysisContext ctx{a.exploration, a.cfg,   a.loops,          a.compiled,
                      a.pruned(),    *a.pool, solver,           limits.solver_budget_ms};
  a.findings = detect_all(ctx);
  return a;
}

// adapt-compile a full contract source, then analyze it.
inline ContractAnalysis analyze_contract_source(const std::string& source,
                                                const CompilerCatalog& catalog,
                                                SmtSolver& solver, const ExploreLimits& limits,
                                                const SnippetInfo* snippet_info = nullptr) {
  auto outcome = adapt_version(source, catalog);
  if (!outcome.ok()) {
    ContractAnalysis a;
    for (auto& [version, diags] : outcome.failure.attempts)
      for (auto& d : diags)
        a.compiled.diagnostics.push_back(
            {Severity::Error, "[" + version + "] " + d.message, d.range});
    return a;
  }
  return analyze_compiled(std::move(outcome.result->output), solver, limits, snippet_info);
}

}  // namespace snipcheck
