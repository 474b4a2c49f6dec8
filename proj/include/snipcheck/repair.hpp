#pragma once

#include "snipcheck/solc.hpp"
#include "snipcheck/strings.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace snipcheck {

struct StructuralIssue {
  std::string message;
  size_t position = 0;  // byte offset in the input
};

struct RepairOutcome {
  std::string repaired_source;
  std::vector<std::pair<size_t, char>> inserted_symbols;  // (position, symbol)
  std::optional<StructuralIssue> error;

  bool ok() const { return !error.has_value(); }
};

// Appends the minimal closing-symbol sequence that balances ()/{}/[] pairs,
// innermost first, at end of source. String and comment contexts are skipped.
// Surplus closers and unterminated strings/block comments are reported as
// structural errors instead of being "fixed".
inline RepairOutcome balance_structure(const std::string& source) {
  RepairOutcome out;
  std::vector<std::pair<char, size_t>> stack;  // opener + position
  enum { Code, LineComment, BlockComment, Str } state = Code;
  char quote = 0;
  size_t string_start = 0;
  for (size_t i = 0; i < source.size(); i++) {
    char c = source[i];
    char next = i + 1 < source.size() ? source[i + 1] : 0;
    switch (state) {
      case Code:
        if (c == '/' && next == '/') { state = LineComment; i++; }
        else if (c == '/' && next == '*') { state = BlockComment; string_start = i; i++; }
        else if (c == '"' || c == '\'') { state = Str; quote = c; string_start = i; }
        else if (c == '(' || c == '{' || c == '[') stack.emplace_back(c, i);
        else if (c == ')' || c == '}' || c == ']') {
          char expected = c == ')' ? '(' : c == '}' ? '{' : '[';
          if (stack.empty() || stack.back().first != expected) {
            out.error = {std::string("surplus or mismatched closer '") + c + "'", i};
            out.repaired_source = source;
            return out;
          }
          stack.pop_back();
        }
        break;
      case LineComment:
        if (c == '\n') state = Code;
        break;
      case BlockComment:
        if (c == '*' && next == '/') { state = Code; i++; }
        break;
      case Str:
        if (c == '\\') i++;
        else if (c == quote) state = Code;
        break;
    }
  }
  if (state == Str) {
    out.error = {"unterminated string literal", string_start};
    out.repaired_source = source;
    return out;
  }
  if (state == BlockComment) {
    out.error = {"unterminated block comment", string_start};
    out.repaired_source = source;
    return out;
  }
  out.repaired_source = source;
  while (!stack.empty()) {
    char opener = stack.back().first;
    stack.pop_back();
    char closer = opener == '(' ? ')' : opener == '{' ? '}' : ']';
    out.inserted_symbols.emplace_back(out.repaired_source.size(), closer);
    out.repaired_source += closer;
  }
  return out;
}

// Replaces every `pragma solidity` line with an exact-version pragma (or
// prepends one when the source has none). All other lines are untouched.
inline std::string set_pragma(const std::string& source, const std::string& version) {
  std::string pragma_line = "pragma solidity " + version + ";";
  std::string out;
  bool replaced = false;
  size_t start = 0;
  while (start <= source.size()) {
    size_t nl = source.find('\n', start);
    size_t end = nl == std::string::npos ? source.size() : nl;
    std::string_view line(source.data() + start, end - start);
    auto t = trim_view(line);
    if (starts_with(t, "pragma") && t.find("solidity") != std::string_view::npos) {
      out += pragma_line;
      replaced = true;
    } else {
      out.append(line);
    }
    if (nl == std::string::npos) break;
    out += '\n';
    start = nl + 1;
  }
  if (!replaced) out = pragma_line + "\n" + out;
  return out;
}

// First x.y found in the source's own pragma, if any.
inline std::optional<SemVer> pragma_series(const std::string& source) {
  size_t pos = source.find("pragma solidity");
  if (pos == std::string::npos) return std::nullopt;
  size_t semi = source.find(';', pos);
  std::string_view expr(source.data() + pos, (semi == std::string::npos ? source.size() : semi) - pos);
  for (size_t i = 0; i < expr.size(); i++) {
    if (expr[i] >= '0' && expr[i] <= '9') {
      size_t j = i;
      int dots = 0;
      while (j < expr.size() && ((expr[j] >= '0' && expr[j] <= '9') || expr[j] == '.')) {
        if (expr[j] == '.') dots++;
        j++;
      }
      if (dots >= 1)
        if (auto v = SemVer::parse(expr.substr(i, j - i))) return v;
      i = j;
    }
  }
  return std::nullopt;
}

struct AdaptResult {
  std::string version;
  std::string adapted_source;  // pragma rewritten to the chosen version
  CompileOutput output;
};

struct AdaptFailure {
  // per-version error diagnostics, in trial order
  std::vector<std::pair<std::string, std::vector<Diagnostic>>> attempts;
};

struct AdaptOutcome {
  std::optional<AdaptResult> result;
  AdaptFailure failure;

  bool ok() const { return result.has_value(); }
};

// Trial order: the series implied by the source's own pragma first, then the
// catalog's versions newest to oldest. Ties (several compiling versions)
// resolve to the first hit, i.e. the newest.
inline std::vector<std::string> version_trial_order(const std::string& source,
                                                    const CompilerCatalog& catalog) {
  std::vector<std::string> order;
  auto versions = catalog.versions();
  auto series = pragma_series(source);
  if (series) {
    for (auto& v : versions) {
      auto sv = SemVer::parse(v);
      if (sv && sv->same_series(*series)) {
        order.push_back(v);
        break;
      }
    }
  }
  for (auto& v : versions)
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  return order;
}

inline AdaptOutcome adapt_version(const std::string& source, const CompilerCatalog& catalog) {
  if (catalog.empty()) throw ConfigError("compiler catalog is empty");
  AdaptOutcome out;
  for (auto& version : version_trial_order(source, catalog)) {
    std::string candidate = set_pragma(source, version);
    CompileOutput compiled = compile(candidate, version, catalog);
    if (compiled.ok() && !compiled.runtime_bytecode.empty()) {
      out.result = {version, std::move(candidate), std::move(compiled)};
      return out;
    }
    std::vector<Diagnostic> errors;
    for (auto& d : compiled.diagnostics)
      if (d.severity == Severity::Error) errors.push_back(d);
    if (errors.empty() && compiled.runtime_bytecode.empty())
      errors.push_back({Severity::Error, "compiler produced no runtime bytecode", {}});
    out.failure.attempts.emplace_back(version, std::move(errors));
  }
  return out;
}

}  // namespace snipcheck
