#pragma once

#include "snipcheck/config.hpp"
#include "snipcheck/errors.hpp"
#include "snipcheck/keccak.hpp"
#include "snipcheck/strings.hpp"
#include "snipcheck/subprocess.hpp"
#include "snipcheck/u256.hpp"

#include <nlohmann/json.hpp>
#include <unistd.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace snipcheck {

using json = nlohmann::json;

struct SemVer {
  int major = 0, minor = 0, patch = 0;

  static std::optional<SemVer> parse(std::string_view s) {
    SemVer v;
    int field = 0;
    int value = 0;
    bool any = false;
    for (char c : s) {
      if (c >= '0' && c <= '9') {
        value = value * 10 + (c - '0');
        any = true;
      } else if (c == '.') {
        if (!any || field >= 2) return std::nullopt;
        (field == 0 ? v.major : v.minor) = value;
        value = 0;
        any = false;
        field++;
      } else {
        return std::nullopt;
      }
    }
    if (!any) return std::nullopt;
    (field == 0 ? v.major : field == 1 ? v.minor : v.patch) = value;
    return v;
  }

  auto operator<=>(const SemVer&) const = default;
  bool same_series(const SemVer& o) const { return major == o.major && minor == o.minor; }
};

struct SourceRange {
  int64_t offset = -1;
  int64_t length = 0;
  int file = -1;

  bool valid() const { return offset >= 0 && file >= 0; }
  int64_t end() const { return offset + length; }
  bool intersects(const SourceRange& o) const {
    return valid() && o.valid() && offset < o.end() && o.offset < end();
  }
  bool contains(const SourceRange& o) const {
    return valid() && o.valid() && offset <= o.offset && o.end() <= end();
  }
};

enum class Severity { Error, Warning, Info };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  SourceRange range;
};

struct AstNode {
  std::string kind;      // solc node type, e.g. "ContractDefinition"
  std::string name;      // empty when the node is unnamed
  SourceRange range;
  bool state_variable = false;
  std::string visibility;
  std::string type_string;  // for VariableDeclaration
  std::string fn_kind;      // constructor / function / fallback / receive
  std::vector<AstNode> children;

  template <typename F>
  void walk(F&& fn) const {
    fn(*this);
    for (const auto& c : children) c.walk(fn);
  }
};

struct CompileOutput {
  std::string version;
  std::optional<AstNode> ast;
  Bytes runtime_bytecode;
  std::vector<SourceRange> source_map;  // one entry per instruction
  std::vector<Diagnostic> diagnostics;
  std::string contract_name;
  json abi = json::array();

  bool ok() const {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == Severity::Error; });
  }
};

namespace detail {

// json::value() throws on present-but-null entries; the compiler emits those.
inline std::string json_string(const json& node, const char* key,
                               const std::string& fallback = "") {
  auto it = node.find(key);
  if (it == node.end() || !it->is_string()) return fallback;
  return it->get<std::string>();
}

inline SourceRange parse_src(std::string_view src) {
  SourceRange r;
  int field = 0;
  int64_t value = 0;
  bool neg = false, any = false;
  auto commit = [&] {
    int64_t v = neg ? -value : value;
    if (field == 0) r.offset = v;
    else if (field == 1) r.length = v;
    else if (field == 2) r.file = static_cast<int>(v);
  };
  for (char c : src) {
    if (c == ':') {
      if (any) commit();
      field++;
      value = 0;
      neg = false;
      any = false;
    } else if (c == '-') {
      neg = true;
    } else if (c >= '0' && c <= '9') {
      value = value * 10 + (c - '0');
      any = true;
    }
  }
  if (any) commit();
  return r;
}

inline void normalize_compact(const json& node, AstNode& out);

inline void collect_compact_children(const json& node, AstNode& out) {
  // Child nodes hide under assorted keys; any object with a nodeType (or any
  // array of such) is a child. Key iteration over nlohmann objects is sorted,
  // so the walk is deterministic; consumers use ranges, not child order.
  for (auto it = node.begin(); it != node.end(); ++it) {
    const json& v = it.value();
    if (v.is_object() && v.contains("nodeType")) {
      AstNode child;
      normalize_compact(v, child);
      out.children.push_back(std::move(child));
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (e.is_object() && e.contains("nodeType")) {
          AstNode child;
          normalize_compact(e, child);
          out.children.push_back(std::move(child));
        }
      }
    }
  }
}

inline void normalize_compact(const json& node, AstNode& out) {
  out.kind = json_string(node, "nodeType");
  out.name = json_string(node, "name");
  out.range = parse_src(json_string(node, "src"));
  auto sv = node.find("stateVariable");
  out.state_variable = sv != node.end() && sv->is_boolean() && sv->get<bool>();
  out.visibility = json_string(node, "visibility");
  out.fn_kind = json_string(node, "kind");
  if (node.contains("typeDescriptions") && node["typeDescriptions"].is_object())
    out.type_string = json_string(node["typeDescriptions"], "typeString");
  collect_compact_children(node, out);
}

inline void normalize_legacy(const json& node, AstNode& out) {
  out.kind = json_string(node, "name");
  out.range = parse_src(json_string(node, "src"));
  if (node.contains("attributes") && node["attributes"].is_object()) {
    const json& at = node["attributes"];
    out.name = json_string(at, "name");
    auto sv = at.find("stateVariable");
    out.state_variable = sv != at.end() && sv->is_boolean() && sv->get<bool>();
    out.visibility = json_string(at, "visibility");
    out.type_string = json_string(at, "type");
    if (at.contains("isConstructor") && at["isConstructor"].is_boolean() &&
        at["isConstructor"].get<bool>())
      out.fn_kind = "constructor";
  }
  if (node.contains("children")) {
    for (const auto& c : node["children"]) {
      AstNode child;
      normalize_legacy(c, child);
      out.children.push_back(std::move(child));
    }
  }
}

// Decodes solc's compressed "s:l:f:j" source map into one range per
// instruction; omitted fields repeat the previous entry.
inline std::vector<SourceRange> decode_source_map(std::string_view map) {
  std::vector<SourceRange> out;
  SourceRange prev;
  size_t pos = 0;
  while (pos <= map.size()) {
    size_t semi = map.find(';', pos);
    std::string_view entry =
        map.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
    SourceRange cur = prev;
    int field = 0;
    size_t fstart = 0;
    auto apply = [&](std::string_view f, int idx) {
      if (f.empty()) return;
      int64_t value = 0;
      bool neg = false;
      for (char c : f) {
        if (c == '-') neg = true;
        else if (c >= '0' && c <= '9') value = value * 10 + (c - '0');
      }
      int64_t v = neg ? -value : value;
      if (idx == 0) cur.offset = v;
      else if (idx == 1) cur.length = v;
      else if (idx == 2) cur.file = static_cast<int>(v);
    };
    for (size_t i = 0; i <= entry.size(); i++) {
      if (i == entry.size() || entry[i] == ':') {
        apply(entry.substr(fstart, i - fstart), field);
        field++;
        fstart = i + 1;
      }
    }
    out.push_back(cur);
    prev = cur;
    if (semi == std::string_view::npos) break;
    pos = semi + 1;
  }
  if (map.empty()) out.clear();
  return out;
}

// CBOR metadata trailer: last two bytes give its length.
inline size_t code_length_without_metadata(const Bytes& code) {
  if (code.size() < 2) return code.size();
  size_t meta_len = (static_cast<size_t>(code[code.size() - 2]) << 8) | code[code.size() - 1];
  size_t total = meta_len + 2;
  if (meta_len == 0 || total > code.size()) return code.size();
  uint8_t first = code[code.size() - total];
  // Metadata is a small CBOR map: 0xa1..0xa3 in every solc release so far.
  if (first < 0xa1 || first > 0xa4) return code.size();
  size_t end = code.size() - total;
  // solc separates code from metadata with an unmapped guard byte (INVALID
  // since 0.5, STOP in the 0.4 series); it belongs to the trailer.
  if (end > 0 && (code[end - 1] == 0xfe || code[end - 1] == 0x00)) end--;
  return end;
}

}  // namespace detail

inline AstNode normalize_ast(const json& root) {
  AstNode out;
  if (root.contains("nodeType")) detail::normalize_compact(root, out);
  else detail::normalize_legacy(root, out);
  return out;
}

struct CatalogEntry {
  std::string version;
  std::string executable;
};

// Maps compiler versions to standard-JSON executables. Entries whose
// executable is missing are skipped with a warning (degraded mode).
class CompilerCatalog {
 public:
  CompilerCatalog() = default;

  static CompilerCatalog from_file(const std::string& path) {
    CompilerCatalog cat;
    for (auto& [key, value] : parse_kv_file(path)) {
      if (!SemVer::parse(key)) throw ConfigError("catalog key is not a version: " + key);
      if (access(value.c_str(), X_OK) != 0) {
        cat.warnings_.push_back("catalog entry " + key + " skipped: " + value + " not executable");
        continue;
      }
      cat.entries_.push_back({key, value});
    }
    return cat;
  }

  static CompilerCatalog from_entries(std::vector<CatalogEntry> entries) {
    CompilerCatalog cat;
    cat.entries_ = std::move(entries);
    return cat;
  }

  bool empty() const { return entries_.empty(); }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<std::string> executable_for(const std::string& version) const {
    for (auto& e : entries_)
      if (e.version == version) return e.executable;
    return std::nullopt;
  }

  // Installed versions, newest series first (the adaptation trial order).
  std::vector<std::string> versions() const {
    std::vector<std::string> v;
    for (auto& e : entries_) v.push_back(e.version);
    std::sort(v.begin(), v.end(), [](const std::string& a, const std::string& b) {
      return SemVer::parse(a).value_or(SemVer{}) > SemVer::parse(b).value_or(SemVer{});
    });
    return v;
  }

 private:
  std::vector<CatalogEntry> entries_;
  std::vector<std::string> warnings_;
};

inline std::vector<std::string> list_versions(const CompilerCatalog& catalog) {
  return catalog.versions();
}

namespace detail {

struct CompileCache {
  std::mutex mu;
  std::map<std::string, std::shared_ptr<const CompileOutput>> entries;
};

inline CompileCache& compile_cache() {
  static CompileCache cache;
  return cache;
}

}  // namespace detail

// Runs the external compiler in standard-JSON mode and maps the reply into
// CompileOutput. Source errors come back as diagnostics with empty bytecode;
// a broken environment or unparsable reply throws.
inline CompileOutput compile(const std::string& source, const std::string& version,
                             const CompilerCatalog& catalog, bool use_cache = true) {
  auto exe = catalog.executable_for(version);
  if (!exe) throw ConfigError("version not in catalog: " + version);

  std::string cache_key;
  if (use_cache) {
    auto h = keccak256(reinterpret_cast<const uint8_t*>(source.data()), source.size());
    cache_key = version + ":" + to_hex(Bytes(h.begin(), h.end()));
    auto& cache = detail::compile_cache();
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.entries.find(cache_key);
    if (it != cache.entries.end()) return *it->second;
  }

  json request = {
      {"language", "Solidity"},
      {"sources", {{"input.sol", {{"content", source}}}}},
      {"settings",
       {{"optimizer", {{"enabled", false}}},
        {"outputSelection",
         {{"*",
           {{"*", {"abi", "evm.deployedBytecode.object", "evm.deployedBytecode.sourceMap"}},
            {"", {"ast"}}}}}}}},
  };

  ProcessResult proc = run_capture({*exe}, request.dump());
  if (proc.exit_code == 127) throw EnvironmentError("cannot spawn compiler: " + *exe);
  if (proc.exit_code != 0)
    throw BridgeError("compiler exited with " + std::to_string(proc.exit_code) + ": " + proc.err);

  json reply = json::parse(proc.out, nullptr, false);
  if (reply.is_discarded()) throw BridgeError("compiler reply is not JSON");

  CompileOutput out;
  out.version = version;
  if (reply.contains("errors")) {
    for (const auto& e : reply["errors"]) {
      Diagnostic d;
      std::string sev = detail::json_string(e, "severity", "error");
      d.severity = sev == "warning" ? Severity::Warning
                   : sev == "info"  ? Severity::Info
                                    : Severity::Error;
      d.message = detail::json_string(e, "formattedMessage", detail::json_string(e, "message"));
      if (e.contains("sourceLocation") && e["sourceLocation"].is_object()) {
        const json& loc = e["sourceLocation"];
        int64_t start = loc.value("start", -1);
        int64_t end = loc.value("end", -1);
        d.range = {start, end >= start ? end - start : 0, 0};
      }
      out.diagnostics.push_back(std::move(d));
    }
  }

  if (reply.contains("sources") && reply["sources"].contains("input.sol")) {
    const json& src = reply["sources"]["input.sol"];
    if (src.contains("ast")) out.ast = normalize_ast(src["ast"]);
    else if (src.contains("legacyAST")) out.ast = normalize_ast(src["legacyAST"]);
  }

  // Pick the last contract (in source order) that produced runtime bytecode;
  // Solidity files conventionally put the primary contract last.
  if (out.ast && reply.contains("contracts") && reply["contracts"].contains("input.sol")) {
    const json& contracts = reply["contracts"]["input.sol"];
    std::vector<std::pair<int64_t, std::string>> defs;
    out.ast->walk([&](const AstNode& n) {
      if (n.kind == "ContractDefinition") defs.emplace_back(n.range.offset, n.name);
    });
    std::sort(defs.begin(), defs.end());
    for (auto it = defs.rbegin(); it != defs.rend(); ++it) {
      if (!contracts.contains(it->second)) continue;
      const json& c = contracts[it->second];
      if (!c.contains("evm") || !c["evm"].contains("deployedBytecode")) continue;
      const json& db = c["evm"]["deployedBytecode"];
      std::string hex = detail::json_string(db, "object");
      if (hex.empty()) continue;
      auto bytes = parse_hex(hex);
      if (!bytes) {
        out.diagnostics.push_back({Severity::Warning,
                                   "deployed bytecode for " + it->second +
                                       " contains unlinked references; skipped",
                                   {}});
        continue;
      }
      out.contract_name = it->second;
      out.runtime_bytecode = std::move(*bytes);
      out.source_map = detail::decode_source_map(detail::json_string(db, "sourceMap"));
      if (c.contains("abi")) out.abi = c["abi"];
      break;
    }
  }

  // Keep the bridge's contract: an error-free reply implies deployable
  // bytecode. An empty or interface-only source gets an explicit error.
  if (out.ok() && out.runtime_bytecode.empty())
    out.diagnostics.push_back(
        {Severity::Error, "no deployable contract in source", {}});

  if (use_cache) {
    auto& cache = detail::compile_cache();
    std::lock_guard<std::mutex> lock(cache.mu);
    cache.entries[cache_key] = std::make_shared<const CompileOutput>(out);
  }
  return out;
}

// Length of the code prefix that is actual instructions (metadata stripped).
inline size_t executable_code_length(const Bytes& runtime_bytecode) {
  return detail::code_length_without_metadata(runtime_bytecode);
}

}  // namespace snipcheck
