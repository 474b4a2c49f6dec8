#include "snipcheck/evm.hpp"
#include "snipcheck/repair.hpp"
#include "snipcheck/solc.hpp"
#include "support/toolchain.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace snipcheck;
using testsupport::catalog;

namespace {

const char* kMinimal =
    "pragma solidity ^0.6.0;\n"
    "contract Box {\n"
    "    uint256 public stored;\n"
    "    function put(uint256 v) public { stored = v; }\n"
    "}\n";

}  // namespace

TEST_CASE("minimal contract compiles to bytecode with a SourceUnit ast") {
  auto out = compile(kMinimal, "0.6.12", catalog());
  REQUIRE(out.ok());
  CHECK_FALSE(out.runtime_bytecode.empty());
  REQUIRE(out.ast.has_value());
  CHECK(out.ast->kind == "SourceUnit");
  CHECK(out.contract_name == "Box");
  bool found_contract = false;
  out.ast->walk([&](const AstNode& n) {
    if (n.kind == "ContractDefinition" && n.name == "Box") found_contract = true;
  });
  CHECK(found_contract);
}

TEST_CASE("syntax errors surface as diagnostics with empty bytecode") {
  auto out = compile("pragma solidity ^0.6.0;\ncontract C { function }\n", "0.6.12", catalog());
  CHECK_FALSE(out.ok());
  CHECK(out.runtime_bytecode.empty());
  bool has_error = false;
  for (auto& d : out.diagnostics)
    if (d.severity == Severity::Error) has_error = true;
  CHECK(has_error);
}

TEST_CASE("empty source yields an error diagnostic") {
  auto out = compile("", "0.6.12", catalog());
  CHECK_FALSE(out.ok());
  CHECK(out.runtime_bytecode.empty());
}

TEST_CASE("warnings are preserved as diagnostics") {
  auto out = compile(kMinimal, "0.6.12", catalog());
  bool has_warning = false;
  for (auto& d : out.diagnostics)
    if (d.severity == Severity::Warning) has_warning = true;
  CHECK(has_warning);  // at least the SPDX notice
}

TEST_CASE("identical input compiles to byte-identical bytecode") {
  auto a = compile(kMinimal, "0.6.12", catalog(), /*use_cache=*/false);
  auto b = compile(kMinimal, "0.6.12", catalog(), /*use_cache=*/false);
  CHECK(a.runtime_bytecode == b.runtime_bytecode);
}

TEST_CASE("source map entries line up with disassembled instructions") {
  auto out = compile(kMinimal, "0.6.12", catalog());
  REQUIRE(out.ok());
  auto ins = disassemble(out.runtime_bytecode);
  CHECK(ins.size() == out.source_map.size());
}

TEST_CASE("source map alignment holds across compiler series") {
  const char* src =
      "contract Old {\n"
      "    uint256 total;\n"
      "    function add(uint256 v) public { total += v; }\n"
      "}\n";
  for (const std::string version : {"0.4.26", "0.5.17", "0.7.6", "0.8.21"}) {
    std::string versioned = set_pragma(src, version);
    auto out = compile(versioned, version, catalog());
    INFO(version);
    REQUIRE(out.ok());
    auto ins = disassemble(out.runtime_bytecode);
    CHECK(ins.size() == out.source_map.size());
  }
}

TEST_CASE("legacy-era compiler output normalizes to the same ast shape") {
  std::string src = set_pragma(kMinimal, "0.4.26");
  auto out = compile(src, "0.4.26", catalog());
  REQUIRE(out.ok());
  REQUIRE(out.ast.has_value());
  CHECK(out.ast->kind == "SourceUnit");
  bool fn = false, var = false;
  out.ast->walk([&](const AstNode& n) {
    if (n.kind == "FunctionDefinition" && n.name == "put") fn = true;
    if (n.kind == "VariableDeclaration" && n.name == "stored" && n.state_variable) var = true;
  });
  CHECK(fn);
  CHECK(var);
}

TEST_CASE("unchecked blocks are visible in the 0.8 ast") {
  const char* src =
      "pragma solidity ^0.8.0;\n"
      "contract U {\n"
      "    uint256 public n;\n"
      "    function bump(uint256 v) public { unchecked { n = n + v; } }\n"
      "}\n";
  auto out = compile(src, "0.8.21", catalog());
  REQUIRE(out.ok());
  bool has_unchecked = false;
  out.ast->walk([&](const AstNode& n) {
    if (n.kind == "UncheckedBlock") has_unchecked = true;
  });
  CHECK(has_unchecked);
}

TEST_CASE("list_versions orders newest first and flags missing executables") {
  auto tmp = CompilerCatalog::from_entries({{"0.6.12", "/bin/sh"}, {"0.8.21", "/bin/sh"}});
  auto versions = list_versions(tmp);
  REQUIRE(versions.size() == 2);
  CHECK(versions[0] == "0.8.21");
  CHECK(versions[1] == "0.6.12");

  CHECK(list_versions(CompilerCatalog{}).empty());

  // entry pointing at a missing executable is skipped with a warning
  std::string body = "0.5.17 = /nonexistent/solc\n";
  std::string path = "/tmp/snipcheck_cat_test.toml";
  {
    std::ofstream f(path);
    f << body;
  }
  auto cat = CompilerCatalog::from_file(path);
  CHECK(cat.empty());
  REQUIRE_FALSE(cat.warnings().empty());
}

TEST_CASE("version adaptation honors the source pragma first") {
  const char* src =
      "pragma solidity ^0.8.0;\n"
      "contract M { function id(uint256 x) public pure returns (uint256) { return x; } }\n";
  auto outcome = adapt_version(src, catalog());
  REQUIRE(outcome.ok());
  CHECK(outcome.result->version == "0.8.21");
  CHECK(outcome.failure.attempts.empty());  // first try succeeded
}

TEST_CASE("now keyword lands in a pre-0.7 series") {
  const char* src =
      "contract T {\n"
      "    uint256 public seen;\n"
      "    function mark() public { seen = now; }\n"
      "}\n";
  auto outcome = adapt_version(src, catalog());
  REQUIRE(outcome.ok());
  auto ver = SemVer::parse(outcome.result->version);
  REQUIRE(ver.has_value());
  CHECK(ver->major == 0);
  CHECK(ver->minor < 7);
  CHECK(outcome.result->adapted_source.find("pragma solidity " + outcome.result->version) !=
        std::string::npos);
}

TEST_CASE("hopeless source fails every version with per-version diagnostics") {
  auto outcome = adapt_version("frobnicate quux;\n", catalog());
  REQUIRE_FALSE(outcome.ok());
  CHECK(outcome.failure.attempts.size() == catalog().entries().size());
  for (auto& [version, diags] : outcome.failure.attempts) {
    INFO(version);
    CHECK_FALSE(diags.empty());
  }
}

TEST_CASE("adaptation rewrites only pragma lines") {
  const char* src =
      "pragma solidity ^0.6.0;\n"
      "contract K {\n"
      "    uint256 x;\n"
      "    function f() public { x = 1; }\n"
      "}\n";
  auto outcome = adapt_version(src, catalog());
  REQUIRE(outcome.ok());
  auto in_lines = split_lines(src);
  auto out_lines = split_lines(outcome.result->adapted_source);
  REQUIRE(in_lines.size() == out_lines.size());
  for (size_t i = 0; i < in_lines.size(); i++) {
    if (starts_with(trim_view(in_lines[i]), "pragma")) continue;
    CHECK(in_lines[i] == out_lines[i]);
  }
}

TEST_CASE("empty catalog is a configuration error") {
  CHECK_THROWS_AS(adapt_version("contract C {}", CompilerCatalog{}), ConfigError);
}

namespace {

// Deletes up to k closing braces from the tail (whitespace between them is
// fine); nullopt when the source does not end in k trailing closers.
std::optional<std::string> remove_trailing_closers(std::string src, int k) {
  int removed = 0;
  while (removed < k) {
    while (!src.empty() && std::isspace(static_cast<unsigned char>(src.back()))) src.pop_back();
    if (src.empty() || src.back() != '}') return std::nullopt;
    src.pop_back();
    removed++;
  }
  return src;
}

}  // namespace

TEST_CASE("structural repair round-trips through the compiler") {
  const char* src =
      "pragma solidity ^0.6.0;\n"
      "contract Gate {\n"
      "    uint256 public stored;\n"
      "    function put(uint256 v) public {\n"
      "        if (v > 0) {\n"
      "            stored = v;\n"
      "        }\n"
      "    }\n"
      "}\n";
  for (int k = 1; k <= 3; k++) {
    auto damaged = remove_trailing_closers(src, k);
    REQUIRE(damaged.has_value());
    auto repaired = balance_structure(*damaged);
    REQUIRE(repaired.ok());
    auto out = compile(repaired.repaired_source, "0.6.12", catalog());
    INFO("k=" << k);
    CHECK(out.ok());
    CHECK_FALSE(out.runtime_bytecode.empty());
  }
}
