#pragma once

#include "snipcheck/errors.hpp"
#include "snipcheck/strings.hpp"

#include <cstddef>
#include <cstdint>
#include <regex>
#include <string>
#include <vector>

namespace snipcheck {

enum class DocFormat { Html, Markdown, Plain };

enum class LanguageGuess { Solidity, Other, Unknown };

inline const char* to_string(LanguageGuess g) {
  switch (g) {
    case LanguageGuess::Solidity: return "Solidity";
    case LanguageGuess::Other: return "Other";
    default: return "Unknown";
  }
}

// Raw document bytes failed UTF-8 validation.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SnippetOrigin {
  std::string locator;   // file path or other document id
  size_t byte_begin = 0; // slice [byte_begin, byte_end) of the document
  size_t byte_end = 0;
};

struct Snippet {
  std::string id;
  std::string source_text;
  SnippetOrigin origin;
  size_t line_count = 0;  // non-empty lines
  LanguageGuess language_guess = LanguageGuess::Unknown;
};

namespace detail {

inline bool valid_utf8(std::string_view bytes) {
  size_t i = 0;
  while (i < bytes.size()) {
    unsigned char c = bytes[i];
    size_t extra;
    if (c < 0x80) extra = 0;
    else if ((c & 0xE0) == 0xC0) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0) extra = 3;
    else return false;
    if (i + extra >= bytes.size() && extra > 0) return false;
    for (size_t k = 1; k <= extra; k++)
      if ((static_cast<unsigned char>(bytes[i + k]) & 0xC0) != 0x80) return false;
    if (extra == 1 && c < 0xC2) return false;  // overlong
    i += extra + 1;
  }
  return true;
}

struct LangPattern {
  std::regex re;
  int weight;
};

inline const std::vector<LangPattern>& solidity_patterns() {
  static const std::vector<LangPattern> pats = {
      {std::regex(R"(\bpragma\s+solidity\b)"), 4},
      {std::regex(R"(\bcontract\s+[A-Za-z_$][\w$]*)"), 3},
      {std::regex(R"(\binterface\s+[A-Za-z_$][\w$]*\s*\{)"), 2},
      {std::regex(R"(\bfunction\s+[A-Za-z_$][\w$]*\s*\([^)]*\)[\w\s]*\b(public|external|internal|private|view|pure|payable)\b)"), 3},
      {std::regex(R"(\bmapping\s*\()"), 3},
      {std::regex(R"(\bmsg\.(sender|value|data)\b)"), 3},
      {std::regex(R"(\btx\.origin\b)"), 3},
      {std::regex(R"(\bmodifier\s+[A-Za-z_$][\w$]*)"), 2},
      {std::regex(R"(\brequire\s*\()"), 1},
      {std::regex(R"(\b(uint256|uint8|int256|bytes32)\b)"), 2},
      {std::regex(R"(\baddress\s+(payable\s+)?[A-Za-z_$][\w$]*)"), 1},
      {std::regex(R"(\bemit\s+[A-Za-z_$][\w$]*\s*\()"), 2},
      {std::regex(R"(\b(wei|ether|gwei|szabo|finney)\b)"), 1},
      {std::regex(R"(\bselfdestruct\s*\()"), 2},
  };
  return pats;
}

inline const std::vector<LangPattern>& other_patterns() {
  static const std::vector<LangPattern> pats = {
      {std::regex(R"(\bdef\s+[A-Za-z_]\w*\s*\()"), 3},
      {std::regex(R"(#\s*include\s*[<"])"), 3},
      {std::regex(R"(\bconsole\.log\s*\()"), 3},
      {std::regex(R"(\bSystem\.out\.)"), 3},
      {std::regex(R"(\bpublic\s+static\s+void\b)"), 3},
      {std::regex(R"(^\s*(let|const)\s+\w+\s*=)", std::regex::multiline), 2},
      {std::regex(R"(\brequire\s*\(\s*['"][\w@./-]+['"]\s*\))"), 3},  // node require
      {std::regex(R"(=>\s*\{)"), 1},
      {std::regex(R"(<\s*/?\s*(div|span|html|body)\b)"), 2},
      {std::regex(R"(\bSELECT\s+.+\bFROM\b)", std::regex::icase), 2},
      {std::regex(R"(\bprint\s*\()"), 1},
      {std::regex(R"(\basync\s+function\b)"), 2},
      {std::regex(R"(\bimport\s+[\w{].*\bfrom\s+['"])"), 2},
  };
  return pats;
}

}  // namespace detail

// Keyword-scoring language heuristic; snippets are not compilable, so this is
// evidence-based, not parse-based. An info-string hint (from a fenced block)
// trumps the scoring.
inline LanguageGuess guess_language(std::string_view text, std::string_view hint = {}) {
  if (!hint.empty()) {
    std::string h = to_lower(trim(hint));
    if (h == "solidity" || h == "sol") return LanguageGuess::Solidity;
    return LanguageGuess::Other;
  }
  std::string code = strip_solidity_comments(text);
  if (trim_view(code).empty()) return LanguageGuess::Other;  // comment-only block
  int sol = 0, other = 0;
  for (auto& p : detail::solidity_patterns())
    if (std::regex_search(code.begin(), code.end(), p.re)) sol += p.weight;
  for (auto& p : detail::other_patterns())
    if (std::regex_search(code.begin(), code.end(), p.re)) other += p.weight;
  if (sol == 0 && other == 0) return LanguageGuess::Unknown;
  if (sol > other) return LanguageGuess::Solidity;
  return LanguageGuess::Other;
}

namespace detail {

struct RawBlock {
  size_t begin;
  size_t end;
  std::string hint;
};

inline size_t ifind(std::string_view hay, std::string_view needle, size_t from) {
  if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
  for (size_t i = from; i + needle.size() <= hay.size(); i++) {
    size_t k = 0;
    for (; k < needle.size(); k++) {
      if (std::tolower(static_cast<unsigned char>(hay[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k])))
        break;
    }
    if (k == needle.size()) return i;
  }
  return std::string_view::npos;
}

inline std::vector<RawBlock> html_blocks(std::string_view doc) {
  std::vector<RawBlock> blocks;
  size_t pos = 0;
  while (pos < doc.size()) {
    size_t open = ifind(doc, "<code", pos);
    if (open == std::string_view::npos) break;
    size_t tag_end = doc.find('>', open);
    if (tag_end == std::string_view::npos) break;
    // require "<code>" or "<code ...>": next char is '>' or whitespace
    char after = doc[open + 5];
    if (after != '>' && !std::isspace(static_cast<unsigned char>(after))) {
      pos = open + 5;
      continue;
    }
    size_t close = ifind(doc, "</code>", tag_end + 1);
    if (close == std::string_view::npos) break;
    blocks.push_back({tag_end + 1, close, ""});
    pos = close + 7;
  }
  return blocks;
}

inline std::vector<RawBlock> markdown_blocks(std::string_view doc) {
  std::vector<RawBlock> blocks;
  size_t line_start = 0;
  bool in_fence = false;
  char fence_char = 0;
  size_t fence_len = 0;
  size_t content_begin = 0;
  std::string hint;
  while (line_start <= doc.size()) {
    size_t nl = doc.find('\n', line_start);
    size_t line_end = (nl == std::string_view::npos) ? doc.size() : nl;
    std::string_view line = doc.substr(line_start, line_end - line_start);
    std::string_view t = trim_view(line);
    bool is_fence = t.size() >= 3 && (t[0] == '`' || t[0] == '~') &&
                    t.find_first_not_of(t[0]) >= 3;
    if (!in_fence && is_fence) {
      fence_char = t[0];
      fence_len = t.find_first_not_of(t[0]);
      if (fence_len == std::string_view::npos) fence_len = t.size();
      hint = trim(t.substr(fence_len));
      in_fence = true;
      content_begin = (nl == std::string_view::npos) ? doc.size() : nl + 1;
    } else if (in_fence && is_fence && t[0] == fence_char && t.find_first_not_of(fence_char) >= fence_len &&
               trim_view(t.substr(t.find_first_not_of(fence_char) == std::string_view::npos
                                      ? t.size()
                                      : t.find_first_not_of(fence_char))).empty()) {
      size_t content_end = line_start;
      if (content_end > content_begin && doc[content_end - 1] == '\n') content_end--;
      if (content_end < content_begin) content_end = content_begin;
      blocks.push_back({content_begin, content_end, hint});
      in_fence = false;
      hint.clear();
    }
    if (nl == std::string_view::npos) break;
    line_start = nl + 1;
  }
  return blocks;
}

}  // namespace detail

// One Snippet per fenced/<code> block; plain format yields one Snippet for the
// whole file. Offsets always slice the original document back to source_text.
inline std::vector<Snippet> extract_snippets(std::string_view document, DocFormat format,
                                             const std::string& locator = "<memory>") {
  if (!detail::valid_utf8(document)) throw DecodeError("document is not valid UTF-8: " + locator);
  std::vector<detail::RawBlock> raw;
  switch (format) {
    case DocFormat::Html: raw = detail::html_blocks(document); break;
    case DocFormat::Markdown: raw = detail::markdown_blocks(document); break;
    case DocFormat::Plain: raw = {{0, document.size(), ""}}; break;
    default: throw UsageError("unknown document format tag");
  }
  std::vector<Snippet> snippets;
  size_t index = 0;
  for (auto& block : raw) {
    std::string text(document.substr(block.begin, block.end - block.begin));
    if (trim_view(text).empty()) continue;  // snippet must be non-empty after trimming
    Snippet s;
    s.id = locator + "#" + std::to_string(index++);
    s.source_text = std::move(text);
    s.origin = {locator, block.begin, block.end};
    s.line_count = count_nonempty_lines(s.source_text);
    s.language_guess = guess_language(s.source_text, block.hint);
    snippets.push_back(std::move(s));
  }
  return snippets;
}

inline DocFormat format_from_tag(std::string_view tag) {
  std::string t = to_lower(tag);
  if (t == "html") return DocFormat::Html;
  if (t == "markdown" || t == "md") return DocFormat::Markdown;
  if (t == "plain" || t == "sol" || t == "text") return DocFormat::Plain;
  throw UsageError("unknown format tag: " + std::string(tag));
}

inline DocFormat format_from_path(std::string_view path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string_view::npos ? "" : to_lower(path.substr(dot + 1));
  if (ext == "html" || ext == "htm") return DocFormat::Html;
  if (ext == "md" || ext == "markdown") return DocFormat::Markdown;
  return DocFormat::Plain;
}

// Drops non-Solidity guesses and brief snippets (fewer than min_lines
// non-empty lines). Order and contents are otherwise preserved.
inline std::vector<Snippet> filter_snippets(const std::vector<Snippet>& snippets,
                                            size_t min_lines = 2) {
  std::vector<Snippet> kept;
  for (const auto& s : snippets)
    if (s.language_guess == LanguageGuess::Solidity && s.line_count >= min_lines)
      kept.push_back(s);
  return kept;
}

}  // namespace snipcheck
