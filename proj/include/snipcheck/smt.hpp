#pragma once

#include "snipcheck/errors.hpp"
#include "snipcheck/strings.hpp"
#include "snipcheck/subprocess.hpp"
#include "snipcheck/term.hpp"

#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace snipcheck {

enum class SolverStatus { Sat, Unsat, Unknown };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Sat: return "sat";
    case SolverStatus::Unsat: return "unsat";
    default: return "unknown";
  }
}

struct SolverVerdict {
  SolverStatus status = SolverStatus::Unknown;
  std::vector<u256> model;  // aligned with the requested model terms

  bool sat() const { return status == SolverStatus::Sat; }
  bool unsat() const { return status == SolverStatus::Unsat; }
  bool feasible() const { return status != SolverStatus::Unsat; }  // unknown counts
};

// A path condition: term != 0 when taken, term == 0 otherwise.
using Constraint = std::pair<Term, bool>;

namespace detail {

class SmtPrinter {
 public:
  explicit SmtPrinter(std::ostringstream& os) : os_(os) {}

  void emit_graph(const std::vector<Term>& roots) {
    for (auto r : roots) visit(r);
    emit_keccak_axioms();
  }

  std::string ref(Term t) const {
    if (t->is_const()) return literal(t->value);
    if (t->is_var()) return t->name;
    return "t" + std::to_string(t->id);
  }

  static std::string literal(const u256& v) { return "#x" + u256_hex64(v); }

 private:
  static constexpr const char* kWord = "(_ BitVec 256)";

  void declare_fun(const std::string& name, int arity) {
    if (!declared_.insert(name).second) return;
    os_ << "(declare-fun " << name << " (";
    for (int i = 0; i < arity; i++) os_ << (i ? " " : "") << kWord;
    os_ << ") " << kWord << ")\n";
  }

  void visit(Term t) {
    if (!visited_.insert(t->id).second) return;
    for (auto a : t->args) visit(a);
    switch (t->op) {
      case TermOp::Const:
        return;
      case TermOp::Var:
        if (declared_.insert(t->name).second)
          os_ << "(declare-const " << t->name << " " << kWord << ")\n";
        return;
      case TermOp::Keccak:
        declare_fun(keccak_name(t->args.size()), static_cast<int>(t->args.size()));
        keccaks_.push_back(t);
        break;
      case TermOp::CalldataWord: declare_fun("calldata", 1); break;
      case TermOp::SloadBase: declare_fun("storage0", 1); break;
      case TermOp::BalanceOf: declare_fun("balanceof", 1); break;
      case TermOp::BlockHashOf: declare_fun("blockhashof", 1); break;
      case TermOp::ExtCodeSizeOf: declare_fun("extcodesizeof", 1); break;
      case TermOp::ExtCodeHashOf: declare_fun("extcodehashof", 1); break;
      default: break;
    }
    os_ << "(define-fun t" << t->id << " () " << kWord << " " << body(t) << ")\n";
  }

  static std::string keccak_name(size_t arity) { return "keccak" + std::to_string(arity); }

  std::string app(const std::string& fn, Term t) {
    std::string out = "(" + fn;
    for (auto a : t->args) out += " " + ref(a);
    out += ")";
    return out;
  }

  std::string boolify(const std::string& pred) {
    return "(ite " + pred + " " + literal(1) + " " + literal(0) + ")";
  }

  std::string wide(const std::string& x) { return "((_ zero_extend 256) " + x + ")"; }

  std::string body(Term t) {
    auto a = [&](size_t i) { return ref(t->args[i]); };
    switch (t->op) {
      case TermOp::Add: return "(bvadd " + a(0) + " " + a(1) + ")";
      case TermOp::Sub: return "(bvsub " + a(0) + " " + a(1) + ")";
      case TermOp::Mul: return "(bvmul " + a(0) + " " + a(1) + ")";
      case TermOp::Div:
        return "(ite (= " + a(1) + " " + literal(0) + ") " + literal(0) + " (bvudiv " + a(0) +
               " " + a(1) + "))";
      case TermOp::SDiv:
        return "(ite (= " + a(1) + " " + literal(0) + ") " + literal(0) + " (bvsdiv " + a(0) +
               " " + a(1) + "))";
      case TermOp::Mod:
        return "(ite (= " + a(1) + " " + literal(0) + ") " + literal(0) + " (bvurem " + a(0) +
               " " + a(1) + "))";
      case TermOp::SMod:
        return "(ite (= " + a(1) + " " + literal(0) + ") " + literal(0) + " (bvsrem " + a(0) +
               " " + a(1) + "))";
      case TermOp::AddMod:
        return "(ite (= " + a(2) + " " + literal(0) + ") " + literal(0) +
               " ((_ extract 255 0) (bvurem (bvadd " + wide(a(0)) + " " + wide(a(1)) + ") " +
               wide(a(2)) + ")))";
      case TermOp::MulMod:
        return "(ite (= " + a(2) + " " + literal(0) + ") " + literal(0) +
               " ((_ extract 255 0) (bvurem (bvmul " + wide(a(0)) + " " + wide(a(1)) + ") " +
               wide(a(2)) + ")))";
      case TermOp::Exp: {
        // constant small exponents unroll; anything else is uninterpreted
        if (t->args[1]->is_const() && t->args[1]->value <= 16) {
          unsigned e = static_cast<unsigned>(t->args[1]->value);
          if (e == 0) return literal(1);
          std::string acc = a(0);
          for (unsigned i = 1; i < e; i++) acc = "(bvmul " + acc + " " + a(0) + ")";
          return acc;
        }
        const_cast<SmtPrinter*>(this)->declare_fun("expuf", 2);
        return app("expuf", t);
      }
      case TermOp::SignExtend: {
        if (t->args[0]->is_const() && t->args[0]->value < 31) {
          unsigned idx = static_cast<unsigned>(t->args[0]->value);
          unsigned bits = (idx + 1) * 8;
          return "((_ sign_extend " + std::to_string(256 - bits) + ") ((_ extract " +
                 std::to_string(bits - 1) + " 0) " + a(1) + "))";
        }
        const_cast<SmtPrinter*>(this)->declare_fun("signextenduf", 2);
        return app("signextenduf", t);
      }
      case TermOp::Byte: {
        if (t->args[0]->is_const() && t->args[0]->value < 32) {
          unsigned idx = static_cast<unsigned>(t->args[0]->value);
          unsigned hi = (31 - idx) * 8 + 7;
          return "((_ zero_extend 248) ((_ extract " + std::to_string(hi) + " " +
                 std::to_string(hi - 7) + ") " + a(1) + "))";
        }
        const_cast<SmtPrinter*>(this)->declare_fun("byteuf", 2);
        return app("byteuf", t);
      }
      case TermOp::Lt: return boolify("(bvult " + a(0) + " " + a(1) + ")");
      case TermOp::Gt: return boolify("(bvugt " + a(0) + " " + a(1) + ")");
      case TermOp::Slt: return boolify("(bvslt " + a(0) + " " + a(1) + ")");
      case TermOp::Sgt: return boolify("(bvsgt " + a(0) + " " + a(1) + ")");
      case TermOp::Eq: return boolify("(= " + a(0) + " " + a(1) + ")");
      case TermOp::IsZero: return boolify("(= " + a(0) + " " + literal(0) + ")");
      case TermOp::And: return "(bvand " + a(0) + " " + a(1) + ")";
      case TermOp::Or: return "(bvor " + a(0) + " " + a(1) + ")";
      case TermOp::Xor: return "(bvxor " + a(0) + " " + a(1) + ")";
      case TermOp::Not: return "(bvnot " + a(0) + ")";
      case TermOp::Shl: return "(bvshl " + a(1) + " " + a(0) + ")";
      case TermOp::Shr: return "(bvlshr " + a(1) + " " + a(0) + ")";
      case TermOp::Sar: return "(bvashr " + a(1) + " " + a(0) + ")";
      case TermOp::Keccak: return app(keccak_name(t->args.size()), t);
      case TermOp::CalldataWord: return app("calldata", t);
      case TermOp::SloadBase: return app("storage0", t);
      case TermOp::BalanceOf: return app("balanceof", t);
      case TermOp::BlockHashOf: return app("blockhashof", t);
      case TermOp::ExtCodeSizeOf: return app("extcodesizeof", t);
      case TermOp::ExtCodeHashOf: return app("extcodehashof", t);
      default: return literal(0);
    }
  }

  // Hash injectivity within the query: equal digests imply equal preimages;
  // different preimage lengths imply different digests.
  void emit_keccak_axioms() {
    constexpr size_t kMaxPairs = 512;
    size_t pairs = 0;
    for (size_t i = 0; i < keccaks_.size() && pairs < kMaxPairs; i++) {
      for (size_t j = i + 1; j < keccaks_.size() && pairs < kMaxPairs; j++, pairs++) {
        Term x = keccaks_[i], y = keccaks_[j];
        if (x->args.size() == y->args.size()) {
          std::string eq_args = "(and";
          for (size_t k = 0; k < x->args.size(); k++)
            eq_args += " (= " + ref(x->args[k]) + " " + ref(y->args[k]) + ")";
          eq_args += ")";
          os_ << "(assert (=> (= " << ref(x) << " " << ref(y) << ") " << eq_args << "))\n";
        } else {
          os_ << "(assert (distinct " << ref(x) << " " << ref(y) << "))\n";
        }
      }
    }
  }

  std::ostringstream& os_;
  std::set<uint32_t> visited_;
  std::set<std::string> declared_;
  std::vector<Term> keccaks_;
};

}  // namespace detail

// Talks SMT-LIB2 text to an external solver process (z3-compatible). Each
// query is self-contained after a (reset); the process is long-lived to
// amortize startup.
class SmtSolver {
 public:
  explicit SmtSolver(std::vector<std::string> command) : command_(std::move(command)) {
    if (command_.empty()) throw EnvironmentError("no solver command configured");
    try {
      process_ = std::make_unique<PipeProcess>(command_);
    } catch (const SubprocessError& e) {
      throw EnvironmentError(std::string("cannot start solver: ") + e.what());
    }
  }

  // $SNIPCHECK_SOLVER (a command line, whitespace-split) or `z3 -in`.
  static std::vector<std::string> default_command() {
    if (const char* env = std::getenv("SNIPCHECK_SOLVER")) {
      std::vector<std::string> parts;
      std::istringstream ss(env);
      std::string word;
      while (ss >> word) parts.push_back(word);
      if (!parts.empty()) return parts;
    }
    return {"z3", "-in"};
  }

  SolverVerdict solve(std::span<const Constraint> constraints,
                      const std::vector<Term>& model_terms, int64_t budget_ms) {
    queries_++;
    std::ostringstream script;
    script << "(reset)\n(set-option :timeout " << budget_ms << ")\n";
    detail::SmtPrinter printer(script);
    std::vector<Term> roots;
    for (auto& [t, taken] : constraints) roots.push_back(t);
    for (auto t : model_terms) roots.push_back(t);
    printer.emit_graph(roots);
    for (auto& [t, taken] : constraints) {
      if (taken)
        script << "(assert (distinct " << printer.ref(t) << " " << detail::SmtPrinter::literal(0)
               << "))\n";
      else
        script << "(assert (= " << printer.ref(t) << " " << detail::SmtPrinter::literal(0)
               << "))\n";
    }
    script << "(check-sat)\n(echo \"" << kMarker << "\")\n";

    auto verdict_line = transact(script.str(), budget_ms);
    if (!verdict_line) return {SolverStatus::Unknown, {}};

    SolverVerdict verdict;
    if (*verdict_line == "sat") verdict.status = SolverStatus::Sat;
    else if (*verdict_line == "unsat") verdict.status = SolverStatus::Unsat;
    else return {SolverStatus::Unknown, {}};

    if (verdict.sat() && !model_terms.empty()) {
      std::ostringstream q;
      q << "(get-value (";
      for (size_t i = 0; i < model_terms.size(); i++)
        q << (i ? " " : "") << printer.ref(model_terms[i]);
      q << "))\n(echo \"" << kMarker << "\")\n";
      auto values = transact_collect(q.str(), budget_ms);
      verdict.model = parse_values(values, model_terms.size());
      if (verdict.model.size() != model_terms.size()) verdict.model.clear();
    }
    return verdict;
  }

  SolverVerdict check(std::span<const Constraint> constraints, int64_t budget_ms) {
    return solve(constraints, {}, budget_ms);
  }

  size_t query_count() const { return queries_; }

 private:
  static constexpr const char* kMarker = "::snipcheck-done::";

  void ensure_running() {
    if (!process_ || !process_->running()) process_ = std::make_unique<PipeProcess>(command_);
  }

  // Sends a script, returns the last interesting line before the marker.
  std::optional<std::string> transact(const std::string& script, int64_t budget_ms) {
    auto lines = transact_collect(script, budget_ms);
    if (lines.empty()) return std::nullopt;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it)
      if (*it == "sat" || *it == "unsat" || *it == "unknown") return *it;
    return lines.back();
  }

  std::vector<std::string> transact_collect(const std::string& script, int64_t budget_ms) {
    ensure_running();
    try {
      process_->write_all(script);
    } catch (const SubprocessError&) {
      process_->restart();
      return {};
    }
    std::vector<std::string> lines;
    auto grace = std::chrono::milliseconds(budget_ms * 2 + 5000);
    auto deadline = std::chrono::steady_clock::now() + grace;
    for (;;) {
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        process_->restart();  // stuck solver: drop it, report unknown
        return {};
      }
      auto line = process_->read_line(remaining);
      if (!line) {
        process_->restart();
        return {};
      }
      if (*line == kMarker) return lines;
      if (!line->empty()) lines.push_back(std::move(*line));
    }
  }

  // get-value replies carry one BV literal per requested term, in order.
  static std::vector<u256> parse_values(const std::vector<std::string>& lines, size_t expected) {
    std::string all;
    for (auto& l : lines) {
      all += l;
      all += ' ';
    }
    std::vector<u256> values;
    for (size_t i = 0; i + 1 < all.size() && values.size() < expected; i++) {
      if (all[i] == '#' && (all[i + 1] == 'x' || all[i + 1] == 'b')) {
        size_t j = i + 2;
        u256 v = 0;
        if (all[i + 1] == 'x') {
          while (j < all.size() && hex_nibble(all[j]) >= 0) v = (v << 4) | hex_nibble(all[j++]);
        } else {
          while (j < all.size() && (all[j] == '0' || all[j] == '1'))
            v = (v << 1) | (all[j++] - '0');
        }
        values.push_back(v);
        i = j;
      } else if (all.compare(i, 4, "(_ b") == 0 && all.compare(i, 5, "(_ bv") == 0) {
        size_t j = i + 5;
        u256 v = 0;
        while (j < all.size() && all[j] >= '0' && all[j] <= '9') v = v * 10 + (all[j++] - '0');
        values.push_back(v);
        i = j;
      }
    }
    return values;
  }

  std::vector<std::string> command_;
  std::unique_ptr<PipeProcess> process_;
  size_t queries_ = 0;
};

// Module-level convenience matching the spec's solve() operation.
inline SolverVerdict solve(SmtSolver& solver, std::span<const Constraint> constraints,
                           const std::vector<Term>& model_terms = {}, int64_t budget_ms = 5000) {
  return solver.solve(constraints, model_terms, budget_ms);
}

}  // namespace snipcheck
