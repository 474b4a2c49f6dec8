#include "snipcheck/smt.hpp"
#include "support/toolchain.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace snipcheck;

namespace {

SmtSolver& solver() {
  static SmtSolver s({testsupport::solver_command()});
  return s;
}

}  // namespace

TEST_CASE("contradictory bounds are unsat") {
  TermPool pool;
  Term x = pool.variable("x");
  std::vector<Constraint> cs = {
      {pool.make(TermOp::Gt, x, pool.constant(5)), true},
      {pool.make(TermOp::Lt, x, pool.constant(3)), true},
  };
  CHECK(solver().check(cs, 5000).unsat());
}

TEST_CASE("wraparound add is sat with the all-ones model") {
  TermPool pool;
  Term x = pool.variable("x");
  Term sum = pool.make(TermOp::Add, x, pool.constant(1));
  std::vector<Constraint> cs = {{pool.make(TermOp::Eq, sum, pool.constant(0)), true}};
  auto verdict = solver().solve(cs, {x}, 5000);
  REQUIRE(verdict.sat());
  REQUIRE(verdict.model.size() == 1);
  CHECK(verdict.model[0] == ~u256(0));
}

TEST_CASE("factoring-grade constraint exceeds the budget and reports unknown") {
  TermPool pool;
  Term a = pool.variable("a");
  Term b = pool.variable("b");
  u256 semiprime = u256_from_hex("8f5e2a1bc3d47e6905134fab7289cd01e57a3b92c64d08f1a2b3c4d5e6f70919");
  std::vector<Constraint> cs = {
      {pool.make(TermOp::Eq, pool.make(TermOp::Mul, a, b), pool.constant(semiprime)), true},
      {pool.make(TermOp::Gt, a, pool.constant(1)), true},
      {pool.make(TermOp::Gt, b, pool.constant(1)), true},
      {pool.make(TermOp::Lt, a, b), true},
  };
  auto verdict = solver().check(cs, 400);
  CHECK(verdict.status == SolverStatus::Unknown);
}

TEST_CASE("division by zero yields zero inside the solver too") {
  TermPool pool;
  Term x = pool.variable("x");
  Term q = pool.make(TermOp::Div, x, pool.constant(0));
  std::vector<Constraint> cs = {{q, true}};  // q != 0
  CHECK(solver().check(cs, 5000).unsat());
}

TEST_CASE("keccak is injective within a query") {
  TermPool pool;
  Term x = pool.variable("x");
  Term y = pool.variable("y");
  Term kx = pool.make(TermOp::Keccak, std::vector<Term>{x});
  Term ky = pool.make(TermOp::Keccak, std::vector<Term>{y});
  std::vector<Constraint> same_hash_diff_arg = {
      {pool.make(TermOp::Eq, kx, ky), true},
      {pool.make(TermOp::Eq, x, y), false},
  };
  CHECK(solver().check(same_hash_diff_arg, 5000).unsat());

  // different preimage lengths never collide
  Term k2 = pool.make(TermOp::Keccak, x, y);
  std::vector<Constraint> cross_arity = {{pool.make(TermOp::Eq, kx, k2), true}};
  CHECK(solver().check(cross_arity, 5000).unsat());
}

TEST_CASE("models cover compound terms and uninterpreted reads") {
  TermPool pool;
  Term slot = pool.variable("s");
  Term stored = pool.make(TermOp::SloadBase, slot);
  Term cond = pool.make(TermOp::Gt, stored, pool.constant(100));
  std::vector<Constraint> cs = {{cond, true}};
  auto verdict = solver().solve(cs, {stored, slot}, 5000);
  REQUIRE(verdict.sat());
  REQUIRE(verdict.model.size() == 2);
  CHECK(verdict.model[0] > 100);
}

TEST_CASE("signed comparisons and shifts agree with the evm model") {
  TermPool pool;
  Term x = pool.variable("x");
  // x < 0 (signed) and x >> 255 == 0 cannot hold together
  std::vector<Constraint> cs = {
      {pool.make(TermOp::Slt, x, pool.constant(0)), true},
      {pool.make(TermOp::Eq, pool.make(TermOp::Shr, pool.constant(255), x), pool.constant(0)),
       true},
  };
  CHECK(solver().check(cs, 5000).unsat());
}

TEST_CASE("solver survives being fed a huge budgeted query then reused") {
  TermPool pool;
  Term x = pool.variable("x");
  std::vector<Constraint> easy = {{pool.make(TermOp::Eq, x, pool.constant(7)), true}};
  auto v1 = solver().solve(easy, {x}, 5000);
  REQUIRE(v1.sat());
  CHECK(v1.model[0] == 7);
  // now an unsat right after, same process
  std::vector<Constraint> contra = {
      {pool.make(TermOp::Eq, x, pool.constant(1)), true},
      {pool.make(TermOp::Eq, x, pool.constant(2)), true},
  };
  CHECK(solver().check(contra, 5000).unsat());
}
