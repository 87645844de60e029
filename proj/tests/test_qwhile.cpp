// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support/fixtures.hpp"

using namespace qtl;
using namespace qtl::fixtures;
using testgen::Rng;

namespace {

const char *kOneQubit = "qubits q;\n"
                        "unitary H = sqrt(1/2) * [[1, 1], [1, -1]];\n"
                        "measurement M = {[[1, 0], [0, 0]], [[0, 0], [0, 1]]};\n";

QWhileAst one_qubit(const std::string &body) { return parse_qwhile(kOneQubit + body); }

template <class E> bool throws_as(const std::string &src) {
  try {
    parse_qwhile(src);
  } catch (const E &) {
    return true;
  } catch (...) {
  }
  return false;
}

} // namespace

TEST_CASE("parse") {
  CHECK(one_qubit("skip").body->kind == QwStmt::Skip);

  QWhileAst two = one_qubit("q := |0>; apply H to q");
  REQUIRE(two.body->kind == QwStmt::Seq);
  CHECK(two.body->children[0]->kind == QwStmt::Init);
  CHECK(two.body->children[1]->kind == QwStmt::Unitary);
  CHECK(two.body->children[1]->op == "H");

  QWhileAst loop = one_qubit("while meas M(q) == 1 { apply H to q }");
  REQUIRE(loop.body->kind == QwStmt::While);
  CHECK(loop.body->op == "M");
  CHECK(loop.body->children[0]->kind == QwStmt::Unitary);
  CHECK(pretty_print(loop, *loop.body) == "while meas M(q) == 1 { apply H to q }");

  QWhileAst branch = one_qubit("if meas M(q) { 0 -> skip; 1 -> apply H to q; }");
  REQUIRE(branch.body->kind == QwStmt::Case);
  CHECK(branch.body->children.size() == 2);
}

TEST_CASE("parse errors") {
  CHECK(throws_as<SyntaxError>(std::string(kOneQubit) + "skip skip"));
  CHECK(throws_as<SyntaxError>(std::string(kOneQubit) + "while meas M(q) { skip }"));
  CHECK(throws_as<UndeclaredOperator>(std::string(kOneQubit) + "apply X to q"));
  CHECK(throws_as<UndeclaredOperator>(std::string(kOneQubit) + "if meas N(q) { 0 -> skip; }"));
  CHECK(throws_as<ArityMismatch>(std::string(kOneQubit) + "if meas M(q) { 0 -> skip; }"));
  CHECK(throws_as<ArityMismatch>(std::string(two_qubit_preamble()) + "; apply CX to a"));
  CHECK(throws_as<ArityMismatch>(std::string(two_qubit_preamble()) + "; while meas T(a, b) == 1 { skip }"));
  try {
    parse_qwhile(std::string(kOneQubit) + "skip;\n  apply ? to q");
    FAIL("expected a syntax error");
  } catch (const SyntaxError &e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("pretty_print round trip") {
  Rng r(1);
  for (int t = 0; t < 80; ++t) {
    QWhileAst ast = random_qwhile(r, r.range(0, 5), true);
    std::string text = pretty_print(ast);
    QWhileAst back = parse_qwhile(text);
    CHECK(same_shape(*back.body, *ast.body));
    CHECK(pretty_print(back) == text);
  }
}

TEST_CASE("denote_bounded") {
  Rng r(2);
  Mat rho = testgen::random_state(r, 2, 2);
  CHECK(denote_bounded(one_qubit("skip"), rho, 0).state == rho);
  CHECK(denote_bounded(one_qubit("q := |0>"), ket_bra(2, 1), 0).state == ket_bra(2, 0));

  QWhileAst loop = one_qubit("while meas M(q) == 1 { apply H to q }");
  for (std::size_t n = 0; n <= 8; ++n) {
    BoundedResult b = denote_bounded(loop, minus_state(), n);
    CHECK(b.state.trace() == CRat(1 - Rational(1, 1 << n)));
    CHECK(b.depth_exhausted);
  }
  CHECK_FALSE(denote_bounded(loop, ket_bra(2, 0), 3).depth_exhausted);
}

TEST_CASE("denote_bounded grows with depth") {
  Rng r(3);
  for (int t = 0; t < 20; ++t) {
    QWhileAst ast = random_qwhile(r, r.range(1, 3), true);
    Mat prev = Mat::zero(4, 4);
    for (std::size_t n = 0; n <= 4; ++n) {
      Mat now = denote_bounded(ast, *ast.input_state, n).state;
      CHECK(loewner_le(prev, now));
      CHECK(is_psd(now));
      prev = now;
    }
  }
}

TEST_CASE("compile") {
  CompiledProgram skip = compile(one_qubit("skip"));
  CHECK(skip.program.locations.size() == 2);
  CHECK(check_terminates(skip.program).step == 1);
  CHECK(channel_equal(skip.program.act[0].channel, SuperOp::identity(2)));

  QWhileAst branch = parse_qwhile(std::string(two_qubit_preamble()) +
                                  "; if meas T(a, b) { 0 -> skip; 1 -> skip; 2 -> skip; }");
  CHECK(compile(branch).program.locations.size() == 3 + 2 + 1);

  // The loop compiles to the hand-built reference transitions.
  CompiledProgram c = compile(parse_qwhile(loop_source()));
  SequentialProgram ref = hadamard_loop();
  REQUIRE(c.program.locations.size() == 4);
  CHECK(c.program.exit_location == ref.exit_location);
  CHECK(c.program.initial_state == ref.initial_state);
  for (std::size_t l = 0; l < 4; ++l) {
    CHECK(channel_equal(c.program.act[l].channel, ref.act[l].channel));
    CHECK(c.program.act[l].next == ref.act[l].next);
  }
  CHECK(channel_equal(step_superop(c.program), step_superop(ref)));
  CHECK(c.timing_exact);
}

TEST_CASE("loop-free compilation is exact") {
  Rng r(4);
  for (int t = 0; t < 40; ++t) {
    QWhileAst ast = random_qwhile(r, r.range(0, 4), false);
    CompiledProgram c = compile(ast);
    Mat want = denote_bounded(ast, *ast.input_state, 0).state;
    CHECK(exit_block_after(c.program, c.program.locations.size()) == want);
    CHECK(exit_block_after(c.program, c.steps_for_depth(0)) == want);
  }
}

TEST_CASE("compiled loops are bracketed by bounded semantics") {
  Rng r(5);
  int exact = 0;
  for (int t = 0; t < 20; ++t) {
    QWhileAst ast = random_qwhile(r, r.range(1, 3), true);
    CompiledProgram c = compile(ast);
    for (std::size_t n = 0; n <= 3; ++n) {
      Mat d = denote_bounded(ast, *ast.input_state, n).state;
      Mat hi = exit_block_after(c.program, c.steps_for_depth(n));
      Mat lo = exit_block_after(c.program, CompiledProgram::lower_steps_for_depth(n));
      CHECK(loewner_le(d, hi));
      CHECK(loewner_le(lo, d));
      if (c.timing_exact) {
        CHECK(hi == d);
        ++exact;
      }
    }
  }
  CHECK(exact > 0);
}

TEST_CASE("bohm_jacopini") {
  WhileNormalForm nf = bohm_jacopini(hadamard_loop());
  CHECK(nf.m0.rows() == 8);
  CHECK(nf.m0 + nf.m1 == Mat::identity(8));
  CHECK(nf.m0 * nf.m0 == nf.m0);
  CHECK(channel_equal(nf.body_channel, step_superop(hadamard_loop())));
  auto tr = normal_form_exit_trace(nf, 10);
  for (std::size_t k = 0; k <= 10; ++k)
    CHECK(tr[k].trace() == CRat(1 - Rational(1, 1 << (k / 2))));
  CHECK_THROWS_AS(bohm_jacopini(coin_choice()), NoExitLocation);

  // A program that exits at once never enters the loop.
  SequentialProgram instant;
  instant.dim = 2;
  instant.locations = {"e"};
  instant.act = {{SuperOp::identity(2), Measurement::trivial(2), {{Target{0, 0}}}}};
  instant.initial_state = ket_bra(2, 1);
  instant.exit_location = 0;
  WhileNormalForm nf1 = bohm_jacopini(instant);
  CHECK(nf1.m0 == Mat::identity(2));
  CHECK(normal_form_exit(nf1, 0) == ket_bra(2, 1));
  CHECK(normal_form_exit(nf1, 5) == ket_bra(2, 1));
}

TEST_CASE("normal form keeps the exit distribution") {
  Rng r(6);
  for (int t = 0; t < 15; ++t) {
    QWhileAst ast = random_qwhile(r, r.range(1, 3), true);
    CompiledProgram c = compile(ast);
    WhileNormalForm nf = bohm_jacopini(c.program);
    auto tr = normal_form_exit_trace(nf, 24);
    const FlatModel &m = nf.model;
    for (std::size_t k = 0; k <= 24; k += 3) {
      CQState want(m.dim);
      want.add(*m.exit_config, exit_block_after(c.program, k));
      CHECK(extract(tr[k], m) == want);
    }
  }
}
