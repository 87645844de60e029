// SPDX-License-Identifier: Apache-2.0
//
// Hand-built reference programs shared by several suites.
#pragma once

#include "support/gen.hpp"

namespace qtl::fixtures {

inline Mat ket_bra(std::size_t n, std::size_t i) { return Mat::unit(n, i, i); }

inline Mat minus_state() {
  Rational h(1, 2);
  return Mat(2, 2, {CRat(h), CRat(-h), CRat(-h), CRat(h)});
}

inline Mat hadamard_op() { return Mat(2, 2, {1, 1, 1, -1}); }

inline const char *loop_source() {
  return "qubits q;\n"
         "unitary H = sqrt(1/2) * [[1, 1], [1, -1]];\n"
         "measurement M = {[[1, 0], [0, 0]], [[0, 0], [0, 1]]};\n"
         "state = [[1/2, -1/2], [-1/2, 1/2]];\n"
         "skip;\n"
         "while meas M(q) == 1 { apply H to q }\n";
}

// One qubit in |->; l1 skips, l2 measures (0 -> exit l4, 1 -> l3), l3
// applies H and returns to l2.
inline SequentialProgram hadamard_loop() {
  SequentialProgram p;
  p.dim = 2;
  p.locations = {"l1", "l2", "l3", "l4"};
  p.act.resize(4);
  Measurement triv = Measurement::trivial(2);
  p.act[0] = {SuperOp::identity(2), triv, {{Target{1, 0}}}};
  p.act[1] = {SuperOp::identity(2),
              Measurement::from_matrices({ket_bra(2, 0), ket_bra(2, 1)}),
              {{Target{3, 0}}, {Target{2, 0}}}};
  p.act[2] = {SuperOp::unitary(hadamard_op(), Rational(1, 2)), triv, {{Target{1, 0}}}};
  p.act[3] = {SuperOp::identity(2), triv, {{Target{3, 0}}}};
  p.initial_state = minus_state();
  p.initial_location = 0;
  p.exit_location = 3;
  return p;
}

// The invariant "everything except a |1> component at the exit".
inline Atom loop_invariant(const FlatModel &m) {
  Subspace zero = Subspace::from_vectors(2, {testgen::basis_vector(2, 0)});
  return atom_from_blocks("p",
                          {{"l1", Subspace::full(2)},
                           {"l2", Subspace::full(2)},
                           {"l3", Subspace::full(2)},
                           {"l4", zero}},
                          m);
}

inline Atom loop_exit_zero(const FlatModel &m) {
  Subspace zero = Subspace::from_vectors(2, {testgen::basis_vector(2, 0)});
  return atom_from_blocks("q", {{"l4", zero}}, m);
}

// Qubit program whose single location chooses between two successors.
inline SequentialProgram coin_choice() {
  SequentialProgram p;
  p.dim = 2;
  p.locations = {"a", "b", "c"};
  p.act.resize(3);
  Measurement triv = Measurement::trivial(2);
  p.act[0] = {SuperOp::identity(2), triv, {{Target{1, 0}, Target{2, 0}}}};
  p.act[1] = {SuperOp::unitary(Mat(2, 2, {0, 1, 1, 0})), triv, {{Target{1, 0}}}};
  p.act[2] = {SuperOp::identity(2), triv, {{Target{2, 0}}}};
  p.initial_state = ket_bra(2, 0);
  return p;
}

// Two-qubit declarations used by the random program generator.
inline const char *two_qubit_preamble() {
  return "qubits a, b;\n"
         "unitary H = sqrt(1/2) * [[1, 1], [1, -1]];\n"
         "unitary X = [[0, 1], [1, 0]];\n"
         "unitary CX = [[1,0,0,0],[0,1,0,0],[0,0,0,1],[0,0,1,0]];\n"
         "measurement M = {[[1, 0], [0, 0]], [[0, 0], [0, 1]]};\n"
         "measurement P = {[[1/2, 1/2], [1/2, 1/2]], [[1/2, -1/2], [-1/2, 1/2]]};\n"
         "measurement T = {[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],"
         " [[0,0,0,0],[0,1,0,0],[0,0,0,0],[0,0,0,0]],"
         " [[0,0,0,0],[0,0,0,0],[0,0,1,0],[0,0,0,1]]};\n"
         "skip\n";
}

inline QwStmtPtr random_stmt(testgen::Rng &r, std::size_t depth, bool loops) {
  auto one = [&] { return std::vector<std::size_t>{r.pick(2)}; };
  int kinds = depth == 0 ? 3 : (loops ? 6 : 5);
  switch (r.range(0, kinds - 1)) {
  case 0:
    return make_skip();
  case 1:
    return make_init(r.pick(2));
  case 2:
    switch (r.pick(3)) {
    case 0:
      return make_unitary("H", one());
    case 1:
      return make_unitary("X", one());
    default: {
      std::size_t c = r.pick(2);
      return make_unitary("CX", {c, 1 - c});
    }
    }
  case 3:
  case 4:
    if (r.coin(0.5))
      return make_seq(random_stmt(r, depth - 1, loops), random_stmt(r, depth - 1, loops));
    if (r.coin(0.3))
      return make_case("T", {0, 1},
                       {random_stmt(r, depth - 1, loops), random_stmt(r, depth - 1, loops),
                        random_stmt(r, depth - 1, loops)});
    return make_case(r.coin(0.5) ? "M" : "P", one(),
                     {random_stmt(r, depth - 1, loops), random_stmt(r, depth - 1, loops)});
  default:
    return make_while(r.coin(0.5) ? "M" : "P", one(), random_stmt(r, depth - 1, loops));
  }
}

// Random program over the two-qubit preamble with a random input state.
inline QWhileAst random_qwhile(testgen::Rng &r, std::size_t depth, bool loops) {
  QWhileAst ast = parse_qwhile(two_qubit_preamble());
  ast.body = random_stmt(r, depth, loops);
  ast.input_state = testgen::random_state(r, 4, static_cast<std::size_t>(r.range(1, 2)));
  return ast;
}

// Exit block after k steps, by explicit stepping.
inline Mat exit_block_after(const SequentialProgram &p, std::size_t k) {
  FlatModel m = flatten(p);
  CQState s = initial_cqstate(m);
  Selector f(m.choice_arity.size(), 0);
  for (std::size_t i = 0; i < k; ++i)
    s = step(m, s, f);
  auto it = s.blocks.find(*m.exit_config);
  return it == s.blocks.end() ? Mat::zero(p.dim, p.dim) : it->second;
}

// Loewner order a <= b.
inline bool loewner_le(const Mat &a, const Mat &b) { return is_psd(b - a); }

} // namespace qtl::fixtures
