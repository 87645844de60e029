// SPDX-License-Identifier: Apache-2.0
//
// Q-While front end. Concrete syntax:
//
//   qubits 2;                 (names q0, q1; `qubits a, b;` names them)
//   unitary H = sqrt(1/2) * [[1,1],[1,-1]];
//   measurement M = {[[1,0],[0,0]], [[0,0],[0,1]]};
//   state = [[1/2,-1/2],[-1/2,1/2]];      (optional input density operator)
//   skip; q0 := |0>; apply H to q0;
//   if meas M(q0) { 0 -> skip; 1 -> { apply H to q0; skip }; }
//   while meas M(q0) == 1 { apply H to q0 }
//
// `sqrt(w) * [[...]]` denotes the operator sqrt(w) times the rational matrix.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qtl/program.hpp"

namespace qtl {

struct QwStmt;
using QwStmtPtr = std::shared_ptr<const QwStmt>;

struct QwStmt {
  enum Kind { Skip, Seq, Init, Unitary, Case, While };
  Kind kind = Skip;
  std::string op;                  // operator name for Unitary / Case / While
  std::vector<std::size_t> qubits; // operands
  std::vector<QwStmtPtr> children; // Seq: {S1,S2}; Case: branches; While: {body}
  int line = 0, col = 0;
};

struct QwOperator {
  std::vector<KrausOp> ops; // one entry for unitaries, one per outcome for measurements
  std::size_t arity = 0;    // number of qubits acted on
};

struct QWhileAst {
  std::size_t nqubits = 0;
  std::vector<std::string> qubit_names;
  std::map<std::string, QwOperator> unitaries;
  std::map<std::string, QwOperator> measurements;
  std::optional<Mat> input_state;
  QwStmtPtr body;

  std::size_t dim() const { return std::size_t(1) << nqubits; }
};

QWhileAst parse_qwhile(const std::string &source);
std::string pretty_print(const QWhileAst &ast);
std::string pretty_print(const QWhileAst &ast, const QwStmt &s);
bool same_shape(const QwStmt &a, const QwStmt &b);

QwStmtPtr make_skip();
QwStmtPtr make_seq(QwStmtPtr a, QwStmtPtr b);
QwStmtPtr make_init(std::size_t q);
QwStmtPtr make_unitary(std::string op, std::vector<std::size_t> qs);
QwStmtPtr make_case(std::string op, std::vector<std::size_t> qs,
                    std::vector<QwStmtPtr> branches);
QwStmtPtr make_while(std::string op, std::vector<std::size_t> qs, QwStmtPtr body);

// k-qubit operator lifted to the whole register, acting on the listed qubits
// (first listed = most significant index of `a`). Qubit 0 is the most
// significant factor of the register.
Mat lift_operator(const Mat &a, const std::vector<std::size_t> &targets,
                  std::size_t nqubits);

struct BoundedResult {
  Mat state;
  bool depth_exhausted = false;
};

// Semantics with every loop allowed at most `depth` guard evaluations per
// entry (so at most depth - 1 body executions); depth 0 diverges.
BoundedResult denote_bounded(const QWhileAst &ast, const Mat &rho,
                             std::size_t depth);

struct CompiledProgram {
  SequentialProgram program;
  // Step budget after which every run with guard counts <= n has exited.
  std::size_t steps_for_depth(std::size_t n) const;
  // Up to this step count, every exited run has guard counts <= n.
  static std::size_t lower_steps_for_depth(std::size_t n) { return 2 * n; }
  // True when exit block at steps_for_depth(n) equals denote_bounded(n).
  bool timing_exact = false;
  QwStmtPtr source;
};

// Compiles with the declared input state (or |0..0><0..0| when absent).
CompiledProgram compile(const QWhileAst &ast);
CompiledProgram compile(const QWhileAst &ast, const Mat &input);

struct WhileNormalForm {
  SuperOp body_channel; // E_pi
  Mat m0;               // I ⊗ |exit><exit|
  Mat m1;               // I - m0
  Mat initial_state;    // embedded sigma_0
  FlatModel model;
};

WhileNormalForm bohm_jacopini(const SequentialProgram &p);
// Output accumulated by the single loop after k body executions.
Mat normal_form_exit(const WhileNormalForm &nf, std::size_t k);
std::vector<Mat> normal_form_exit_trace(const WhileNormalForm &nf,
                                        std::size_t kmax);

} // namespace qtl
