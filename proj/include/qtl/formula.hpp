// SPDX-License-Identifier: Apache-2.0
//
// Temporal formulas over block-diagonal propositions of a flattened program.
//
//   f ::= atom | true | false | f && f | f || f | X f | f U f
//       | atom U~ atom | <> f | <>~ atom | [] f
//
// Unary operators bind tightest, then U / U~, then &&, then ||. Binary
// operators associate to the left.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qtl/program.hpp"
#include "qtl/subspace.hpp"

namespace qtl {

struct Atom {
  std::string name;
  Subspace subspace; // on the embedded space H ⊗ C^configs
};

using AtomTable = std::map<std::string, Atom>;

// Direct sum of per-configuration subspaces; omitted configurations are zero.
Atom atom_from_blocks(const std::string &name,
                      const std::map<std::string, Subspace> &blocks,
                      const FlatModel &model);
// Block of `atom` at configuration c, as a subspace of H.
Subspace atom_block(const Atom &atom, const FlatModel &model, std::size_t c);
// True when the projector commutes with every configuration projector.
bool is_block_diagonal(const Subspace &s, std::size_t dim, std::size_t configs);

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum Kind {
    AtomRef,
    True,
    False,
    And,
    Or,
    Next,
    Until,
    AlmostUntil,
    Eventually,
    AlmostEventually,
    Always
  };
  Kind kind = True;
  std::string atom;               // AtomRef
  std::vector<FormulaPtr> args;   // operands, left to right
};

FormulaPtr f_atom(std::string name);
FormulaPtr f_true();
FormulaPtr f_false();
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_or(FormulaPtr a, FormulaPtr b);
FormulaPtr f_next(FormulaPtr a);
FormulaPtr f_until(FormulaPtr a, FormulaPtr b);
FormulaPtr f_almost_until(std::string hold, std::string target);
FormulaPtr f_eventually(FormulaPtr a);
FormulaPtr f_almost_eventually(std::string target);
FormulaPtr f_always(FormulaPtr a);

// Throws SyntaxError, UnknownAtom, AlmostOperatorOnNonAtom.
FormulaPtr parse_formula(const std::string &text, const AtomTable &atoms);
// Fully parenthesized text that parses back to the same tree.
std::string to_string(const Formula &f);
bool formula_equal(const Formula &a, const Formula &b);

// Union denoted by a formula built from atoms, true, false, && and ||;
// nullopt for anything temporal.
std::optional<SubspaceUnion> state_union(const Formula &f, const AtomTable &atoms,
                                         std::size_t ambient);

struct PrefixSemantics {
  bool bounded = false; // false: exact clauses only
  double delta = 0.0;   // probability slack for <>~ and U~ in bounded mode

  static PrefixSemantics exact() { return {}; }
  static PrefixSemantics with_delta(double d) { return {true, d}; }
};

struct PrefixVerdict {
  enum Kind { Holds, Fails, Inconclusive } kind = Inconclusive;
  std::size_t step = 0; // witness step for Holds, violating step for Fails
};

// Finite-prefix evaluation. Clauses that quantify over unbounded time
// answer Inconclusive unless the prefix already settles them.
PrefixVerdict holds_prefix(const std::vector<Mat> &embedded_trace,
                           const Formula &f, const AtomTable &atoms,
                           PrefixSemantics sem = PrefixSemantics::exact());
PrefixVerdict holds_prefix(const std::vector<CQState> &trace,
                           std::size_t configs, const Formula &f,
                           const AtomTable &atoms,
                           PrefixSemantics sem = PrefixSemantics::exact());

} // namespace qtl
