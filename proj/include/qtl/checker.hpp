// SPDX-License-Identifier: Apache-2.0
//
// Decision procedures over quantum automata and sequential programs.
// Answers are three-valued: Unknown is returned with a reason whenever a
// procedure cannot certify its result.
#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qtl/formula.hpp"
#include "qtl/program.hpp"

namespace qtl {

struct CheckOptions {
  double tolerance = 1e-9;
  std::size_t period_bound = 64;
  std::size_t max_rounds = 256;    // refinement rounds for the recurrence check
  std::size_t extension_cap = 0;   // 0: automatic bound on the increasing chain
  std::size_t budget = 4096;       // support-graph nodes for witness searches
  std::size_t lasso_depth = 24;    // action steps explored for lasso witnesses
};

struct Witness {
  std::vector<std::size_t> word; // actions from the initial state
  std::vector<std::size_t> loop; // repeated forever after `word`, may be empty
  std::size_t step = 0;          // index of the violating state
  std::optional<Mat> state;      // the violating state, when finite
  std::string note;
};

struct Diagnostics {
  std::size_t chain_depth = 0;
  std::map<std::string, double> values; // tolerances, residuals, counts
  std::string reason;                   // set for Unknown
};

struct Verdict {
  enum Status { Valid, NotValid, Unknown } status = Unknown;
  std::optional<Witness> witness;
  std::optional<SubspaceUnion> certificate;
  Diagnostics diagnostics;
};

std::string to_string(Verdict::Status s);

// u must live on the automaton's state space.
Verdict check_next(const QuantumAutomaton &a, const SubspaceUnion &u);
Verdict check_invariance(const QuantumAutomaton &a, const SubspaceUnion &u,
                         const CheckOptions &opt = {});

struct FixpointStats {
  std::size_t iterations = 0;
  bool converged = true;
};

// Largest x inside r whose joint image is x again.
SubspaceUnion maximal_invariant(const QuantumAutomaton &a, const SubspaceUnion &r,
                                FixpointStats *stats = nullptr);
// Limit of the increasing chain y_{k+1} = meet over actions of pre-images of
// y_k, starting from an invariant x. Throws PreconditionViolated when x is
// not invariant and BudgetExceeded when the chain does not settle.
SubspaceUnion maximal_extension(const QuantumAutomaton &a, const SubspaceUnion &x,
                                const CheckOptions &opt = {},
                                FixpointStats *stats = nullptr);

Verdict check_eventually_always(const QuantumAutomaton &a, const SubspaceUnion &u,
                                const CheckOptions &opt = {});
Verdict check_always_eventually(const QuantumAutomaton &a, const SubspaceUnion &u,
                                const CheckOptions &opt = {});
Verdict check_always_until(const QuantumAutomaton &a, const SubspaceUnion &phi,
                           const SubspaceUnion &psi, const CheckOptions &opt = {});
// Single-action automata only.
Verdict check_always_almost_until(const QuantumAutomaton &a, const Subspace &p,
                                  const Subspace &q, const CheckOptions &opt = {});

struct ReachabilityResult {
  std::optional<SuperOp> channel; // Kraus form of the reachability map, when exact
  Mat channel_rep;                // its matrix representation
  Mat output;                     // F(sigma_0) on the embedded space
  Rational exit_trace;            // tr F(sigma_0)
  bool almost_terminates = false;
  double expected_steps = std::numeric_limits<double>::infinity();
  double guard_count = std::numeric_limits<double>::infinity(); // expected loop-guard evaluations
  bool exact = false;             // peripheral split and inversion exact
  double power_residual = 0;      // ||F(sigma_0) - M0 E^64(sigma_0) M0||_1
  double stable_radius = 0;
  std::size_t kraus_rank = 0;
};

ReachabilityResult reachability_superop(const SequentialProgram &p,
                                        const CheckOptions &opt = {});

struct ExitVerdicts {
  Verdict eventually;
  Verdict almost_eventually;
  Verdict always;
};

// <> and <>~ use P_exit ⊗ |exit><exit|; [] uses `always_atom` on the
// embedded space (P_exit ⊗ |exit><exit| when absent).
ExitVerdicts check_exit_formulas(const SequentialProgram &p, const Subspace &p_exit,
                                 const std::optional<Subspace> &always_atom = {},
                                 const CheckOptions &opt = {});

// `t` = 0 selects d^2 - 1; smaller explicit values are rejected.
Verdict kleene_always(const SuperOp &e, const Mat &rho_ab, const Subspace &p,
                      std::size_t t = 0);

enum class HoareMode { Partial, Total };
Verdict hoare_check(const SequentialProgram &p, const Subspace &pre,
                    const Subspace &post, HoareMode mode,
                    const CheckOptions &opt = {});

struct OracleResult {
  enum Kind { Holds, Fails, Inconclusive } kind = Inconclusive;
  std::optional<Witness> witness;
  std::size_t nodes = 0;  // distinct supports explored
  bool closed = false;    // every reachable support was expanded
};

// Brute-force evaluation on the graph of reachable supports, explored to
// `depth` action steps. Handles state formulas, X, [], <>, U, <>[], []<>,
// [](u U v) and conjunctions of those.
OracleResult oracle_bfs(const QuantumAutomaton &a, const Formula &f,
                        const AtomTable &atoms, std::size_t depth,
                        std::size_t budget = 4096);

} // namespace qtl
