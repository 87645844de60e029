// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the `qtl` executable. Each command writes
// its report to `out`, errors to `err`, and returns the process exit code:
// 0 Valid / success, 1 NotValid, 2 Unknown, 3 input error.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "qtl/checker.hpp"

namespace qtl::cli {

enum ExitCode { kValid = 0, kNotValid = 1, kUnknown = 2, kInputError = 3 };

struct RunConfig {
  std::string command;
  std::string input;         // program JSON or .qw source
  std::string atoms;         // atoms JSON
  std::string formula;
  std::string output;        // compile: destination, empty for stdout
  double tolerance = 1e-9;
  std::size_t period_bound = 64;
  std::size_t depth = 12;    // oracle depth for shapes it handles
  std::size_t steps = 4;     // simulate
  std::string schedule;      // simulate: "", "enumerate" or comma-separated actions
  bool json = false;
  bool normal_form = false;
  std::size_t budget = 4096; // selector/trace enumeration cap
};

// QTL_BUDGET from the environment, or `fallback`.
std::size_t budget_from_env(std::size_t fallback = 4096);

using AnyProgram = std::variant<SequentialProgram, ConcurrentProgram>;

// `.qw` sources are compiled, anything else is read as program JSON.
AnyProgram load_program(const std::string &path);
FlatModel flat_model(const AnyProgram &p);

// How a formula shape is decided:
//   state formula        initial state against the union
//   X u                  check_next
//   [] u                 check_invariance
//   <> u                 exit analysis for exit-block atoms of deterministic
//                        programs, otherwise the support-graph oracle
//   <>~ p                exit analysis, or the single-action limit check
//   u U v                support-graph oracle
//   <>[] u               check_eventually_always
//   []<> u               check_always_eventually
//   [](u U v)            check_always_until
//   [](p U~ q)           check_always_almost_until
//   f && g, f || g       combined from the parts
// Anything else throws UnsupportedFormula.
struct Dispatch {
  Verdict verdict;
  std::string procedure;
};

Dispatch check_formula(const AnyProgram &p, const Formula &f, const AtomTable &atoms,
                       const CheckOptions &opt, std::size_t oracle_depth);

int cmd_check(const RunConfig &cfg, std::ostream &out, std::ostream &err);
int cmd_compile(const RunConfig &cfg, std::ostream &out, std::ostream &err);
int cmd_reach(const RunConfig &cfg, std::ostream &out, std::ostream &err);
int cmd_simulate(const RunConfig &cfg, std::ostream &out, std::ostream &err);
int run(const RunConfig &cfg, std::ostream &out, std::ostream &err);

} // namespace qtl::cli
