// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qtl/superop.hpp"

namespace qtl {

// A next-location entry. `sched` is the scheduler index handed to the next
// step (0-based); sequential programs leave it at 0.
struct Target {
  std::size_t loc = 0;
  std::size_t sched = 0;
  bool operator==(const Target &o) const {
    return loc == o.loc && sched == o.sched;
  }
};

struct LocationAct {
  SuperOp channel;
  Measurement measurement;
  std::vector<std::vector<Target>> next; // next[outcome]
};

struct SequentialProgram {
  std::size_t dim = 0;
  std::vector<std::string> locations;
  std::vector<LocationAct> act;
  Mat initial_state;
  std::size_t initial_location = 0;
  std::optional<std::size_t> exit_location;

  std::size_t index_of(const std::string &label) const;
  bool deterministic() const;
  // Throws MalformedProgram on any invariant violation.
  void validate() const;
};

struct Process {
  std::vector<std::string> locations;
  std::vector<LocationAct> act;
  std::size_t index_of(const std::string &label) const;
};

struct ConcurrentProgram {
  std::size_t dim = 0;
  std::vector<Process> processes;
  Mat initial_state;
  std::vector<std::size_t> initial_locations;
  std::size_t initial_scheduler = 0; // 0-based

  void validate() const;
};

// Either program model flattened onto its classical configurations. Each
// configuration owns one channel and one measurement; choices are shared
// between configurations when they stem from the same (process, outcome,
// location) triple, which is what a selector fixes.
struct FlatModel {
  struct Choice {
    std::size_t choice_id = 0;
    std::vector<std::size_t> options; // configuration indices
  };
  std::size_t dim = 0;
  std::vector<std::string> labels;
  std::vector<SuperOp> channel;
  std::vector<Measurement> measurement;
  std::vector<std::vector<Choice>> next; // next[config][outcome]
  std::vector<std::size_t> choice_arity;
  std::vector<std::string> choice_names;
  Mat initial_state; // dim x dim
  std::size_t initial_config = 0;
  std::optional<std::size_t> exit_config;

  std::size_t configs() const { return labels.size(); }
  std::size_t embedded_dim() const { return dim * labels.size(); }
  std::size_t config_index(const std::string &label) const;
  bool deterministic() const;
};

FlatModel flatten(const SequentialProgram &p);
FlatModel flatten(const ConcurrentProgram &p);

// Block-sparse classical-quantum state.
struct CQState {
  std::size_t dim = 0;
  std::map<std::size_t, Mat> blocks;

  CQState() = default;
  CQState(std::size_t d) : dim(d) {}
  static CQState at(std::size_t config, const Mat &rho);
  Rational total_trace() const;
  Rational trace_at(std::size_t config) const;
  void add(std::size_t config, const Mat &rho);
  bool operator==(const CQState &o) const { return blocks == o.blocks; }
};

using Selector = std::vector<std::size_t>; // one option index per choice id

CQState initial_cqstate(const FlatModel &m);
CQState step(const FlatModel &m, const CQState &s, const Selector &f);
std::vector<CQState> successors(const FlatModel &m, const CQState &s);
std::vector<CQState> successors(const SequentialProgram &p, const CQState &s);
std::vector<CQState> successors(const ConcurrentProgram &p, const CQState &s);

SuperOp action_superop(const FlatModel &m, const Selector &f);
SuperOp step_superop(const FlatModel &m);
SuperOp step_superop(const SequentialProgram &p);

Mat embed(const FlatModel &m, const CQState &s);
Mat embed(std::size_t dim, std::size_t configs, const CQState &s);
CQState extract(const Mat &big, std::size_t dim, std::size_t configs);
CQState extract(const Mat &big, const FlatModel &m);
// Embedded projector of I_H ⊗ |c><c| summed over the listed configurations.
Mat config_projector(const FlatModel &m, const std::vector<std::size_t> &cs);

struct QuantumAutomaton {
  std::size_t dim = 0;
  std::vector<std::string> action_names;
  std::vector<SuperOp> actions;
  Mat initial_state;
  void validate() const;
};

std::size_t selector_count(const FlatModel &m);
std::vector<Selector> enumerate_selectors(const FlatModel &m,
                                          std::size_t cap = 4096);
QuantumAutomaton to_automaton(const FlatModel &m, std::size_t cap = 4096);
QuantumAutomaton to_automaton(const SequentialProgram &p, std::size_t cap = 4096);
QuantumAutomaton to_automaton(const ConcurrentProgram &p, std::size_t cap = 4096);

struct TerminationResult {
  enum Kind { Terminates, AlmostTerminatesCandidate, No } kind = No;
  std::size_t step = 0;            // for Terminates
  Rational exit_trace_at_horizon;  // for the other two
  std::size_t horizon = 0;
};

// horizon 0 selects the default d*l - 1.
TerminationResult check_terminates(const SequentialProgram &p,
                                   std::size_t horizon = 0);

} // namespace qtl
