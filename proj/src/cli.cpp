// SPDX-License-Identifier: Apache-2.0
#include "qtl/cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qtl/io.hpp"
#include "qtl/qwhile.hpp"

namespace qtl::cli {

namespace {

using io::json;

bool ends_with(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const SequentialProgram *exit_program(const AnyProgram &p) {
  const auto *s = std::get_if<SequentialProgram>(&p);
  if (s && s->exit_location && s->deterministic())
    return s;
  return nullptr;
}

// The block of `atom` at the exit configuration when every other block is
// zero, i.e. the atom has the form P_exit ⊗ |exit><exit|.
std::optional<Subspace> exit_block(const Atom &atom, const FlatModel &m) {
  if (!m.exit_config)
    return std::nullopt;
  for (std::size_t c = 0; c < m.configs(); ++c)
    if (c != *m.exit_config && !atom_block(atom, m, c).is_zero())
      return std::nullopt;
  return atom_block(atom, m, *m.exit_config);
}

const Atom &atom_of(const Formula &f, const AtomTable &atoms) {
  auto it = atoms.find(f.atom);
  if (f.kind != Formula::AtomRef || it == atoms.end())
    throw UnknownAtom("'" + to_string(f) + "' is not a declared atom");
  return it->second;
}

Verdict from_oracle(const OracleResult &r, std::size_t depth) {
  Verdict v;
  v.diagnostics.values["oracle_nodes"] = static_cast<double>(r.nodes);
  v.diagnostics.values["oracle_depth"] = static_cast<double>(depth);
  switch (r.kind) {
  case OracleResult::Holds:
    v.status = Verdict::Valid;
    break;
  case OracleResult::Fails:
    v.status = Verdict::NotValid;
    v.witness = r.witness;
    break;
  case OracleResult::Inconclusive:
    v.status = Verdict::Unknown;
    v.diagnostics.reason = "support-graph search inconclusive at depth " +
                           std::to_string(depth);
    break;
  }
  return v;
}

Verdict combine(const Verdict &l, const Verdict &r, bool conj) {
  Verdict v;
  auto pick = [&](Verdict::Status s) -> const Verdict * {
    if (l.status == s)
      return &l;
    if (r.status == s)
      return &r;
    return nullptr;
  };
  if (conj) {
    if (const Verdict *bad = pick(Verdict::NotValid))
      return *bad;
    if (l.status == Verdict::Valid && r.status == Verdict::Valid) {
      v.status = Verdict::Valid;
      return v;
    }
  } else {
    if (const Verdict *good = pick(Verdict::Valid))
      return *good;
  }
  // A disjunction of two refuted trace properties may still be valid.
  v.status = Verdict::Unknown;
  const Verdict *u = pick(Verdict::Unknown);
  v.diagnostics.reason = u ? u->diagnostics.reason
                           : "disjunction of refuted properties is not decided";
  return v;
}

Verdict state_verdict(const QuantumAutomaton &a, const SubspaceUnion &u) {
  Verdict v;
  if (satisfies(a.initial_state, u)) {
    v.status = Verdict::Valid;
    return v;
  }
  v.status = Verdict::NotValid;
  Witness w;
  w.state = a.initial_state;
  v.witness = w;
  return v;
}

// <>~ p without an exit-block atom. The limit check covers every tail; a
// refuted limit leaves the finite prefix, checked up to D steps.
Verdict almost_eventually_general(const QuantumAutomaton &a, const Subspace &p,
                                  const CheckOptions &opt) {
  if (a.actions.size() != 1)
    return Verdict{Verdict::Unknown, {}, {}, {0, {}, "almost-eventually needs a single action"}};
  Verdict lim = check_always_almost_until(a, Subspace::full(a.dim), p, opt);
  if (lim.status == Verdict::Valid)
    return lim;
  Mat s = a.initial_state;
  for (std::size_t k = 0; k <= a.dim; ++k) {
    if (satisfies(s, p)) {
      Verdict v;
      v.status = Verdict::Valid;
      v.diagnostics.values["witness_step"] = static_cast<double>(k);
      return v;
    }
    s = apply(a.actions[0], s);
  }
  Verdict v;
  v.status = Verdict::Unknown;
  v.diagnostics.reason = lim.status == Verdict::NotValid
                             ? "limit points miss the target; finite steps unresolved"
                             : lim.diagnostics.reason;
  return v;
}

void print_human(std::ostream &out, const Dispatch &d) {
  const Verdict &v = d.verdict;
  out << "status: " << to_string(v.status) << "\n";
  out << "procedure: " << d.procedure << "\n";
  if (!v.diagnostics.reason.empty())
    out << "reason: " << v.diagnostics.reason << "\n";
  out << "chain depth: " << v.diagnostics.chain_depth << "\n";
  for (const auto &[k, x] : v.diagnostics.values)
    out << k << ": " << x << "\n";
  if (v.certificate)
    out << "certificate: " << describe(*v.certificate) << "\n";
  if (v.witness) {
    const Witness &w = *v.witness;
    out << "witness: word [";
    for (std::size_t i = 0; i < w.word.size(); ++i)
      out << (i ? "," : "") << w.word[i];
    out << "]";
    if (!w.loop.empty()) {
      out << " loop [";
      for (std::size_t i = 0; i < w.loop.size(); ++i)
        out << (i ? "," : "") << w.loop[i];
      out << "]";
    }
    out << " step " << w.step;
    if (!w.note.empty())
      out << " (" << w.note << ")";
    out << "\n";
  }
}

int exit_code(Verdict::Status s) {
  switch (s) {
  case Verdict::Valid:
    return kValid;
  case Verdict::NotValid:
    return kNotValid;
  case Verdict::Unknown:
    return kUnknown;
  }
  return kUnknown;
}

// Runs `body`, mapping library and JSON errors to exit code 3.
template <class F> int guarded(std::ostream &err, F &&body) {
  try {
    return body();
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
  } catch (const json::exception &e) {
    err << "error: malformed JSON: " << e.what() << "\n";
  } catch (const std::invalid_argument &e) {
    err << "error: " << e.what() << "\n";
  }
  return kInputError;
}

CheckOptions options_of(const RunConfig &cfg) {
  if (!(cfg.tolerance > 0))
    throw PreconditionViolated("tolerance must be positive");
  if (cfg.period_bound < 1)
    throw PreconditionViolated("period bound must be at least 1");
  CheckOptions opt;
  opt.tolerance = cfg.tolerance;
  opt.period_bound = cfg.period_bound;
  opt.budget = cfg.budget;
  return opt;
}

std::vector<std::size_t> parse_word(const std::string &text) {
  std::vector<std::size_t> w;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      w.push_back(std::stoul(item));
  return w;
}

std::string block_text(const CQState &s, const FlatModel &m) {
  std::ostringstream os;
  for (const auto &[c, rho] : s.blocks) {
    os << "  " << m.labels[c] << " (trace " << to_string(rho.trace().re) << "): [";
    for (std::size_t i = 0; i < rho.rows(); ++i) {
      os << (i ? ", " : "") << "[";
      for (std::size_t j = 0; j < rho.cols(); ++j)
        os << (j ? ", " : "") << to_string(rho(i, j));
      os << "]";
    }
    os << "]\n";
  }
  return os.str();
}

} // namespace

std::size_t budget_from_env(std::size_t fallback) {
  const char *v = std::getenv("QTL_BUDGET");
  if (!v || !*v)
    return fallback;
  char *end = nullptr;
  unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0)
    throw PreconditionViolated(std::string("QTL_BUDGET must be a positive integer, got '") +
                               v + "'");
  return static_cast<std::size_t>(n);
}

AnyProgram load_program(const std::string &path) {
  if (ends_with(path, ".qw"))
    return compile(parse_qwhile(io::read_text_file(path))).program;
  return io::program_from_json(io::read_json_file(path));
}

FlatModel flat_model(const AnyProgram &p) {
  return std::visit([](const auto &q) { return flatten(q); }, p);
}

Dispatch check_formula(const AnyProgram &p, const Formula &f, const AtomTable &atoms,
                       const CheckOptions &opt, std::size_t oracle_depth) {
  const FlatModel model = flat_model(p);
  const QuantumAutomaton a =
      std::visit([&](const auto &q) { return to_automaton(q, opt.budget); }, p);
  const std::size_t D = a.dim;
  auto st = [&](const Formula &g) { return state_union(g, atoms, D); };
  const SequentialProgram *seq = exit_program(p);

  if (auto u = st(f))
    return {state_verdict(a, *u), "initial state"};

  switch (f.kind) {
  case Formula::Next:
    if (auto u = st(*f.args[0]))
      return {check_next(a, *u), "check_next"};
    break;
  case Formula::Always: {
    const Formula &g = *f.args[0];
    if (auto u = st(g))
      return {check_invariance(a, *u, opt), "check_invariance"};
    if (g.kind == Formula::Eventually)
      if (auto u = st(*g.args[0]))
        return {check_always_eventually(a, *u, opt), "check_always_eventually"};
    if (g.kind == Formula::Until) {
      auto u = st(*g.args[0]), v = st(*g.args[1]);
      if (u && v)
        return {check_always_until(a, *u, *v, opt), "check_always_until"};
    }
    if (g.kind == Formula::AlmostUntil) {
      const Atom &hold = atom_of(*g.args[0], atoms), &target = atom_of(*g.args[1], atoms);
      if (a.actions.size() != 1)
        throw UnsupportedFormula("[](p U~ q) needs a single action");
      return {check_always_almost_until(a, hold.subspace, target.subspace, opt),
              "check_always_almost_until"};
    }
    break;
  }
  case Formula::Eventually: {
    const Formula &g = *f.args[0];
    if (g.kind == Formula::Always)
      if (auto u = st(*g.args[0]))
        return {check_eventually_always(a, *u, opt), "check_eventually_always"};
    if (g.kind == Formula::AtomRef && seq)
      if (auto pe = exit_block(atom_of(g, atoms), model))
        return {check_exit_formulas(*seq, *pe, std::nullopt, opt).eventually,
                "exit analysis (termination bound)"};
    if (st(g))
      return {from_oracle(oracle_bfs(a, f, atoms, oracle_depth, opt.budget), oracle_depth),
              "support-graph oracle"};
    break;
  }
  case Formula::AlmostEventually: {
    const Atom &target = atom_of(*f.args[0], atoms);
    if (seq)
      if (auto pe = exit_block(target, model))
        return {check_exit_formulas(*seq, *pe, std::nullopt, opt).almost_eventually,
                "exit analysis (reachability map)"};
    return {almost_eventually_general(a, target.subspace, opt), "limit-point check"};
  }
  case Formula::Until:
    if (st(*f.args[0]) && st(*f.args[1]))
      return {from_oracle(oracle_bfs(a, f, atoms, oracle_depth, opt.budget), oracle_depth),
              "support-graph oracle"};
    break;
  case Formula::And:
  case Formula::Or: {
    Dispatch l = check_formula(p, *f.args[0], atoms, opt, oracle_depth);
    Dispatch r = check_formula(p, *f.args[1], atoms, opt, oracle_depth);
    return {combine(l.verdict, r.verdict, f.kind == Formula::And),
            "(" + l.procedure + (f.kind == Formula::And ? ") and (" : ") or (") +
                r.procedure + ")"};
  }
  default:
    break;
  }
  throw UnsupportedFormula("no decision procedure for '" + to_string(f) +
                           "'; see the shape table in the README");
}

int cmd_check(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    CheckOptions opt = options_of(cfg);
    AnyProgram p = load_program(cfg.input);
    FlatModel model = flat_model(p);
    AtomTable atoms;
    if (!cfg.atoms.empty())
      atoms = io::atoms_from_json(io::read_json_file(cfg.atoms), model);
    if (cfg.formula.empty())
      throw SyntaxError("no formula given");
    FormulaPtr f = parse_formula(cfg.formula, atoms);
    Dispatch d = check_formula(p, *f, atoms, opt, cfg.depth);
    if (cfg.json) {
      json j = io::to_json(d.verdict);
      j["formula"] = to_string(*f);
      j["procedure"] = d.procedure;
      out << j.dump(2) << "\n";
    } else {
      out << "formula: " << to_string(*f) << "\n";
      print_human(out, d);
    }
    return exit_code(d.verdict.status);
  });
}

int cmd_compile(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    AnyProgram p = load_program(cfg.input);
    json j;
    if (cfg.normal_form) {
      const auto *seq = std::get_if<SequentialProgram>(&p);
      if (!seq)
        throw NotDeterministic("normal form needs a sequential program");
      j = io::to_json(bohm_jacopini(*seq));
    } else {
      j = std::visit([](const auto &q) { return io::json(io::to_json(q)); }, p);
    }
    std::string text = j.dump(2) + "\n";
    if (cfg.output.empty())
      out << text;
    else
      io::write_text_file(cfg.output, text);
    return kValid;
  });
}

int cmd_reach(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    CheckOptions opt = options_of(cfg);
    AnyProgram p = load_program(cfg.input);
    const auto *seq = std::get_if<SequentialProgram>(&p);
    if (!seq)
      throw NotDeterministic("reachability needs a sequential program");
    ReachabilityResult r = reachability_superop(*seq, opt);
    if (cfg.json) {
      out << io::to_json(r).dump(2) << "\n";
    } else {
      out << "kraus rank: " << r.kraus_rank << "\n";
      out << "exit trace: " << to_string(r.exit_trace) << "\n";
      out << "almost terminates: " << (r.almost_terminates ? "yes" : "no") << "\n";
      out << "expected steps: " << r.expected_steps << "\n";
      out << "exact: " << (r.exact ? "yes" : "no") << "\n";
      out << "power residual: " << r.power_residual << "\n";
      out << "stable radius: " << r.stable_radius << "\n";
    }
    return kValid;
  });
}

int cmd_simulate(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    AnyProgram p = load_program(cfg.input);
    FlatModel m = flat_model(p);
    AtomTable atoms;
    if (!cfg.atoms.empty())
      atoms = io::atoms_from_json(io::read_json_file(cfg.atoms), m);
    std::vector<Selector> sel = enumerate_selectors(m, cfg.budget);
    const std::size_t steps = cfg.steps;

    std::vector<std::vector<std::size_t>> words;
    if (cfg.schedule == "enumerate") {
      std::size_t total = 1;
      for (std::size_t k = 0; k < steps; ++k) {
        total *= sel.size();
        if (total > cfg.budget)
          throw BudgetExceeded(std::to_string(sel.size()) + "^" + std::to_string(steps) +
                               " traces exceed the budget " + std::to_string(cfg.budget));
      }
      for (std::size_t n = 0; n < total; ++n) {
        std::vector<std::size_t> w(steps);
        std::size_t x = n;
        for (std::size_t k = steps; k-- > 0;) {
          w[k] = x % sel.size();
          x /= sel.size();
        }
        words.push_back(std::move(w));
      }
    } else {
      std::vector<std::size_t> w = parse_word(cfg.schedule);
      if (w.empty())
        w.assign(steps, 0);
      if (w.size() < steps)
        throw PreconditionViolated("schedule shorter than the step count");
      w.resize(steps);
      for (auto x : w)
        if (x >= sel.size())
          throw PreconditionViolated("schedule names action " + std::to_string(x) +
                                     " of " + std::to_string(sel.size()));
      words.push_back(std::move(w));
    }

    json traces = json::array();
    for (const auto &w : words) {
      CQState s = initial_cqstate(m);
      json tj;
      tj["word"] = w;
      json states = json::array();
      if (!cfg.json && words.size() > 1) {
        out << "trace [";
        for (std::size_t i = 0; i < w.size(); ++i)
          out << (i ? "," : "") << w[i];
        out << "]\n";
      }
      for (std::size_t k = 0; k <= steps; ++k) {
        json sj;
        sj["step"] = k;
        sj["blocks"] = io::to_json(s, m);
        json probs = json::object();
        Mat big = embed(m, s);
        for (const auto &[name, atom] : atoms)
          probs[name] = to_string((atom.subspace.projector() * big).trace().re);
        if (!atoms.empty())
          sj["atoms"] = probs;
        if (!cfg.json) {
          out << "step " << k << "\n" << block_text(s, m);
          for (auto it = probs.begin(); it != probs.end(); ++it)
            out << "  P(" << it.key() << ") = " << it.value().get<std::string>() << "\n";
        }
        states.push_back(sj);
        if (k < steps)
          s = step(m, s, sel[w[k]]);
      }
      tj["states"] = states;
      traces.push_back(tj);
    }
    if (cfg.json) {
      json j;
      j["traces"] = traces;
      out << j.dump(2) << "\n";
    } else if (words.size() > 1) {
      out << words.size() << " traces\n";
    }
    return kValid;
  });
}

int run(const RunConfig &cfg, std::ostream &out, std::ostream &err) {
  if (cfg.command == "check")
    return cmd_check(cfg, out, err);
  if (cfg.command == "compile")
    return cmd_compile(cfg, out, err);
  if (cfg.command == "reach")
    return cmd_reach(cfg, out, err);
  if (cfg.command == "simulate")
    return cmd_simulate(cfg, out, err);
  err << "error: unknown command '" << cfg.command << "'\n";
  return kInputError;
}

} // namespace qtl::cli
