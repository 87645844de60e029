// SPDX-License-Identifier: Apache-2.0
#include "qtl/program.hpp"

#include <limits>

namespace qtl {

namespace {

std::size_t find_label(const std::vector<std::string> &labels,
                       const std::string &label) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label)
      return i;
  throw MalformedProgram("unknown location '" + label + "'");
}

void validate_act(const LocationAct &a, std::size_t dim, std::size_t nlocs,
                  std::size_t nsched, const std::string &where) {
  if (a.channel.dim_in() != dim || a.channel.dim_out() != dim)
    throw MalformedProgram(where + ": channel dimension mismatch");
  if (!a.channel.trace_preserving())
    throw MalformedProgram(where + ": channel is not trace preserving");
  if (a.measurement.dim() != dim)
    throw MalformedProgram(where + ": measurement dimension mismatch");
  if (a.next.size() != a.measurement.outcomes())
    throw MalformedProgram(where + ": next must cover every outcome");
  for (const auto &ts : a.next) {
    if (ts.empty())
      throw MalformedProgram(where + ": empty next-location set");
    for (const auto &t : ts)
      if (t.loc >= nlocs || t.sched >= nsched)
        throw MalformedProgram(where + ": next location out of range");
  }
}

bool is_identity_measurement(const Measurement &m) {
  const std::size_t n = m.dim();
  const KrausOp &k0 = m.op(0);
  if (!channel_equal(SuperOp(n, n, {k0}), SuperOp::identity(n)))
    return false;
  for (std::size_t j = 1; j < m.outcomes(); ++j)
    if (sgn(m.op(j).weight) != 0 && !m.op(j).op.is_zero())
      return false;
  return true;
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

} // namespace

std::size_t SequentialProgram::index_of(const std::string &label) const {
  return find_label(locations, label);
}

std::size_t Process::index_of(const std::string &label) const {
  return find_label(locations, label);
}

bool SequentialProgram::deterministic() const {
  for (const auto &a : act)
    for (const auto &ts : a.next)
      if (ts.size() != 1)
        return false;
  return true;
}

void SequentialProgram::validate() const {
  if (locations.empty() || act.size() != locations.size())
    throw MalformedProgram("every location needs an action entry");
  if (initial_location >= locations.size())
    throw MalformedProgram("initial location out of range");
  if (initial_state.rows() != dim || !is_psd(initial_state) ||
      initial_state.trace() != CRat(1))
    throw MalformedProgram("initial state must be a density operator of dimension " +
                           std::to_string(dim));
  for (std::size_t l = 0; l < act.size(); ++l)
    validate_act(act[l], dim, locations.size(), 1, "location " + locations[l]);
  if (exit_location) {
    const std::size_t e = *exit_location;
    if (e >= locations.size())
      throw MalformedProgram("exit location out of range");
    const LocationAct &a = act[e];
    if (!channel_equal(a.channel, SuperOp::identity(dim)))
      throw MalformedProgram("exit location channel must be the identity");
    if (!is_identity_measurement(a.measurement))
      throw MalformedProgram("exit location measurement must be {I,0,...}");
    for (const auto &ts : a.next)
      for (const auto &t : ts)
        if (t.loc != e)
          throw MalformedProgram("exit location must loop to itself");
  }
}

void ConcurrentProgram::validate() const {
  if (processes.empty())
    throw MalformedProgram("concurrent program needs at least one process");
  if (initial_locations.size() != processes.size())
    throw MalformedProgram("one initial location per process is required");
  if (initial_scheduler >= processes.size())
    throw MalformedProgram("initial scheduler out of range");
  if (initial_state.rows() != dim || !is_psd(initial_state) ||
      initial_state.trace() != CRat(1))
    throw MalformedProgram("initial state must be a density operator");
  for (std::size_t s = 0; s < processes.size(); ++s) {
    const Process &p = processes[s];
    if (p.locations.empty() || p.act.size() != p.locations.size())
      throw MalformedProgram("process " + std::to_string(s + 1) +
                             ": every location needs an action entry");
    if (initial_locations[s] >= p.locations.size())
      throw MalformedProgram("initial location out of range");
    for (std::size_t l = 0; l < p.act.size(); ++l)
      validate_act(p.act[l], dim, p.locations.size(), processes.size(),
                   "process " + std::to_string(s + 1) + " location " +
                       p.locations[l]);
  }
}

// ---------------------------------------------------------------------------
// Flattening

std::size_t FlatModel::config_index(const std::string &label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label)
      return i;
  throw UnknownConfiguration("no configuration labelled '" + label + "'");
}

bool FlatModel::deterministic() const {
  for (auto a : choice_arity)
    if (a != 1)
      return false;
  return true;
}

FlatModel flatten(const SequentialProgram &p) {
  p.validate();
  FlatModel m;
  m.dim = p.dim;
  m.labels = p.locations;
  m.initial_state = p.initial_state;
  m.initial_config = p.initial_location;
  m.exit_config = p.exit_location;
  m.next.resize(p.locations.size());
  for (std::size_t l = 0; l < p.locations.size(); ++l) {
    const LocationAct &a = p.act[l];
    m.channel.push_back(a.channel);
    m.measurement.push_back(a.measurement);
    for (std::size_t j = 0; j < a.next.size(); ++j) {
      FlatModel::Choice c;
      c.choice_id = m.choice_arity.size();
      for (const auto &t : a.next[j])
        c.options.push_back(t.loc);
      m.choice_arity.push_back(c.options.size());
      m.choice_names.push_back(std::to_string(j) + "@" + p.locations[l]);
      m.next[l].push_back(std::move(c));
    }
  }
  return m;
}

FlatModel flatten(const ConcurrentProgram &p) {
  p.validate();
  const std::size_t np = p.processes.size();
  FlatModel m;
  m.dim = p.dim;
  m.initial_state = p.initial_state;

  // Mixed-radix configuration index: locations of process 0..np-1, then
  // the scheduler as the least significant digit.
  std::vector<std::size_t> radix(np);
  std::size_t nconf = np;
  for (std::size_t s = 0; s < np; ++s) {
    radix[s] = p.processes[s].locations.size();
    nconf = saturating_mul(nconf, radix[s]);
  }
  if (nconf > (1u << 16))
    throw SelectorExplosion("configuration space too large: " +
                            std::to_string(nconf));
  auto encode = [&](const std::vector<std::size_t> &locs, std::size_t sched) {
    std::size_t idx = 0;
    for (std::size_t s = 0; s < np; ++s)
      idx = idx * radix[s] + locs[s];
    return idx * np + sched;
  };
  auto decode = [&](std::size_t idx, std::vector<std::size_t> &locs) {
    std::size_t sched = idx % np;
    idx /= np;
    locs.assign(np, 0);
    for (std::size_t s = np; s-- > 0;) {
      locs[s] = idx % radix[s];
      idx /= radix[s];
    }
    return sched;
  };

  // Choice ids are shared per (process, outcome, location).
  std::vector<std::vector<std::vector<std::size_t>>> choice_of(np);
  for (std::size_t s = 0; s < np; ++s) {
    const Process &pr = p.processes[s];
    choice_of[s].resize(pr.locations.size());
    for (std::size_t l = 0; l < pr.locations.size(); ++l)
      for (std::size_t j = 0; j < pr.act[l].next.size(); ++j) {
        choice_of[s][l].push_back(m.choice_arity.size());
        m.choice_arity.push_back(pr.act[l].next[j].size());
        m.choice_names.push_back(std::to_string(j) + "@" + pr.locations[l] +
                                 "#" + std::to_string(s + 1));
      }
  }

  m.labels.resize(nconf);
  m.next.resize(nconf);
  std::vector<std::size_t> locs;
  for (std::size_t idx = 0; idx < nconf; ++idx) {
    std::size_t sched = decode(idx, locs);
    std::string label;
    for (std::size_t s = 0; s < np; ++s)
      label += (s ? "," : "") + p.processes[s].locations[locs[s]];
    label += "@" + std::to_string(sched + 1);
    m.labels[idx] = label;
    const LocationAct &a = p.processes[sched].act[locs[sched]];
    m.channel.push_back(a.channel);
    m.measurement.push_back(a.measurement);
    for (std::size_t j = 0; j < a.next.size(); ++j) {
      FlatModel::Choice c;
      c.choice_id = choice_of[sched][locs[sched]][j];
      for (const auto &t : a.next[j]) {
        std::vector<std::size_t> nl = locs;
        nl[sched] = t.loc;
        c.options.push_back(encode(nl, t.sched));
      }
      m.next[idx].push_back(std::move(c));
    }
  }
  m.initial_config = encode(p.initial_locations, p.initial_scheduler);
  return m;
}

// ---------------------------------------------------------------------------
// States and steps

CQState CQState::at(std::size_t config, const Mat &rho) {
  CQState s(rho.rows());
  s.add(config, rho);
  return s;
}

Rational CQState::total_trace() const {
  Rational t = 0;
  for (const auto &[c, b] : blocks)
    t += b.trace().re;
  return t;
}

Rational CQState::trace_at(std::size_t config) const {
  auto it = blocks.find(config);
  return it == blocks.end() ? Rational(0) : it->second.trace().re;
}

void CQState::add(std::size_t config, const Mat &rho) {
  if (rho.is_zero())
    return;
  auto it = blocks.find(config);
  if (it == blocks.end()) {
    blocks.emplace(config, rho);
    return;
  }
  it->second += rho;
  if (it->second.is_zero())
    blocks.erase(it);
}

CQState initial_cqstate(const FlatModel &m) {
  return CQState::at(m.initial_config, m.initial_state);
}

CQState step(const FlatModel &m, const CQState &s, const Selector &f) {
  if (f.size() != m.choice_arity.size())
    throw MalformedState("selector length does not match the program");
  CQState out(m.dim);
  for (const auto &[c, rho] : s.blocks) {
    if (c >= m.configs() || rho.rows() != m.dim)
      throw MalformedState("state block outside the program's configurations");
    Mat after = apply(m.channel[c], rho);
    for (std::size_t j = 0; j < m.measurement[c].outcomes(); ++j) {
      Mat b = m.measurement[c].apply(j, after);
      if (b.is_zero())
        continue;
      const auto &choice = m.next[c][j];
      out.add(choice.options.at(f[choice.choice_id]), b);
    }
  }
  return out;
}

std::vector<CQState> successors(const FlatModel &m, const CQState &s) {
  // Only choices that receive nonzero weight from s matter; the others
  // would yield duplicate successors.
  std::vector<std::size_t> live;
  std::vector<bool> seen(m.choice_arity.size(), false);
  for (const auto &[c, rho] : s.blocks) {
    if (c >= m.configs())
      throw MalformedState("state block outside the program's configurations");
    Mat after = apply(m.channel[c], rho);
    for (std::size_t j = 0; j < m.measurement[c].outcomes(); ++j) {
      std::size_t id = m.next[c][j].choice_id;
      if (!seen[id] && !m.measurement[c].apply(j, after).is_zero()) {
        seen[id] = true;
        live.push_back(id);
      }
    }
  }
  std::vector<CQState> out;
  Selector f(m.choice_arity.size(), 0);
  std::size_t budget = 1;
  for (auto id : live)
    budget = saturating_mul(budget, m.choice_arity[id]);
  if (budget > 4096)
    throw SelectorExplosion("too many successors: " + std::to_string(budget));
  while (true) {
    CQState t = step(m, s, f);
    bool dup = false;
    for (const auto &o : out)
      if (o == t) {
        dup = true;
        break;
      }
    if (!dup)
      out.push_back(std::move(t));
    std::size_t k = 0;
    for (; k < live.size(); ++k) {
      std::size_t id = live[k];
      if (++f[id] < m.choice_arity[id])
        break;
      f[id] = 0;
    }
    if (k == live.size())
      break;
  }
  return out;
}

std::vector<CQState> successors(const SequentialProgram &p, const CQState &s) {
  return successors(flatten(p), s);
}

std::vector<CQState> successors(const ConcurrentProgram &p, const CQState &s) {
  return successors(flatten(p), s);
}

SuperOp action_superop(const FlatModel &m, const Selector &f) {
  if (f.size() != m.choice_arity.size())
    throw MalformedState("selector length does not match the program");
  const std::size_t C = m.configs();
  const std::size_t D = m.embedded_dim();
  std::vector<KrausOp> ks;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < m.measurement[c].outcomes(); ++j) {
      const KrausOp &mj = m.measurement[c].op(j);
      if (sgn(mj.weight) == 0 || mj.op.is_zero())
        continue;
      const auto &choice = m.next[c][j];
      std::size_t target = choice.options.at(f[choice.choice_id]);
      Mat move = Mat::unit(C, target, c);
      for (const auto &ek : m.channel[c].kraus()) {
        Rational w = mj.weight * ek.weight;
        if (sgn(w) == 0)
          continue;
        Mat prod = mj.op * ek.op;
        if (prod.is_zero())
          continue;
        ks.push_back({w, kron(prod, move)});
      }
    }
  }
  return SuperOp(D, D, std::move(ks));
}

SuperOp step_superop(const FlatModel &m) {
  if (!m.deterministic())
    throw NotDeterministic("program has a next-location set with several entries");
  return action_superop(m, Selector(m.choice_arity.size(), 0));
}

SuperOp step_superop(const SequentialProgram &p) {
  return step_superop(flatten(p));
}

Mat embed(std::size_t dim, std::size_t configs, const CQState &s) {
  const std::size_t D = dim * configs;
  Mat big = Mat::zero(D, D);
  for (const auto &[c, rho] : s.blocks) {
    if (c >= configs || rho.rows() != dim)
      throw MalformedState("block does not fit the embedding");
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        big(i * configs + c, j * configs + c) = rho(i, j);
  }
  return big;
}

Mat embed(const FlatModel &m, const CQState &s) {
  return embed(m.dim, m.configs(), s);
}

CQState extract(const Mat &big, std::size_t dim, std::size_t configs) {
  if (big.rows() != dim * configs || big.cols() != dim * configs)
    throw DimensionMismatch("matrix does not match the embedded space");
  CQState s(dim);
  for (std::size_t r = 0; r < big.rows(); ++r)
    for (std::size_t q = 0; q < big.cols(); ++q)
      if (r % configs != q % configs && !big(r, q).is_zero())
        throw NonClassicalCoherence("nonzero entry between configurations " +
                                    std::to_string(r % configs) + " and " +
                                    std::to_string(q % configs));
  for (std::size_t c = 0; c < configs; ++c) {
    Mat b(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        b(i, j) = big(i * configs + c, j * configs + c);
    s.add(c, b);
  }
  return s;
}

CQState extract(const Mat &big, const FlatModel &m) {
  return extract(big, m.dim, m.configs());
}

Mat config_projector(const FlatModel &m, const std::vector<std::size_t> &cs) {
  const std::size_t C = m.configs();
  Mat sel = Mat::zero(C, C);
  for (auto c : cs)
    sel(c, c) = CRat(1);
  return kron(Mat::identity(m.dim), sel);
}

// ---------------------------------------------------------------------------
// Automaton view

void QuantumAutomaton::validate() const {
  if (actions.empty())
    throw MalformedProgram("automaton needs at least one action");
  if (action_names.size() != actions.size())
    throw MalformedProgram("one name per action is required");
  for (const auto &a : actions) {
    if (a.dim_in() != dim || a.dim_out() != dim)
      throw MalformedProgram("action dimension mismatch");
    if (!a.trace_preserving())
      throw MalformedProgram("automaton actions must be trace preserving");
  }
  if (initial_state.rows() != dim || !is_psd(initial_state))
    throw MalformedProgram("initial state must be PSD of the automaton dimension");
}

std::size_t selector_count(const FlatModel &m) {
  std::size_t n = 1;
  for (auto a : m.choice_arity)
    n = saturating_mul(n, a);
  return n;
}

std::vector<Selector> enumerate_selectors(const FlatModel &m, std::size_t cap) {
  std::size_t n = selector_count(m);
  if (n > cap)
    throw SelectorExplosion(std::to_string(n) + " selectors exceed the cap of " +
                            std::to_string(cap));
  std::vector<Selector> out;
  Selector f(m.choice_arity.size(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(f);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (++f[i] < m.choice_arity[i])
        break;
      f[i] = 0;
    }
  }
  return out;
}

QuantumAutomaton to_automaton(const FlatModel &m, std::size_t cap) {
  QuantumAutomaton a;
  a.dim = m.embedded_dim();
  a.initial_state = embed(m, initial_cqstate(m));
  for (const auto &f : enumerate_selectors(m, cap)) {
    std::string name;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (m.choice_arity[i] > 1)
        name += (name.empty() ? "" : ",") + m.choice_names[i] + "=" +
                std::to_string(f[i]);
    a.action_names.push_back(name.empty() ? "step" : name);
    a.actions.push_back(action_superop(m, f));
  }
  return a;
}

QuantumAutomaton to_automaton(const SequentialProgram &p, std::size_t cap) {
  return to_automaton(flatten(p), cap);
}

QuantumAutomaton to_automaton(const ConcurrentProgram &p, std::size_t cap) {
  return to_automaton(flatten(p), cap);
}

TerminationResult check_terminates(const SequentialProgram &p,
                                   std::size_t horizon) {
  if (!p.exit_location)
    throw NoExitLocation("termination needs an exit location");
  FlatModel m = flatten(p);
  if (!m.deterministic())
    throw NotDeterministic("termination check needs a deterministic program");
  TerminationResult r;
  r.horizon = horizon ? horizon : p.dim * p.locations.size() - 1;
  const std::size_t e = *m.exit_config;
  Selector f(m.choice_arity.size(), 0);
  CQState s = initial_cqstate(m);
  for (std::size_t k = 0;; ++k) {
    Rational t = s.trace_at(e);
    if (t == 1) {
      r.kind = TerminationResult::Terminates;
      r.step = k;
      return r;
    }
    if (k == r.horizon) {
      r.exit_trace_at_horizon = t;
      r.kind = sgn(t) > 0 ? TerminationResult::AlmostTerminatesCandidate
                          : TerminationResult::No;
      return r;
    }
    s = step(m, s, f);
  }
}

} // namespace qtl
