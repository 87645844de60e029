// SPDX-License-Identifier: Apache-2.0
#include "qtl/checker.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <unordered_map>

namespace qtl {

std::string to_string(Verdict::Status s) {
  switch (s) {
  case Verdict::Valid:
    return "Valid";
  case Verdict::NotValid:
    return "NotValid";
  case Verdict::Unknown:
    return "Unknown";
  }
  return "Unknown";
}

namespace {

using Word = std::vector<std::size_t>;
using EMat = Eigen::MatrixXcd;

void require_space(const QuantumAutomaton &a, std::size_t n, const char *what) {
  if (n != a.dim)
    throw DimensionMismatch(std::string(what) + " does not live on the automaton's space");
}

Verdict valid() {
  Verdict v;
  v.status = Verdict::Valid;
  return v;
}

Verdict unknown(std::string reason) {
  Verdict v;
  v.status = Verdict::Unknown;
  v.diagnostics.reason = std::move(reason);
  return v;
}

Verdict not_valid(Witness w) {
  Verdict v;
  v.status = Verdict::NotValid;
  v.witness = std::move(w);
  return v;
}

Mat run_word(const QuantumAutomaton &a, const Word &w, Mat rho) {
  for (auto act : w)
    rho = apply(a.actions.at(act), rho);
  return rho;
}

SubspaceUnion joint_image(const QuantumAutomaton &a, const SubspaceUnion &u) {
  std::optional<SubspaceUnion> out;
  for (const auto &e : a.actions) {
    SubspaceUnion im = image_union(e, u);
    out = out ? union_join(*out, im) : im;
  }
  return *out;
}

SubspaceUnion joint_preimage(const QuantumAutomaton &a, const SubspaceUnion &u) {
  std::optional<SubspaceUnion> out;
  for (const auto &e : a.actions) {
    SubspaceUnion pre = preimage_union(e, u);
    out = out ? union_meet(*out, pre) : pre;
  }
  return *out;
}

bool all_unitary(const QuantumAutomaton &a) {
  return std::all_of(a.actions.begin(), a.actions.end(), is_unitary_channel);
}

// Support of E^dagger applied to the projector of s.
Subspace dual_image(const SuperOp &dual_e, const Subspace &s) {
  if (s.is_zero())
    return Subspace::zero(dual_e.dim_out());
  return support(apply(dual_e, s.projector()));
}

EMat to_eigen(const Mat &m) {
  EMat e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      e(i, j) = m(i, j).to_complex();
  return e;
}

double trace_norm_numeric(const EMat &herm) {
  Eigen::SelfAdjointEigenSolver<EMat> es(herm);
  return es.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Support graph: distinct supports reachable from supp(sigma_0).

struct SupportGraph {
  std::vector<Subspace> nodes;
  std::vector<std::vector<long>> next; // -1 when the edge was not explored
  std::vector<std::size_t> depth;
  std::vector<long> parent;
  std::vector<std::size_t> via;
  bool closed = true;
  std::unordered_map<std::string, long> index; // projector text -> node

  // The projector is canonical, so its text identifies the subspace.
  static std::string key(const Subspace &s) {
    const Mat &p = s.projector();
    std::string k;
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j)
        k += to_string(p(i, j)) + ',';
    return k;
  }
  long find(const Subspace &s) const {
    auto it = index.find(key(s));
    return it == index.end() ? -1 : it->second;
  }
  void add(Subspace s) {
    index.emplace(key(s), static_cast<long>(nodes.size()));
    nodes.push_back(std::move(s));
  }

  Word word_to(std::size_t n) const {
    Word w;
    for (long c = static_cast<long>(n); parent[c] >= 0; c = parent[c])
      w.push_back(via[c]);
    std::reverse(w.begin(), w.end());
    return w;
  }
};

// Breadth-first exploration to `limit` steps. When `stop` is given the
// search returns as soon as a discovered node satisfies it.
SupportGraph
explore(const QuantumAutomaton &a, std::size_t limit, std::size_t budget,
        const std::function<bool(const Subspace &)> &stop = {},
        long *hit = nullptr) {
  SupportGraph g;
  const std::size_t A = a.actions.size();
  g.add(support(a.initial_state));
  g.next.emplace_back(A, -1);
  g.depth.push_back(0);
  g.parent.push_back(-1);
  g.via.push_back(0);
  if (hit)
    *hit = -1;
  if (stop && stop(g.nodes[0])) {
    if (hit)
      *hit = 0;
    g.closed = false;
    return g;
  }
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    std::size_t n = queue.front();
    queue.pop_front();
    const bool frontier = g.depth[n] >= limit;
    for (std::size_t act = 0; act < A; ++act) {
      Subspace s = image(a.actions[act], g.nodes[n]);
      long j = g.find(s);
      if (j < 0) {
        if (frontier) {
          g.closed = false;
          continue;
        }
        if (g.nodes.size() >= budget)
          throw BudgetExceeded("support graph exceeds " + std::to_string(budget) +
                               " nodes");
        j = static_cast<long>(g.nodes.size());
        g.add(std::move(s));
        g.next.emplace_back(A, -1);
        g.depth.push_back(g.depth[n] + 1);
        g.parent.push_back(static_cast<long>(n));
        g.via.push_back(act);
        if (stop && stop(g.nodes.back())) {
          if (hit)
            *hit = j;
          g.next[n][act] = j;
          g.closed = false;
          return g;
        }
        queue.push_back(static_cast<std::size_t>(j));
      }
      g.next[n][act] = j;
    }
  }
  return g;
}

// Shortest path from `from` to `to` using only nodes accepted by `allowed`
// (the endpoints included). Returns an action word.
std::optional<Word> restricted_path(const SupportGraph &g, std::size_t from,
                                    std::size_t to,
                                    const std::function<bool(std::size_t)> &allowed,
                                    bool nonempty) {
  const std::size_t N = g.nodes.size();
  std::vector<long> par(N, -2);
  std::vector<std::size_t> act(N, 0);
  std::deque<std::size_t> q;
  // Seed with the successors of `from` when a nonempty path is required.
  if (nonempty) {
    for (std::size_t a = 0; a < g.next[from].size(); ++a) {
      long j = g.next[from][a];
      if (j >= 0 && allowed(j) && par[j] == -2) {
        par[j] = -1;
        act[j] = a;
        q.push_back(j);
      }
    }
  } else {
    par[from] = -1;
    q.push_back(from);
  }
  while (!q.empty()) {
    std::size_t n = q.front();
    q.pop_front();
    if (n == to) {
      Word w;
      for (long c = static_cast<long>(n);;) {
        if (par[c] == -1) {
          if (nonempty)
            w.push_back(act[c]);
          break;
        }
        w.push_back(act[c]);
        c = par[c];
      }
      std::reverse(w.begin(), w.end());
      return w;
    }
    for (std::size_t a = 0; a < g.next[n].size(); ++a) {
      long j = g.next[n][a];
      if (j >= 0 && allowed(j) && par[j] == -2) {
        par[j] = static_cast<long>(n);
        act[j] = a;
        q.push_back(j);
      }
    }
  }
  return std::nullopt;
}

// Lasso: a prefix reaching node s, then a nonempty loop s -> s. In `all_bad`
// mode every loop node must be bad; otherwise s itself is bad. With
// `prefix_bad` the prefix also stays inside bad nodes.
std::optional<Witness> find_lasso(const SupportGraph &g,
                                  const std::vector<bool> &bad, bool all_bad,
                                  bool prefix_bad) {
  auto any = [](std::size_t) { return true; };
  auto only_bad = [&](std::size_t n) { return static_cast<bool>(bad[n]); };
  for (std::size_t s = 0; s < g.nodes.size(); ++s) {
    if (!bad[s])
      continue;
    std::optional<Word> loop = all_bad ? restricted_path(g, s, s, only_bad, true)
                                       : restricted_path(g, s, s, any, true);
    if (!loop)
      continue;
    std::optional<Word> prefix = prefix_bad ? restricted_path(g, 0, s, only_bad, false)
                                            : restricted_path(g, 0, s, any, false);
    if (!prefix)
      continue;
    Witness w;
    w.word = *prefix;
    w.loop = *loop;
    w.step = prefix->size();
    w.note = all_bad ? "loop avoids the proposition forever"
                     : "loop leaves the proposition infinitely often";
    return w;
  }
  return std::nullopt;
}

std::vector<bool> bad_nodes(const SupportGraph &g, const SubspaceUnion &u) {
  std::vector<bool> bad(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    bad[i] = !union_contains(u, g.nodes[i]);
  return bad;
}

// Lasso counterexample on the support graph, or nullopt when none was found
// (budget exhausted or no such loop).
std::optional<Witness> search_lasso(const QuantumAutomaton &a, const SubspaceUnion &u,
                                    bool all_bad, std::size_t depth, std::size_t budget) {
  try {
    SupportGraph g = explore(a, depth, budget);
    auto w = find_lasso(g, bad_nodes(g, u), all_bad, false);
    if (w)
      w->state = run_word(a, w->word, a.initial_state);
    return w;
  } catch (const BudgetExceeded &) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Increasing pre-image chain from an invariant union.

struct ExtensionRun {
  SubspaceUnion y;
  std::size_t iterations = 0;
  bool converged = false;
  std::optional<std::size_t> initial_inside; // first k with sigma_0 in y_k
};

ExtensionRun run_extension(const QuantumAutomaton &a, const SubspaceUnion &x,
                           const CheckOptions &opt, bool track_initial) {
  const std::size_t cap =
      opt.extension_cap ? opt.extension_cap
                        : std::max<std::size_t>(64, 4 * a.dim * (x.size() + 1));
  ExtensionRun r;
  r.y = x;
  if (track_initial && satisfies(a.initial_state, r.y))
    r.initial_inside = 0;
  while (r.iterations < cap) {
    SubspaceUnion next = joint_preimage(a, r.y);
    ++r.iterations;
    if (union_equal(next, r.y)) {
      r.converged = true;
      return r;
    }
    r.y = std::move(next);
    if (track_initial && !r.initial_inside && satisfies(a.initial_state, r.y))
      r.initial_inside = r.iterations;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Period detection

std::size_t lcm_capped(std::size_t a, std::size_t b, std::size_t cap) {
  std::size_t l = std::lcm(a, b);
  return l > cap ? cap + 1 : l;
}

std::optional<std::size_t> root_order(std::complex<double> z, std::size_t bound,
                                      double tol) {
  std::complex<double> p = z;
  for (std::size_t m = 1; m <= bound; ++m) {
    if (std::abs(p - 1.0) < tol)
      return m;
    p *= z;
  }
  return std::nullopt;
}

struct PeriodResult {
  std::optional<std::size_t> period;
  std::string reason;
};

// Multiple of the period of the zero pattern of any sequence tr(X F^n(rho)):
// the lcm of the orders of all root-of-unity ratios between nonzero
// eigenvalues of equal modulus. A peripheral ratio without an order within
// the bound yields no period.
PeriodResult detect_period(const Mat &rep, std::size_t bound) {
  const double tol = 1e-6;
  auto eig = numeric_eigenvalues(rep);
  std::vector<std::complex<double>> nz;
  for (const auto &[l, m] : eig)
    if (std::abs(l) > tol)
      nz.push_back(l);
  std::size_t b = 1;
  for (std::size_t i = 0; i < nz.size(); ++i)
    for (std::size_t j = 0; j < nz.size(); ++j) {
      double ai = std::abs(nz[i]), aj = std::abs(nz[j]);
      if (std::abs(ai - aj) > tol * std::max(ai, aj))
        continue;
      auto ord = root_order(nz[i] / nz[j], bound, tol);
      if (!ord) {
        if (ai > 1 - tol)
          return {std::nullopt, "peripheral eigenvalue ratio has no order up to the "
                                "period bound " +
                                    std::to_string(bound)};
        continue;
      }
      b = lcm_capped(b, *ord, bound);
      if (b > bound)
        return {std::nullopt, "period lcm exceeds the period bound " +
                                  std::to_string(bound)};
    }
  return {b, {}};
}

// ---------------------------------------------------------------------------
// Loops among union members for the recurrence check.

struct Loop {
  std::vector<std::size_t> members; // j1 .. jk
  Word actions;                     // actions[i] leads members[i] -> members[i+1]
};

struct MemberEdge {
  std::size_t to, action;
  bool exact;
};

std::optional<Loop> find_loop(const std::vector<std::vector<MemberEdge>> &out,
                              const std::vector<bool> &bad, bool exact_only) {
  const std::size_t n = out.size();
  std::vector<int> color(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack; // (node, action into it)
  std::optional<Loop> found;
  std::function<void(std::size_t)> dfs = [&](std::size_t v) {
    color[v] = 1;
    for (const auto &e : out[v]) {
      if (found)
        return;
      if (!bad[e.to] || (exact_only && !e.exact))
        continue;
      if (color[e.to] == 1) {
        Loop l;
        std::size_t k = stack.size();
        while (stack[k - 1].first != e.to)
          --k;
        for (std::size_t i = k - 1; i < stack.size(); ++i)
          l.members.push_back(stack[i].first);
        for (std::size_t i = k; i < stack.size(); ++i)
          l.actions.push_back(stack[i].second);
        l.actions.push_back(e.action);
        found = l;
        return;
      }
      if (color[e.to] == 0) {
        stack.emplace_back(e.to, e.action);
        dfs(e.to);
        stack.pop_back();
      }
    }
    color[v] = 2;
  };
  for (std::size_t s = 0; s < n && !found; ++s)
    if (bad[s] && color[s] == 0) {
      stack.assign(1, {s, 0});
      dfs(s);
    }
  return found;
}

struct Refinement {
  std::vector<Subspace> parts; // replaces the loop's first member
  std::string unknown;         // nonempty when the period is not certified
  std::size_t period = 0;
};

// States of x_j1 that, following the loop forever, meet some member of u on
// a full residue class of steps.
Refinement refine_loop(const QuantumAutomaton &a, const Subspace &xj1,
                       const Word &loop, const SubspaceUnion &u,
                       const CheckOptions &opt) {
  Refinement r;
  const std::size_t D = a.dim, k = loop.size();
  Mat rep = Mat::identity(D * D);
  for (auto act : loop)
    rep = matrix_rep(a.actions[act]) * rep;
  PeriodResult pr = detect_period(rep, opt.period_bound);
  if (!pr.period) {
    r.unknown = pr.reason;
    return r;
  }
  const std::size_t b = *pr.period;
  r.period = b;
  std::vector<SuperOp> duals;
  for (const auto &e : a.actions)
    duals.push_back(dual(e));
  // Dual of the loop channel, innermost action applied first.
  auto loop_dual = [&](Subspace s) {
    for (std::size_t i = k; i-- > 0;)
      s = dual_image(duals[loop[i]], s);
    return s;
  };
  const std::size_t offset = D * D; // past the nilpotent part of the loop
  for (const auto &p : u.members()) {
    const Subspace bad = complement(p);
    for (std::size_t c = 0; c < k * b; ++c) {
      // Support of the dual of the first c letters applied to the complement.
      Subspace y = bad;
      for (std::size_t i = c; i-- > 0;)
        y = dual_image(duals[loop[i % k]], y);
      // Join over u >= 0 of (F^b)^dagger^u (y), a closure reached in <= D steps.
      Subspace acc = y;
      while (true) {
        Subspace grown = acc;
        for (std::size_t t = 0; t < b; ++t)
          grown = loop_dual(grown);
        grown = join(y, grown);
        if (equal(grown, acc))
          break;
        acc = grown;
      }
      for (std::size_t t = 0; t < offset; ++t)
        acc = loop_dual(acc);
      r.parts.push_back(meet(xj1, complement(acc)));
    }
  }
  return r;
}

} // namespace

// ---------------------------------------------------------------------------

Verdict check_next(const QuantumAutomaton &a, const SubspaceUnion &u) {
  require_space(a, u.ambient_dim(), "proposition");
  for (std::size_t act = 0; act < a.actions.size(); ++act) {
    Mat s = apply(a.actions[act], a.initial_state);
    if (!satisfies(s, u)) {
      Witness w;
      w.word = {act};
      w.step = 1;
      w.state = s;
      return not_valid(w);
    }
  }
  return valid();
}

Verdict check_invariance(const QuantumAutomaton &a, const SubspaceUnion &u,
                         const CheckOptions &opt) {
  require_space(a, u.ambient_dim(), "proposition");
  SubspaceUnion y = u;
  std::size_t depth = 0;
  while (true) {
    SubspaceUnion next = union_meet(y, joint_preimage(a, y));
    if (union_equal(next, y))
      break;
    y = std::move(next);
    ++depth;
  }
  Verdict v;
  v.certificate = y;
  v.diagnostics.chain_depth = depth;
  if (satisfies(a.initial_state, y)) {
    v.status = Verdict::Valid;
    return v;
  }
  v.status = Verdict::NotValid;
  long hit = -1;
  auto outside = [&](const Subspace &s) { return !union_contains(u, s); };
  SupportGraph g = explore(a, depth + a.dim, std::max(opt.budget, depth + a.dim + 2),
                           outside, &hit);
  Witness w;
  if (hit >= 0) {
    w.word = g.word_to(static_cast<std::size_t>(hit));
    w.step = w.word.size();
    w.state = run_word(a, w.word, a.initial_state);
  } else {
    w.note = "initial state outside the invariance certificate";
  }
  v.witness = w;
  return v;
}

SubspaceUnion maximal_invariant(const QuantumAutomaton &a, const SubspaceUnion &r,
                                FixpointStats *stats) {
  require_space(a, r.ambient_dim(), "proposition");
  SubspaceUnion z = r;
  std::size_t it = 0;
  while (true) {
    SubspaceUnion next =
        union_meet(union_meet(z, joint_preimage(a, z)), joint_image(a, z));
    ++it;
    if (union_equal(next, z))
      break;
    z = std::move(next);
  }
  if (stats) {
    stats->iterations = it;
    stats->converged = true;
  }
  return z;
}

SubspaceUnion maximal_extension(const QuantumAutomaton &a, const SubspaceUnion &x,
                                const CheckOptions &opt, FixpointStats *stats) {
  require_space(a, x.ambient_dim(), "proposition");
  if (!union_equal(joint_image(a, x), x))
    throw PreconditionViolated("maximal_extension needs a union fixed by the joint image");
  ExtensionRun r = run_extension(a, x, opt, false);
  if (stats) {
    stats->iterations = r.iterations;
    stats->converged = r.converged;
  }
  if (!r.converged)
    throw BudgetExceeded("pre-image chain did not settle within " +
                         std::to_string(r.iterations) + " steps");
  return r.y;
}

namespace {

// Shared tail of the two recurrence checks: extension of x, then the
// verdict for sigma_0 with a lasso witness when it fails.
Verdict conclude_with_extension(const QuantumAutomaton &a, const SubspaceUnion &u,
                                const SubspaceUnion &x, const CheckOptions &opt,
                                bool lasso_all_bad, Diagnostics diag) {
  ExtensionRun run = run_extension(a, x, opt, true);
  diag.values["extension_iterations"] = static_cast<double>(run.iterations);
  Verdict v;
  v.diagnostics = diag;
  if (run.converged)
    v.certificate = run.y;
  if (run.initial_inside) {
    v.status = Verdict::Valid;
    return v;
  }
  if (!run.converged) {
    v.status = Verdict::Unknown;
    v.diagnostics.reason = "pre-image chain did not settle within " +
                           std::to_string(run.iterations) + " steps";
    return v;
  }
  auto lasso = search_lasso(a, u, lasso_all_bad, opt.lasso_depth, opt.budget);
  if (a.actions.size() > 1 && !all_unitary(a) && !lasso) {
    // With several non-unitary actions the characterization is only
    // sufficient, so a failure needs an explicit counterexample.
    v.status = Verdict::Unknown;
    v.diagnostics.reason =
        "initial state outside certificate, no counterexample loop found";
    return v;
  }
  v.status = Verdict::NotValid;
  if (lasso) {
    v.witness = lasso;
  } else {
    Witness w;
    w.note = "initial state outside the certificate";
    w.state = a.initial_state;
    v.witness = w;
  }
  return v;
}

} // namespace

Verdict check_eventually_always(const QuantumAutomaton &a, const SubspaceUnion &u,
                                const CheckOptions &opt) {
  require_space(a, u.ambient_dim(), "proposition");
  FixpointStats st;
  SubspaceUnion x = maximal_invariant(a, u, &st);
  Diagnostics diag;
  diag.chain_depth = st.iterations;
  return conclude_with_extension(a, u, x, opt, false, diag);
}

Verdict check_always_eventually(const QuantumAutomaton &a, const SubspaceUnion &u,
                                const CheckOptions &opt) {
  require_space(a, u.ambient_dim(), "proposition");
  if (opt.period_bound < 1)
    throw PreconditionViolated("period bound must be at least 1");
  const std::size_t D = a.dim;
  SubspaceUnion x = SubspaceUnion::full(D);
  Diagnostics diag;
  std::size_t rounds = 0, period = 1;
  while (true) {
    if (++rounds > opt.max_rounds)
      return unknown("refinement did not settle within " +
                     std::to_string(opt.max_rounds) + " rounds");
    FixpointStats st;
    x = maximal_invariant(a, x, &st);
    diag.chain_depth += st.iterations;
    if (x.is_zero())
      break;
    const auto &mem = x.members();
    const std::size_t n = mem.size();
    std::vector<bool> bad(n);
    for (std::size_t i = 0; i < n; ++i)
      bad[i] = !union_contains(u, mem[i]);
    std::vector<std::vector<MemberEdge>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!bad[i])
        continue;
      for (std::size_t act = 0; act < a.actions.size(); ++act) {
        Subspace img = image(a.actions[act], mem[i]);
        for (std::size_t j = 0; j < n; ++j)
          if (bad[j] && contains(mem[j], img))
            out[i].push_back({j, act, equal(mem[j], img)});
      }
    }
    std::optional<Loop> loop = find_loop(out, bad, true);
    if (!loop)
      loop = find_loop(out, bad, false);
    if (!loop)
      break;
    const Subspace &head = mem[loop->members[0]];
    Refinement ref = refine_loop(a, head, loop->actions, u, opt);
    if (!ref.unknown.empty()) {
      Verdict v = unknown(ref.unknown);
      v.diagnostics.chain_depth = diag.chain_depth;
      return v;
    }
    period = std::lcm(period, ref.period);
    for (const auto &z : ref.parts)
      if (contains(z, head))
        return unknown("loop refinement made no progress");
    std::vector<Subspace> next;
    for (std::size_t i = 0; i < n; ++i)
      if (i != loop->members[0])
        next.push_back(mem[i]);
    for (auto &z : ref.parts)
      next.push_back(std::move(z));
    x = union_canonicalize(SubspaceUnion(D, std::move(next)));
  }
  diag.values["rounds"] = static_cast<double>(rounds);
  diag.values["period"] = static_cast<double>(period);
  return conclude_with_extension(a, u, x, opt, true, diag);
}

Verdict check_always_until(const QuantumAutomaton &a, const SubspaceUnion &phi,
                           const SubspaceUnion &psi, const CheckOptions &opt) {
  Verdict inv = check_invariance(a, phi, opt);
  if (inv.status == Verdict::NotValid)
    return inv;
  Verdict rec = check_always_eventually(a, psi, opt);
  if (rec.status == Verdict::NotValid)
    return rec;
  Verdict v;
  v.diagnostics.chain_depth = inv.diagnostics.chain_depth + rec.diagnostics.chain_depth;
  v.diagnostics.values = rec.diagnostics.values;
  if (inv.status == Verdict::Valid && rec.status == Verdict::Valid) {
    v.status = Verdict::Valid;
    v.certificate = union_meet(*inv.certificate, *rec.certificate);
  } else {
    v.status = Verdict::Unknown;
    v.diagnostics.reason = rec.diagnostics.reason;
  }
  return v;
}

Verdict check_always_almost_until(const QuantumAutomaton &a, const Subspace &p,
                                  const Subspace &q, const CheckOptions &opt) {
  if (a.actions.size() != 1)
    throw PreconditionViolated("almost-until check needs a single action");
  require_space(a, p.ambient_dim(), "hold proposition");
  require_space(a, q.ambient_dim(), "target proposition");
  Verdict inv = check_invariance(a, SubspaceUnion::single(p), opt);
  if (inv.status == Verdict::NotValid)
    return inv;
  const SuperOp &e = a.actions[0];
  const std::size_t D = a.dim;
  Mat rep = matrix_rep(e);
  std::size_t b = 1;
  for (const auto &[l, m] : numeric_eigenvalues(rep)) {
    if (std::abs(l) < 1 - 1e-6)
      continue;
    auto ord = root_order(l, opt.period_bound, 1e-6);
    if (!ord)
      return unknown("peripheral eigenvalue is not a root of unity of order <= " +
                     std::to_string(opt.period_bound));
    b = lcm_capped(b, *ord, opt.period_bound);
    if (b > opt.period_bound)
      return unknown("period lcm exceeds the period bound");
  }
  Mat g = Mat::identity(D * D);
  for (std::size_t i = 0; i < b; ++i)
    g = rep * g;
  SpectralSplit split;
  try {
    split = peripheral_split(g, opt.tolerance);
  } catch (const ToleranceAmbiguity &ex) {
    return unknown(ex.what());
  }
  if (!split.exact)
    return unknown("peripheral projector of the period channel is not exact");
  Verdict v;
  v.diagnostics.chain_depth = inv.diagnostics.chain_depth;
  v.diagnostics.values["period"] = static_cast<double>(b);
  v.diagnostics.values["stable_radius"] = split.stable_radius;
  Mat s = a.initial_state;
  bool reached = false;
  std::optional<Mat> limit;
  for (std::size_t c = 0; c < b; ++c) {
    Mat l = unvec(split.peripheral_projector * vec(s), D, D);
    if (satisfies(l, q)) {
      reached = true;
      break;
    }
    limit = l;
    s = apply(e, s);
  }
  if (!reached) {
    Witness w;
    w.note = "every limit point of the trajectory leaves the target";
    w.state = limit;
    v.status = Verdict::NotValid;
    v.witness = w;
    return v;
  }
  if (inv.status != Verdict::Valid) {
    v.status = Verdict::Unknown;
    v.diagnostics.reason = inv.diagnostics.reason;
    return v;
  }
  v.status = Verdict::Valid;
  v.certificate = inv.certificate;
  return v;
}

// ---------------------------------------------------------------------------
// Exit analysis of deterministic programs

namespace {

struct ExitModel {
  FlatModel model;
  SuperOp step;
  Mat m0, m1;
  Mat sigma0;
  std::size_t exit = 0;
};

ExitModel exit_model(const SequentialProgram &p) {
  if (!p.exit_location)
    throw NoExitLocation("program has no exit location");
  ExitModel em;
  em.model = flatten(p);
  if (!em.model.deterministic())
    throw NotDeterministic("exit analysis needs a deterministic program");
  em.step = step_superop(em.model);
  em.exit = *em.model.exit_config;
  em.m0 = config_projector(em.model, {em.exit});
  em.m1 = Mat::identity(em.model.embedded_dim()) - em.m0;
  em.sigma0 = embed(em.model, initial_cqstate(em.model));
  return em;
}

Subspace exit_atom(const ExitModel &em, const Subspace &p_exit) {
  if (p_exit.ambient_dim() != em.model.dim)
    throw DimensionMismatch("exit proposition must live on the program's space");
  std::map<std::string, Subspace> blocks{{em.model.labels[em.exit], p_exit}};
  return atom_from_blocks("exit", blocks, em.model).subspace;
}

Verdict exit_eventually(const SequentialProgram &p, const ExitModel &em,
                        const Subspace &p_exit) {
  TerminationResult t = check_terminates(p);
  Verdict v;
  v.diagnostics.values["horizon"] = static_cast<double>(t.horizon);
  if (t.kind != TerminationResult::Terminates) {
    Witness w;
    w.step = t.horizon;
    w.word.assign(t.horizon, 0);
    w.state = run_word(QuantumAutomaton{em.model.embedded_dim(), {"step"}, {em.step},
                                        em.sigma0},
                       w.word, em.sigma0);
    w.note = "not terminated within the horizon";
    v.status = Verdict::NotValid;
    v.witness = w;
    return v;
  }
  Mat s = em.sigma0;
  for (std::size_t k = 0; k < t.step; ++k)
    s = apply(em.step, s);
  v.diagnostics.values["termination_step"] = static_cast<double>(t.step);
  if (satisfies(s, exit_atom(em, p_exit))) {
    v.status = Verdict::Valid;
    return v;
  }
  // Once everything has exited the state stays put, so this is final.
  Witness w;
  w.step = t.step;
  w.word.assign(t.step, 0);
  w.state = s;
  w.note = "terminated outside the exit proposition";
  v.status = Verdict::NotValid;
  v.witness = w;
  return v;
}

Verdict exit_almost(const ReachabilityResult &r, const ExitModel &em,
                    const Subspace &p_exit) {
  Verdict v;
  v.diagnostics.values["exit_trace"] = r.exit_trace.get_d();
  v.diagnostics.values["power_residual"] = r.power_residual;
  if (!r.exact) {
    v.status = Verdict::Unknown;
    v.diagnostics.reason = "reachability map computed from an inexact spectral split";
    return v;
  }
  bool inside = satisfies(r.output, exit_atom(em, p_exit));
  if (r.almost_terminates && inside) {
    v.status = Verdict::Valid;
    return v;
  }
  Witness w;
  w.state = r.output;
  w.note = r.almost_terminates ? "limit exit state leaves the exit proposition"
                               : "exit probability stays below one";
  v.status = Verdict::NotValid;
  v.witness = w;
  return v;
}

Verdict exit_always(const ExitModel &em, const Subspace &atom) {
  if (atom.ambient_dim() != em.model.embedded_dim())
    throw DimensionMismatch("always-proposition must live on the embedded space");
  const std::size_t D = em.model.embedded_dim();
  // The support of the running sum is a chain in a D-dimensional space, so
  // D iterates decide every later step.
  Mat s = em.sigma0, sum = Mat::zero(D, D);
  for (std::size_t k = 0; k < D; ++k) {
    sum += s;
    s = apply(em.step, s);
  }
  Verdict v;
  v.diagnostics.values["iterates"] = static_cast<double>(D);
  if (satisfies(sum, atom)) {
    v.status = Verdict::Valid;
    return v;
  }
  s = em.sigma0;
  for (std::size_t k = 0; k < D; ++k) {
    if (!satisfies(s, atom)) {
      Witness w;
      w.word.assign(k, 0);
      w.step = k;
      w.state = s;
      v.status = Verdict::NotValid;
      v.witness = w;
      return v;
    }
    s = apply(em.step, s);
  }
  v.status = Verdict::NotValid;
  return v;
}

} // namespace

ReachabilityResult reachability_superop(const SequentialProgram &p,
                                        const CheckOptions &opt) {
  ExitModel em = exit_model(p);
  const std::size_t D = em.model.embedded_dim();
  ReachabilityResult r;
  Mat m1r = kron(em.m1, em.m1.conj());
  Mat loop = matrix_rep(em.step) * m1r;
  SpectralSplit split = peripheral_split(loop, opt.tolerance);
  r.exact = split.exact;
  r.stable_radius = split.stable_radius;
  Mat inv = invert(Mat::identity(D * D) - split.stable_part);
  Mat m0r = kron(em.m0, em.m0.conj());
  r.channel_rep = m0r * inv;
  Mat v0 = vec(em.sigma0);
  Mat once = inv * v0;
  r.output = unvec(m0r * once, D, D);
  r.exit_trace = r.output.trace().re;
  Mat twice = unvec(m0r * (inv * once), D, D);
  double guards = twice.trace().re.get_d();
  if (r.exact)
    r.almost_terminates = r.exit_trace == 1;
  else
    r.almost_terminates = std::abs(r.exit_trace.get_d() - 1.0) <= opt.tolerance;
  if (r.almost_terminates) {
    r.guard_count = guards;
    r.expected_steps = guards - r.exit_trace.get_d();
  }
  if (r.exact) {
    try {
      r.channel = from_matrix_rep(r.channel_rep, D, D);
      r.kraus_rank = r.channel->kraus().size();
    } catch (const NotPositive &) {
      r.channel.reset();
    }
  }
  // Numeric cross-check against 64 plain steps.
  std::vector<EMat> ks;
  for (const auto &k : em.step.kraus())
    ks.push_back(std::sqrt(k.weight.get_d()) * to_eigen(k.op));
  EMat rho = to_eigen(em.sigma0);
  for (int i = 0; i < 64; ++i) {
    EMat next = EMat::Zero(D, D);
    for (const auto &k : ks)
      next += k * rho * k.adjoint();
    rho = next;
  }
  EMat m0 = to_eigen(em.m0);
  EMat diff = to_eigen(r.output) - m0 * rho * m0;
  r.power_residual = trace_norm_numeric(0.5 * (diff + diff.adjoint()));
  return r;
}

ExitVerdicts check_exit_formulas(const SequentialProgram &p, const Subspace &p_exit,
                                 const std::optional<Subspace> &always_atom,
                                 const CheckOptions &opt) {
  ExitModel em = exit_model(p);
  ExitVerdicts out;
  out.eventually = exit_eventually(p, em, p_exit);
  out.almost_eventually = exit_almost(reachability_superop(p, opt), em, p_exit);
  out.always = exit_always(em, always_atom ? *always_atom : exit_atom(em, p_exit));
  return out;
}

Verdict kleene_always(const SuperOp &e, const Mat &rho_ab, const Subspace &p,
                      std::size_t t) {
  const std::size_t d = e.dim_in();
  if (e.dim_out() != d || d == 0)
    throw DimensionMismatch("Kleene check needs a channel on a single space");
  if (!rho_ab.square() || rho_ab.rows() % d != 0)
    throw DimensionMismatch("joint state does not factor through the channel space");
  if (p.ambient_dim() != rho_ab.rows())
    throw DimensionMismatch("proposition does not live on the joint space");
  const std::size_t min_t = d * d > 1 ? d * d - 1 : 1;
  if (t == 0)
    t = min_t;
  if (t < min_t)
    throw PreconditionViolated("averaging horizon below d^2 - 1");
  const std::size_t env = rho_ab.rows() / d;
  SuperOp big = tensor_identity(e, env);
  Mat s = rho_ab, sum = Mat::zero(rho_ab.rows(), rho_ab.cols());
  std::vector<Mat> seen;
  for (std::size_t k = 0; k < t; ++k) {
    sum += s;
    seen.push_back(s);
    s = apply(big, s);
  }
  Verdict v;
  v.diagnostics.values["horizon"] = static_cast<double>(t);
  if (satisfies(sum, p)) {
    v.status = Verdict::Valid;
    v.certificate = SubspaceUnion::single(p);
    return v;
  }
  v.status = Verdict::NotValid;
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!satisfies(seen[k], p)) {
      Witness w;
      w.word.assign(k, 0);
      w.step = k;
      w.state = seen[k];
      v.witness = w;
      break;
    }
  return v;
}

Verdict hoare_check(const SequentialProgram &p, const Subspace &pre,
                    const Subspace &post, HoareMode mode, const CheckOptions &opt) {
  if (pre.ambient_dim() != p.dim || post.ambient_dim() != p.dim)
    throw DimensionMismatch("pre/post conditions must live on the program's space");
  if (pre.is_zero())
    return valid();
  // Every input supported in `pre` is dominated by the normalized projector,
  // and that projector is such an input, so one run decides all of them.
  SequentialProgram q = p;
  q.initial_state = CRat(Rational(1, static_cast<long>(pre.dim()))) * pre.projector();
  ExitModel em = exit_model(q);
  if (mode == HoareMode::Total)
    return exit_almost(reachability_superop(q, opt), em, post);
  std::map<std::string, Subspace> blocks;
  for (std::size_t c = 0; c < em.model.configs(); ++c)
    blocks[em.model.labels[c]] = c == em.exit ? post : Subspace::full(p.dim);
  return exit_always(em, atom_from_blocks("post", blocks, em.model).subspace);
}

// ---------------------------------------------------------------------------
// Oracle

namespace {

using OR = OracleResult;

// All paths of length <= r from n reach `target` while staying in `hold`.
bool bounded_until(const SupportGraph &g, std::size_t n, std::size_t r,
                   const std::vector<bool> &hold, const std::vector<bool> &target,
                   std::map<std::pair<std::size_t, std::size_t>, bool> &memo) {
  if (target[n])
    return true;
  if (!hold[n] || r == 0)
    return false;
  auto key = std::make_pair(n, r);
  if (auto it = memo.find(key); it != memo.end())
    return it->second;
  bool ok = true;
  for (long j : g.next[n])
    if (j < 0 || !bounded_until(g, static_cast<std::size_t>(j), r - 1, hold, target, memo)) {
      ok = false;
      break;
    }
  memo[key] = ok;
  return ok;
}

std::vector<bool> sat_nodes(const SupportGraph &g, const SubspaceUnion &u) {
  std::vector<bool> s(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    s[i] = union_contains(u, g.nodes[i]);
  return s;
}

OR fails_with(Witness w) {
  OR r;
  r.kind = OR::Fails;
  r.witness = std::move(w);
  return r;
}

OR holds_result() {
  OR r;
  r.kind = OR::Holds;
  return r;
}

// hold U target from the root, on the explored graph.
OR until_on_graph(const SupportGraph &g, const std::vector<bool> &hold,
                  const std::vector<bool> &target, std::size_t depth) {
  std::map<std::pair<std::size_t, std::size_t>, bool> memo;
  if (bounded_until(g, 0, depth, hold, target, memo)) {
    // Report the first step by which every run has reached the target.
    std::size_t k = 0;
    while (!bounded_until(g, 0, k, hold, target, memo))
      ++k;
    OR r = holds_result();
    Witness w;
    w.step = k;
    if (g.next[0].size() == 1)
      w.word.assign(k, 0);
    w.note = "every run reaches the target by this step";
    r.witness = std::move(w);
    return r;
  }
  const std::size_t N = g.nodes.size();
  std::vector<bool> waiting(N);
  for (std::size_t i = 0; i < N; ++i)
    waiting[i] = hold[i] && !target[i];
  auto allowed = [&](std::size_t n) { return static_cast<bool>(waiting[n]); };
  // Finite violation: through waiting nodes to a node outside both.
  for (std::size_t s = 0; s < N; ++s) {
    if (hold[s] || target[s])
      continue;
    std::optional<Word> w;
    if (s == 0) {
      w = Word{};
    } else {
      for (std::size_t n = 0; n < N && !w; ++n) {
        if (!waiting[n] && n != 0)
          continue;
        if (n == 0 && !waiting[0])
          continue;
        for (std::size_t act = 0; act < g.next[n].size(); ++act)
          if (g.next[n][act] == static_cast<long>(s)) {
            auto pre = restricted_path(g, 0, n, allowed, false);
            if (pre) {
              pre->push_back(act);
              w = pre;
              break;
            }
          }
      }
    }
    if (w) {
      Witness wit;
      wit.word = *w;
      wit.step = w->size();
      return fails_with(wit);
    }
  }
  if (g.closed) {
    if (auto l = find_lasso(g, waiting, true, true))
      return fails_with(*l);
    return holds_result();
  }
  return OR{};
}

struct Shape {
  enum Kind { State, Next, Always, Until, EventuallyAlways, AlwaysEventually, AlwaysUntil, And, Other } kind = Other;
  std::optional<SubspaceUnion> u, v;
};

Shape classify(const Formula &f, const AtomTable &atoms, std::size_t D) {
  Shape s;
  auto st = [&](const Formula &g) { return state_union(g, atoms, D); };
  if ((s.u = st(f))) {
    s.kind = Shape::State;
    return s;
  }
  switch (f.kind) {
  case Formula::Next:
    if ((s.u = st(*f.args[0])))
      s.kind = Shape::Next;
    break;
  case Formula::Eventually: {
    const Formula &g = *f.args[0];
    if ((s.v = st(g))) {
      s.u = SubspaceUnion::full(D);
      s.kind = Shape::Until;
    } else if (g.kind == Formula::Always && (s.u = st(*g.args[0]))) {
      s.kind = Shape::EventuallyAlways;
    }
    break;
  }
  case Formula::Until:
    if ((s.u = st(*f.args[0])) && (s.v = st(*f.args[1])))
      s.kind = Shape::Until;
    break;
  case Formula::Always: {
    const Formula &g = *f.args[0];
    if ((s.u = st(g))) {
      s.kind = Shape::Always;
    } else if (g.kind == Formula::Eventually && (s.u = st(*g.args[0]))) {
      s.kind = Shape::AlwaysEventually;
    } else if (g.kind == Formula::Until && (s.u = st(*g.args[0])) &&
               (s.v = st(*g.args[1]))) {
      s.kind = Shape::AlwaysUntil;
    }
    break;
  }
  case Formula::And:
    s.kind = Shape::And;
    break;
  default:
    break;
  }
  return s;
}

OR oracle_on_graph(const QuantumAutomaton &a, const SupportGraph &g, const Formula &f,
                   const AtomTable &atoms, std::size_t depth) {
  Shape sh = classify(f, atoms, a.dim);
  const std::size_t N = g.nodes.size();
  switch (sh.kind) {
  case Shape::State:
    if (union_contains(*sh.u, g.nodes[0]))
      return holds_result();
    return fails_with(Witness{});
  case Shape::Next: {
    for (std::size_t act = 0; act < a.actions.size(); ++act) {
      long j = g.next[0][act];
      if (j < 0)
        return OR{};
      if (!union_contains(*sh.u, g.nodes[j])) {
        Witness w;
        w.word = {act};
        w.step = 1;
        return fails_with(w);
      }
    }
    return holds_result();
  }
  case Shape::Always: {
    auto sat = sat_nodes(g, *sh.u);
    std::size_t best = N;
    for (std::size_t i = 0; i < N; ++i)
      if (!sat[i] && (best == N || g.depth[i] < g.depth[best]))
        best = i;
    if (best < N) {
      Witness w;
      w.word = g.word_to(best);
      w.step = w.word.size();
      return fails_with(w);
    }
    return g.closed ? holds_result() : OR{};
  }
  case Shape::Until:
    return until_on_graph(g, sat_nodes(g, *sh.u), sat_nodes(g, *sh.v), depth);
  case Shape::EventuallyAlways:
  case Shape::AlwaysEventually: {
    if (!g.closed)
      return OR{};
    auto sat = sat_nodes(g, *sh.u);
    std::vector<bool> bad(N);
    for (std::size_t i = 0; i < N; ++i)
      bad[i] = !sat[i];
    if (auto l = find_lasso(g, bad, sh.kind == Shape::AlwaysEventually, false))
      return fails_with(*l);
    return holds_result();
  }
  case Shape::AlwaysUntil: {
    auto hold = sat_nodes(g, *sh.u), target = sat_nodes(g, *sh.v);
    std::size_t best = N;
    for (std::size_t i = 0; i < N; ++i)
      if (!hold[i] && !target[i] && (best == N || g.depth[i] < g.depth[best]))
        best = i;
    if (best < N) {
      Witness w;
      w.word = g.word_to(best);
      w.step = w.word.size();
      return fails_with(w);
    }
    if (!g.closed)
      return OR{};
    std::vector<bool> waiting(N);
    for (std::size_t i = 0; i < N; ++i)
      waiting[i] = hold[i] && !target[i];
    if (auto l = find_lasso(g, waiting, true, false))
      return fails_with(*l);
    return holds_result();
  }
  case Shape::And: {
    OR l = oracle_on_graph(a, g, *f.args[0], atoms, depth);
    if (l.kind == OR::Fails)
      return l;
    OR r = oracle_on_graph(a, g, *f.args[1], atoms, depth);
    if (r.kind == OR::Fails)
      return r;
    return (l.kind == OR::Holds && r.kind == OR::Holds) ? holds_result() : OR{};
  }
  case Shape::Other:
    break;
  }
  throw UnsupportedFormula("oracle does not handle '" + to_string(f) + "'");
}

} // namespace

OracleResult oracle_bfs(const QuantumAutomaton &a, const Formula &f,
                        const AtomTable &atoms, std::size_t depth, std::size_t budget) {
  SupportGraph g = explore(a, depth, budget);
  OracleResult r = oracle_on_graph(a, g, f, atoms, depth);
  r.nodes = g.nodes.size();
  r.closed = g.closed;
  if (r.witness)
    r.witness->state = run_word(a, r.witness->word, a.initial_state);
  return r;
}

} // namespace qtl
