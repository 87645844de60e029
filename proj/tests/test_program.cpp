// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "support/fixtures.hpp"

using namespace qtl;
using namespace qtl::fixtures;
using testgen::Rng;

namespace {

const Rational kHalf(1, 2);

CQState blocks(std::initializer_list<std::pair<std::size_t, Mat>> bs) {
  CQState s(2);
  for (const auto &[c, m] : bs)
    s.add(c, m);
  return s;
}

bool all_psd(const CQState &s) {
  for (const auto &[c, m] : s.blocks)
    if (!is_psd(m))
      return false;
  return true;
}

// Independent product of |next| over every (outcome, location) pair.
std::size_t choice_product(const SequentialProgram &p) {
  std::size_t n = 1;
  for (const auto &a : p.act)
    for (const auto &t : a.next)
      n *= t.size();
  return n;
}

// Two qubit processes. Process 1 flips the qubit and hands control to
// either process; process 2 only idles.
ConcurrentProgram flip_and_idle() {
  ConcurrentProgram p;
  p.dim = 2;
  Measurement triv = Measurement::trivial(2);
  Process a, b;
  a.locations = {"a0", "a1"};
  a.act = {{SuperOp::unitary(Mat(2, 2, {0, 1, 1, 0})), triv, {{Target{1, 0}, Target{1, 1}}}},
           {SuperOp::identity(2), triv, {{Target{1, 0}}}}};
  b.locations = {"b0"};
  b.act = {{SuperOp::identity(2), triv, {{Target{0, 1}}}}};
  p.processes = {a, b};
  p.initial_state = ket_bra(2, 0);
  p.initial_locations = {0, 0};
  p.initial_scheduler = 0;
  return p;
}

} // namespace

TEST_CASE("successors on the Hadamard loop") {
  SequentialProgram p = hadamard_loop();
  FlatModel m = flatten(p);
  CQState s1 = CQState::at(1, minus_state());
  auto next = successors(p, s1);
  REQUIRE(next.size() == 1);
  CQState s2 = blocks({{3, CRat(kHalf) * ket_bra(2, 0)}, {2, CRat(kHalf) * ket_bra(2, 1)}});
  CHECK(next[0] == s2);
  auto third = successors(p, s2);
  REQUIRE(third.size() == 1);
  CHECK(third[0] == blocks({{3, CRat(kHalf) * ket_bra(2, 0)}, {1, CRat(kHalf) * minus_state()}}));
  CHECK(m.configs() == 4);
}

TEST_CASE("a two-way choice yields two successors") {
  SequentialProgram p = coin_choice();
  auto next = successors(p, CQState::at(0, ket_bra(2, 0)));
  CHECK(next.size() == 2);
  for (const auto &s : next)
    CHECK(s.total_trace() == 1);
}

TEST_CASE("step_superop on the Hadamard loop") {
  SequentialProgram p = hadamard_loop();
  FlatModel m = flatten(p);
  SuperOp e = step_superop(p);
  CHECK(is_trace_preserving(e));
  Mat sigma = embed(m, initial_cqstate(m));
  Mat sigma2 = apply(e, apply(e, sigma));
  CHECK(extract(sigma2, m) ==
        blocks({{3, CRat(kHalf) * ket_bra(2, 0)}, {2, CRat(kHalf) * ket_bra(2, 1)}}));

  std::vector<Rational> want = {0, 0, kHalf, kHalf, Rational(3, 4), Rational(3, 4)};
  Mat s = sigma;
  for (const auto &w : want) {
    CHECK(extract(s, m).trace_at(3) == w);
    s = apply(e, s);
  }
  CHECK_THROWS_AS(step_superop(coin_choice()), NotDeterministic);
}

TEST_CASE("a single identity location steps as the identity channel") {
  SequentialProgram p;
  p.dim = 2;
  p.locations = {"l"};
  p.act = {{SuperOp::identity(2), Measurement::trivial(2), {{Target{0, 0}}}}};
  p.initial_state = ket_bra(2, 0);
  CHECK(channel_equal(step_superop(p), SuperOp::identity(2)));
}

TEST_CASE("embed and extract") {
  Rng r(1);
  SequentialProgram p = hadamard_loop();
  FlatModel m = flatten(p);
  Mat rho = testgen::random_state(r, 2, 2);
  Mat big = embed(m, CQState::at(0, rho));
  CHECK(big.rows() == 8);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(big(i * 4, j * 4) == rho(i, j));
  CHECK(big.trace() == rho.trace());

  CQState mixed = blocks({{1, CRat(kHalf) * testgen::random_state(r, 2, 1)},
                          {3, CRat(kHalf) * testgen::random_state(r, 2, 2)}});
  CHECK(extract(embed(m, mixed), m) == mixed);

  Mat coherent = big;
  coherent(1, 2) = CRat(Rational(1, 4));
  coherent(2, 1) = CRat(Rational(1, 4));
  CHECK_THROWS_AS(extract(coherent, m), NonClassicalCoherence);
}

TEST_CASE("successors preserve trace and positivity") {
  Rng r(2);
  for (int t = 0; t < 40; ++t) {
    std::size_t n = r.range(2, 3), locs = r.range(2, 4);
    SequentialProgram p = testgen::random_exit_program(r, n, locs);
    // Add a second option somewhere to make the program nondeterministic.
    auto &a = p.act[r.pick(locs - 1)];
    a.next[0].push_back(Target{r.pick(locs), 0});
    if (a.next[0][0] == a.next[0][1])
      a.next[0].pop_back();
    FlatModel m = flatten(p);
    CQState s = initial_cqstate(m);
    for (int k = 0; k < 6; ++k) {
      auto next = successors(m, s);
      // Same set as stepping under every global selector.
      std::vector<CQState> all;
      for (const auto &f : enumerate_selectors(m)) {
        CQState x = step(m, s, f);
        if (std::find(all.begin(), all.end(), x) == all.end())
          all.push_back(x);
      }
      CHECK(next.size() == all.size());
      for (const auto &x : next)
        CHECK(std::find(all.begin(), all.end(), x) != all.end());
      for (const auto &x : next) {
        CHECK(x.total_trace() == 1);
        CHECK(all_psd(x));
      }
      s = next[r.pick(next.size())];
    }
  }
}

TEST_CASE("deterministic successors agree with the step channel") {
  Rng r(3);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = r.range(1, 3), locs = r.range(1, 4);
    SequentialProgram p = testgen::random_exit_program(r, n, std::max<std::size_t>(locs, 2));
    FlatModel m = flatten(p);
    SuperOp e = step_superop(p);
    CQState s = initial_cqstate(m);
    for (int k = 0; k < 4; ++k) {
      auto next = successors(p, s);
      REQUIRE(next.size() == 1);
      CHECK(embed(m, next[0]) == apply(e, embed(m, s)));
      s = next[0];
    }
  }
}

TEST_CASE("exit trace never decreases") {
  Rng r(4);
  for (int t = 0; t < 20; ++t) {
    SequentialProgram p = testgen::random_exit_program(r, r.range(2, 3), r.range(2, 4));
    FlatModel m = flatten(p);
    CQState s = initial_cqstate(m);
    Rational last = 0;
    for (int k = 0; k < 64; ++k) {
      Rational now = s.trace_at(*m.exit_config);
      CHECK(now >= last);
      last = now;
      s = step(m, s, Selector(m.choice_arity.size(), 0));
    }
  }
}

TEST_CASE("to_automaton") {
  SequentialProgram p = hadamard_loop();
  QuantumAutomaton a = to_automaton(p);
  REQUIRE(a.actions.size() == 1);
  CHECK(channel_equal(a.actions[0], step_superop(p)));

  SequentialProgram two = coin_choice();
  two.act[2].next[0].push_back(Target{1, 0});
  CHECK(to_automaton(two).actions.size() == 4);

  Rng r(5);
  for (int t = 0; t < 30; ++t) {
    std::size_t locs = r.range(2, 4);
    SequentialProgram q = testgen::random_exit_program(r, 2, locs);
    for (std::size_t l = 0; l + 1 < locs; ++l)
      for (auto &tg : q.act[l].next)
        if (r.coin(0.4) && tg[0].loc != l)
          tg.push_back(Target{l, 0});
    QuantumAutomaton qa = to_automaton(q);
    CHECK(qa.actions.size() == choice_product(q));
    for (const auto &e : qa.actions)
      CHECK(is_trace_preserving(e));
  }
  CHECK_THROWS_AS(to_automaton(two, 3), SelectorExplosion);
}

TEST_CASE("concurrent programs step only the scheduled process") {
  ConcurrentProgram p = flip_and_idle();
  FlatModel m = flatten(p);
  CHECK(m.configs() == 4);
  CHECK(m.labels[m.initial_config] == "a0,b0@1");
  auto next = successors(p, initial_cqstate(m));
  REQUIRE(next.size() == 2);
  std::set<std::string> seen;
  for (const auto &s : next) {
    REQUIRE(s.blocks.size() == 1);
    auto [c, rho] = *s.blocks.begin();
    CHECK(rho == ket_bra(2, 1));
    seen.insert(m.labels[c]);
  }
  CHECK(seen == std::set<std::string>{"a1,b0@1", "a1,b0@2"});
  // Process 2 idles and keeps control.
  std::size_t c2 = m.config_index("a1,b0@2");
  auto after = successors(m, CQState::at(c2, ket_bra(2, 1)));
  REQUIRE(after.size() == 1);
  CHECK(after[0] == CQState::at(c2, ket_bra(2, 1)));
  for (const auto &e : to_automaton(p).actions)
    CHECK(is_trace_preserving(e));
}

TEST_CASE("check_terminates") {
  TerminationResult r = check_terminates(hadamard_loop(), 40);
  CHECK(r.kind == TerminationResult::AlmostTerminatesCandidate);
  CHECK(r.exit_trace_at_horizon == 1 - Rational(1, 1 << 20));

  SequentialProgram once;
  once.dim = 2;
  once.locations = {"m", "e"};
  once.act = {{SuperOp::identity(2), Measurement::from_matrices({ket_bra(2, 0), ket_bra(2, 1)}),
               {{Target{1, 0}}, {Target{1, 0}}}},
              {SuperOp::identity(2), Measurement::trivial(2), {{Target{1, 0}}}}};
  once.initial_state = ket_bra(2, 0);
  once.exit_location = 1;
  r = check_terminates(once);
  CHECK(r.kind == TerminationResult::Terminates);
  CHECK(r.step == 1);

  SequentialProgram stuck = once;
  stuck.act[0].next = {{Target{0, 0}}, {Target{1, 0}}};
  CHECK(check_terminates(stuck).kind == TerminationResult::No);
  CHECK_THROWS_AS(check_terminates(coin_choice()), NoExitLocation);
}

TEST_CASE("validation rejects malformed programs") {
  SequentialProgram p = hadamard_loop();
  p.act[3].next = {{Target{0, 0}}};
  CHECK_THROWS_AS(p.validate(), MalformedProgram);
  SequentialProgram q = hadamard_loop();
  q.act[0].channel = SuperOp(2, 2, {{kHalf, Mat::identity(2)}});
  CHECK_THROWS_AS(q.validate(), MalformedProgram);
}
